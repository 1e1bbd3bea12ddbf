"""Train, sweep, and analyze privacy-preserving releases of smart-meter data.

Every subcommand resolves the effective configuration from a preset, an optional TOML
file, and the flags, and writes its artifacts to the output directory.
"""

from __future__ import annotations

import logging
import sys
from argparse import ArgumentParser
from pathlib import Path
from typing import TYPE_CHECKING

from di_release.cli import evaluate, gen_data, psd, sweep, train
from di_release.cli.config import resolve_config
from di_release.errors import ConfigError, ReleaseError
from di_release.harness.config import PRESETS

if TYPE_CHECKING:
    from argparse import Namespace
    from collections.abc import Sequence

    from di_release.cli.config import RunConfig

_LOGGER = logging.getLogger(__name__)


def main(argv: Sequence[str] | None = None) -> int:
    parser = _create_argparse()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        run = resolve_config(args)
        _execute(args, run)
    except ReleaseError as exc:
        _LOGGER.error("%s", exc)  # noqa: TRY400
        return exc.exit_code
    return 0


def _execute(args: Namespace, run: RunConfig) -> None:
    if args.command == "gen-data":
        gen_data.main(run)
    elif args.command == "train":
        train.main(run)
    elif args.command == "sweep":
        sweep.main(run, workers=args.workers)
    elif args.command == "psd":
        psd.main(run, args.bundle, args.realizations)
    elif args.command == "eval":
        evaluate.main(run, args.bundle)
    else:
        msg = f"Unknown command {args.command!r}"
        raise ConfigError(msg)


def _create_argparse() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        default=None,
        help="TOML file with [data], [train], and [output] sections.",
        type=Path,
    )
    common.add_argument(
        "--out",
        default=None,
        help="Directory for the output artifacts; overrides output.dir.",
        type=Path,
    )
    common.add_argument(
        "--preset",
        choices=sorted(PRESETS),
        default=None,
        help="Named set of data and training parameters to start from.",
    )
    common.add_argument(
        "--seed",
        default=None,
        help="Seed for data generation, splitting, and training.",
        type=int,
    )
    common.add_argument(
        "--verbose",
        action="store_true",
        default=False,
        help="Log debug messages.",
    )

    parser = ArgumentParser(prog="di-release", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser(
        "gen-data",
        help="Write a synthetic dataset as CSV.",
        parents=[common],
    )
    for command, description in [
        ("train", "Train a releaser and evaluate it against a fresh attacker."),
        ("sweep", "Train and evaluate releasers for several privacy weights."),
        ("psd", "Compute the PSD of the consumption and of the release error."),
        ("eval", "Evaluate a trained releaser against a fresh attacker."),
    ]:
        subparser = subparsers.add_parser(command, help=description, parents=[common])
        subparser.add_argument(
            "--data",
            default=None,
            help="CSV file with house_id, timestamp, consumption_kwh, and label.",
            type=Path,
        )
        if command == "sweep":
            subparser.add_argument(
                "--lambda",
                default=None,
                dest="lambdas",
                help="Comma-separated privacy weights, e.g. 0,0.5,1.",
                type=_to_floats,
            )
            subparser.add_argument(
                "--workers",
                default=1,
                help="Number of processes that compute sweep points in parallel.",
                type=int,
            )
        if command in {"psd", "eval"}:
            subparser.add_argument(
                "--bundle",
                help="Mechanism bundle written by the train command.",
                required=True,
                type=Path,
            )
        if command == "psd":
            subparser.add_argument(
                "--realizations",
                default=psd.DEFAULT_REALIZATIONS,
                help="Number of noise realizations to average over.",
                type=int,
            )
    return parser


def _to_floats(arg: str) -> tuple[float, ...]:
    """Parse a comma-separated list of numbers.

    >>> _to_floats("0, 0.5,1")
    (0.0, 0.5, 1.0)
    """
    return tuple(float(item) for item in arg.split(",") if item.strip())


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(format="%(levelname)s [%(name)s] %(message)s", level=level)
    logging.getLogger().setLevel(level)


if __name__ == "__main__":
    sys.exit(main())
