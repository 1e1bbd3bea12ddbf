"""Train a releaser with its adversary, then attack and evaluate it."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import attrs
import pandas as pd

from di_release.cli.config import load_dataset, prepare_splits
from di_release.errors import DivergenceError
from di_release.harness.attacker import check_disjoint, evaluate, train_attacker
from di_release.harness.training import train_adversarial
from di_release.numkit import child_seed
from di_release.privmech import MechanismBundle
from di_release.utilities.yaml import write_provenance

if TYPE_CHECKING:
    from pathlib import Path

    from di_release.cli.config import RunConfig
    from di_release.harness.attacker import Evaluation

_LOGGER = logging.getLogger(__name__)

BUNDLE_FILENAME = "bundle.npz"
HISTORY_FILENAME = "history.csv"
SUMMARY_FILENAME = "summary.csv"

_EVALUATION = 1


def main(run: RunConfig) -> Evaluation:
    config = run.train
    dataset = load_dataset(run.data)
    (train, val, test), normalization = prepare_splits(run.data, dataset)
    run.out.mkdir(parents=True, exist_ok=True)
    run.echo()
    history_path = run.out / HISTORY_FILENAME
    try:
        releaser, _, history = train_adversarial(config, train, val)
    except DivergenceError as exc:
        if exc.history is not None:
            exc.history.write_csv(history_path)
            _LOGGER.error("Wrote the history up to the divergence to %s", history_path)  # noqa: TRY400
        raise
    history.write_csv(history_path)
    _LOGGER.info("Best validation epoch: %s", history.best_epoch)

    bundle = MechanismBundle(
        releaser=releaser,
        normalization=normalization,
        alphabet_size=train.alphabet_size,
        sequence_length=train.sequence_length,
        observe_labels=config.observe_labels,
        split=run.data.split,
        dataset_fingerprint=dataset.fingerprint(),
    )
    bundle_path = run.out / BUNDLE_FILENAME
    bundle.save(bundle_path)
    write_provenance(bundle_path, preset=run.preset, seed=config.seed, lam=config.lam)

    attacker = train_attacker(releaser, train, config, val)
    check_disjoint(train, test)
    evaluation = evaluate(
        releaser,
        attacker,
        test,
        seed=child_seed(config.seed, _EVALUATION),
        observe_labels=config.observe_labels,
    )
    write_summary(evaluation, run.out / SUMMARY_FILENAME, lam=config.lam)
    print(format_summary(evaluation, lam=config.lam))  # noqa: T201
    return evaluation


def write_summary(evaluation: Evaluation, path: Path, lam: float | None = None) -> None:
    row = attrs.asdict(evaluation)
    if lam is not None:
        row = {"lambda": lam, **row}
    pd.DataFrame([row]).to_csv(path, index=False, lineterminator="\n")


def format_summary(evaluation: Evaluation, lam: float | None = None) -> str:
    """One line with the utility and privacy of a release.

    >>> from di_release.harness.attacker import Evaluation
    >>> evaluation = Evaluation(0.0312, 61.3, 70.0, 0.42, n_sequences=150)
    >>> format_summary(evaluation, lam=0.5)
    'lambda=0.5 NRMSE=0.0312 attacker_balanced_accuracy=61.3% sequence_accuracy=70.0% di_bound=0.4200 (150 test sequences)'
    """
    prefix = "" if lam is None else f"lambda={lam:g} "
    return (
        f"{prefix}NRMSE={evaluation.nrmse:.4f}"
        f" attacker_balanced_accuracy={evaluation.balanced_accuracy_pct:.1f}%"
        f" sequence_accuracy={evaluation.sequence_accuracy_pct:.1f}%"
        f" di_bound={evaluation.di_bound_mean:.4f}"
        f" ({evaluation.n_sequences} test sequences)"
    )
