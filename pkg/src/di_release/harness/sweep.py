"""Privacy-utility trade-off over a list of privacy weights :math:`\\lambda`.

Every point of a sweep is an independent job: it trains a releaser with its own
seed, trains an attacker against it, and evaluates both on the test set. The seed of
a point only depends on the base seed and on :math:`\\lambda`, so a point gives the
same result whether it runs alone, in a longer sweep, or in a worker process.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import TYPE_CHECKING, Callable

import attrs
import numpy as np
import pandas as pd
from attrs import field, frozen

from di_release.errors import ContractViolationError, DataError, ReleaseError
from di_release.harness.attacker import check_disjoint, evaluate, train_attacker
from di_release.harness.training import train_adversarial
from di_release.numkit import child_seed
from di_release.utilities.executor import Executor

if TYPE_CHECKING:
    from collections.abc import Sequence

    from di_release.data import Dataset
    from di_release.harness.config import TrainConfig

_LOGGER = logging.getLogger(__name__)

TRADEOFF_COLUMNS = (
    "lambda",
    "nrmse",
    "attacker_balanced_accuracy_pct",
    "di_bound_mean",
    "seed",
)


def _check_nrmse(_: object, __: attrs.Attribute, value: float) -> None:
    if value < 0:
        msg = f"NRMSE cannot be negative, got {value}"
        raise ContractViolationError(msg)


def _check_percentage(_: object, __: attrs.Attribute, value: float) -> None:
    if not 0 <= value <= 100:  # noqa: PLR2004
        msg = f"Accuracy must lie in [0, 100], got {value}"
        raise ContractViolationError(msg)


@frozen
class TradeoffPoint:
    lam: float
    nrmse: float = field(validator=_check_nrmse)
    attacker_balanced_accuracy_pct: float = field(validator=_check_percentage)
    di_bound_mean: float
    seed: int

    def to_row(self) -> dict[str, float | int]:
        return {
            "lambda": self.lam,
            "nrmse": self.nrmse,
            "attacker_balanced_accuracy_pct": self.attacker_balanced_accuracy_pct,
            "di_bound_mean": self.di_bound_mean,
            "seed": self.seed,
        }


def point_seed(base_seed: int, lam: float) -> int:
    """Seed of the sweep point with privacy weight :code:`lam`.

    The seed has 63 bits, so that it fits signed integer columns.

    >>> point_seed(0, 0.5) == point_seed(0, 0.5)
    True
    >>> point_seed(0, 0.5) == point_seed(0, 1.0)
    False
    """
    lam_bits = int(np.float64(lam).view(np.uint64))
    return child_seed(base_seed, lam_bits) >> 1


def run_point(
    config: TrainConfig, lam: float, train: Dataset, val: Dataset, test: Dataset
) -> TradeoffPoint:
    """Train and evaluate the mechanism of a single privacy weight."""
    seed = point_seed(config.seed, lam)
    point_config = attrs.evolve(config, lam=lam, seed=seed)
    releaser, _, _ = train_adversarial(point_config, train, val)
    attacker = train_attacker(releaser, train, point_config, val)
    check_disjoint(train, test)
    evaluation = evaluate(
        releaser,
        attacker,
        test,
        seed=child_seed(seed, 1),
        observe_labels=config.observe_labels,
    )
    _LOGGER.info(
        "lambda=%g: NRMSE %.4f, attacker accuracy %.1f%% (per sequence %.1f%%)",
        lam,
        evaluation.nrmse,
        evaluation.balanced_accuracy_pct,
        evaluation.sequence_accuracy_pct,
    )
    return TradeoffPoint(
        lam=lam,
        nrmse=evaluation.nrmse,
        attacker_balanced_accuracy_pct=evaluation.balanced_accuracy_pct,
        di_bound_mean=evaluation.di_bound_mean,
        seed=seed,
    )


def _run_labelled_point(
    config: TrainConfig, lam: float, train: Dataset, val: Dataset, test: Dataset
) -> TradeoffPoint:
    try:
        return run_point(config, lam, train, val, test)
    except ReleaseError as exc:
        msg = f"Sweep point lambda={lam:g} failed: {exc}"
        raise ReleaseError(msg) from exc


def sweep_lambda(  # noqa: PLR0913
    config: TrainConfig,
    lambdas: Sequence[float],
    data: tuple[Dataset, Dataset, Dataset],
    *,
    workers: int = 1,
    on_point: Callable[[TradeoffPoint], None] | None = None,
) -> list[TradeoffPoint]:
    """Run the full pipeline for every privacy weight.

    A point that fails is logged and left out; the sweep continues with the other
    points. Results are returned in the order of :code:`lambdas`, also when they are
    computed by a pool of :code:`workers` processes.

    Args:
        config: Training configuration shared by all points.
        lambdas: Privacy weights, each non-negative.
        data: Normalized training, validation, and test sets.
        workers: Number of worker processes; one runs the points in this process.
        on_point: Called with every finished point, for instance to store it.
    """
    if not lambdas:
        msg = "A sweep needs at least one privacy weight"
        raise ContractViolationError(msg)
    if any(lam < 0 for lam in lambdas):
        msg = f"Privacy weights must be non-negative, got {list(lambdas)}"
        raise ContractViolationError(msg)
    train, val, test = data
    points: list[TradeoffPoint] = []

    def collect(point: TradeoffPoint | None) -> None:
        if point is None:
            return
        points.append(point)
        if on_point is not None:
            on_point(point)

    with Executor(raise_exception=False) as execute:
        if workers <= 1:
            for lam in lambdas:
                collect(execute(_run_labelled_point, config, lam, train, val, test))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_run_labelled_point, config, lam, train, val, test)
                    for lam in lambdas
                ]
                for future in futures:
                    collect(execute(future.result))
    n_failed = len(lambdas) - len(points)
    if n_failed:
        _LOGGER.warning("%d of %d sweep points failed", n_failed, len(lambdas))
    return points


def write_tradeoff_csv(points: Sequence[TradeoffPoint], path: Path | str) -> None:
    """Write the points sorted by :math:`\\lambda`."""
    frame = pd.DataFrame([p.to_row() for p in points], columns=list(TRADEOFF_COLUMNS))
    frame = frame.sort_values("lambda", kind="stable")
    frame.to_csv(path, index=False, lineterminator="\n")


def read_tradeoff_csv(path: Path | str) -> list[TradeoffPoint]:
    """Read the points of an earlier, possibly interrupted, sweep."""
    path = Path(path)
    if not path.exists():
        return []
    frame = pd.read_csv(path)
    if tuple(frame.columns) != TRADEOFF_COLUMNS:
        msg = f"{path} does not have the columns {', '.join(TRADEOFF_COLUMNS)}"
        raise DataError(msg)
    return [
        TradeoffPoint(
            lam=float(row["lambda"]),
            nrmse=float(row["nrmse"]),
            attacker_balanced_accuracy_pct=float(row["attacker_balanced_accuracy_pct"]),
            di_bound_mean=float(row["di_bound_mean"]),
            seed=int(row["seed"]),
        )
        for row in frame.to_dict("records")
    ]
