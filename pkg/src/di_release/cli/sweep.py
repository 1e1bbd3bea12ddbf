"""Sweep the privacy weight and collect the privacy-utility trade-off.

Finished points are appended to :file:`tradeoff.csv` as soon as they are available.
Running the sweep again only computes the privacy weights that are missing from that
file, so an interrupted sweep can be resumed. Rows with a seed that does not match the
current base seed are computed again.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

from di_release.cli.config import prepare_splits
from di_release.errors import ReleaseError
from di_release.harness.sweep import (
    TradeoffPoint,
    point_seed,
    read_tradeoff_csv,
    sweep_lambda,
    write_tradeoff_csv,
)

if TYPE_CHECKING:
    from di_release.cli.config import RunConfig

_LOGGER = logging.getLogger(__name__)

TRADEOFF_FILENAME = "tradeoff.csv"


def main(run: RunConfig, workers: int = 1) -> list[TradeoffPoint]:
    path = run.out / TRADEOFF_FILENAME
    stored = read_tradeoff_csv(path)
    points = [p for p in stored if p.seed == point_seed(run.train.seed, p.lam)]
    if len(points) < len(stored):
        _LOGGER.warning(
            "Recomputing %d points of %s that were computed with another seed",
            len(stored) - len(points),
            path,
        )
    finished = {p.lam for p in points}
    pending = [lam for lam in dict.fromkeys(run.train.lambdas) if lam not in finished]
    if finished:
        _LOGGER.info("Resuming sweep, %d points already in %s", len(finished), path)
    if not pending:
        _LOGGER.info("All %d privacy weights have been computed", len(finished))
        return sorted(points, key=lambda p: p.lam)
    data, _ = prepare_splits(run.data)
    run.out.mkdir(parents=True, exist_ok=True)
    run.echo()

    def store(point: TradeoffPoint) -> None:
        points.append(point)
        write_tradeoff_csv(points, path)

    computed = sweep_lambda(run.train, pending, data, workers=workers, on_point=store)
    n_failed = len(pending) - len(computed)
    if n_failed:
        msg = f"{n_failed} of {len(pending)} sweep points failed, see the log above"
        raise ReleaseError(msg)
    return sorted(points, key=lambda p: p.lam)
