"""Write a synthetic dataset in the CSV ingestion schema."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import attrs

from di_release.data.synthetic import write_csv
from di_release.errors import ConfigError
from di_release.utilities.yaml import write_provenance

if TYPE_CHECKING:
    from pathlib import Path

    from di_release.cli.config import RunConfig

_LOGGER = logging.getLogger(__name__)

DATASET_FILENAME = "dataset.csv"


def main(run: RunConfig) -> Path:
    if run.data.source != "synthetic":
        msg = "gen-data only generates synthetic data, the data source is a CSV file"
        raise ConfigError(msg)
    params = run.data.synthetic
    dataset = params.generate(run.data.seed)
    run.out.mkdir(parents=True, exist_ok=True)
    run.echo()
    path = run.out / DATASET_FILENAME
    n_rows = write_csv(dataset, path)
    write_provenance(path, seed=run.data.seed, synthetic=attrs.asdict(params))
    _LOGGER.info("Wrote %d rows of %d sequences to %s", n_rows, len(dataset), path)
    return path
