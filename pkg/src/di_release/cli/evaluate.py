"""Attack a trained releaser bundle on a dataset and report its metrics."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

from di_release.cli.config import load_dataset
from di_release.cli.train import format_summary, write_summary
from di_release.data import apply_normalization, split
from di_release.errors import DataError
from di_release.harness.attacker import check_disjoint, evaluate, train_attacker
from di_release.numkit import child_seed
from di_release.privmech import MechanismBundle

if TYPE_CHECKING:
    from pathlib import Path

    from di_release.cli.config import RunConfig
    from di_release.data import Dataset
    from di_release.harness.attacker import Evaluation

_LOGGER = logging.getLogger(__name__)

EVAL_FILENAME = "eval.csv"

_EVALUATION = 1


def main(run: RunConfig, bundle_path: Path) -> Evaluation:
    bundle = MechanismBundle.load(bundle_path)
    train, val, test = bundle_splits(run, bundle)
    config = run.train
    attacker = train_attacker(bundle.releaser, train, config, val)
    check_disjoint(train, test)
    evaluation = evaluate(
        bundle.releaser,
        attacker,
        test,
        seed=child_seed(config.seed, _EVALUATION),
        observe_labels=bundle.observe_labels,
    )
    run.out.mkdir(parents=True, exist_ok=True)
    write_summary(evaluation, run.out / EVAL_FILENAME)
    print(format_summary(evaluation))  # noqa: T201
    return evaluation


def bundle_splits(
    run: RunConfig, bundle: MechanismBundle
) -> tuple[Dataset, Dataset, Dataset]:
    """Split the configured dataset and scale it with the constants of the bundle.

    The split is the one recorded in the bundle, so the test set contains no sequence
    that the releaser was trained or validated on.
    """
    dataset = load_dataset(run.data)
    check_compatible(bundle, dataset)
    check_same_dataset(bundle, dataset)
    if bundle.split != run.data.split:
        _LOGGER.info("Using the split the releaser was trained on: %s", bundle.split)
    parts = split(dataset, bundle.split)  # type: ignore[arg-type]
    train, val, test = (apply_normalization(d, bundle.normalization) for d in parts)
    return train, val, test


def check_compatible(bundle: MechanismBundle, dataset: Dataset) -> None:
    if dataset.alphabet_size != bundle.alphabet_size:
        msg = (
            f"The bundle was trained on {bundle.alphabet_size} labels, the dataset"
            f" has {dataset.alphabet_size}"
        )
        raise DataError(msg)
    if dataset.sequence_length != bundle.sequence_length:
        msg = (
            f"The bundle was trained on sequences of {bundle.sequence_length} steps,"
            f" the dataset has {dataset.sequence_length}"
        )
        raise DataError(msg)
    expected = 1 + (bundle.alphabet_size if bundle.observe_labels else 0)
    if bundle.releaser.observation_dim != expected:
        msg = (
            f"The releaser observes {bundle.releaser.observation_dim} values per step,"
            f" the dataset provides {expected}"
        )
        raise DataError(msg)


def check_same_dataset(bundle: MechanismBundle, dataset: Dataset) -> None:
    if bundle.split is None or bundle.dataset_fingerprint is None:
        msg = "The bundle does not record the data split its releaser was trained on"
        raise DataError(msg)
    if dataset.fingerprint() != bundle.dataset_fingerprint:
        msg = (
            "The dataset differs from the one the releaser was trained on, its test"
            " split cannot be reconstructed"
        )
        raise DataError(msg)
