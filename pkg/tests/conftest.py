from __future__ import annotations

import pytest

from di_release.data import Dataset, SplitSpec, normalize_fit_apply, split
from di_release.data.synthetic import SyntheticParams
from di_release.harness.config import NetworkSpec, TrainConfig
from di_release.neural import StackedNet, init_stacked_net
from di_release.numkit import SeededRng


@pytest.fixture(scope="session")
def tiny_dataset() -> Dataset:
    """Two houses of twenty days, 40 raw occupancy sequences."""
    return SyntheticParams(n_houses=2, days_per_house=20).generate(seed=0)


@pytest.fixture(scope="session")
def tiny_splits(tiny_dataset: Dataset) -> tuple[Dataset, Dataset, Dataset]:
    train, val, test = split(tiny_dataset, SplitSpec(seed=0))
    (train, val, test), _ = normalize_fit_apply(train, val, test)
    return train, val, test


@pytest.fixture(scope="session")
def tiny_config() -> TrainConfig:
    return TrainConfig(
        batch_size=8,
        adversary_steps=1,
        noise_dim=2,
        epochs=2,
        releaser=NetworkSpec(layers=1, cells=4),
        adversary=NetworkSpec(layers=1, cells=4),
        attacker=NetworkSpec(layers=1, cells=4),
        attacker_epochs=2,
        lambdas=(0.0, 1.0),
    )


@pytest.fixture(scope="session")
def small_net() -> StackedNet:
    """Two layers of eight cells with a linear head, 946 parameters."""
    return init_stacked_net(
        input_dim=3,
        hidden_dims=(8, 8),
        output_dim=2,
        head_kind="linear",
        rng=SeededRng(1),
    )
