from __future__ import annotations

import pytest

from di_release.errors import ContractViolationError
from di_release.harness.attacker import (
    Evaluation,
    check_disjoint,
    evaluate,
    train_attacker,
)
from di_release.numkit import SeededRng
from di_release.privmech import Attacker, Releaser


@pytest.fixture(scope="module")
def releaser() -> Releaser:
    return Releaser.create(1, 1, (4,), noise_dim=2, rng=SeededRng(3))


class TestTrainAttacker:
    def test_with_validation_set(self, releaser, tiny_splits, tiny_config):
        train, val, _ = tiny_splits
        attacker = train_attacker(releaser, train, tiny_config, val)
        assert isinstance(attacker, Attacker)
        assert attacker.alphabet_size == train.alphabet_size

    def test_holdout_without_validation_set(self, releaser, tiny_splits, tiny_config):
        train, _, _ = tiny_splits
        first = train_attacker(releaser, train, tiny_config)
        second = train_attacker(releaser, train, tiny_config)
        assert (first.net.parameters == second.net.parameters).all()

    def test_empty_training_set(self, releaser, tiny_splits, tiny_config):
        train, val, _ = tiny_splits
        with pytest.raises(ContractViolationError, match="non-empty"):
            train_attacker(releaser, train.subset([]), tiny_config, val)


class TestEvaluate:
    def test_ranges(self, releaser, tiny_splits, tiny_config):
        train, val, test = tiny_splits
        attacker = train_attacker(releaser, train, tiny_config, val)
        evaluation = evaluate(releaser, attacker, test, seed=1)
        assert isinstance(evaluation, Evaluation)
        assert evaluation.n_sequences == len(test)
        assert evaluation.nrmse > 0
        assert 0 <= evaluation.balanced_accuracy_pct <= 100
        assert 0 <= evaluation.sequence_accuracy_pct <= 100
        assert evaluation.di_bound_mean >= 0

    def test_reproducible(self, releaser, tiny_splits, tiny_config):
        train, val, test = tiny_splits
        attacker = train_attacker(releaser, train, tiny_config, val)
        assert evaluate(releaser, attacker, test, seed=1) == evaluate(
            releaser, attacker, test, seed=1
        )

    def test_empty_test_set(self, releaser, tiny_splits, tiny_config):
        train, val, test = tiny_splits
        attacker = train_attacker(releaser, train, tiny_config, val)
        with pytest.raises(ContractViolationError, match="empty test set"):
            evaluate(releaser, attacker, test.subset([]))


class TestCheckDisjoint:
    def test_disjoint_splits(self, tiny_splits):
        train, _, test = tiny_splits
        check_disjoint(train, test)

    def test_overlap(self, tiny_splits):
        train, _, test = tiny_splits
        leaky = test.subset([0, 1])
        with pytest.raises(ContractViolationError, match="2 test sequences"):
            check_disjoint(leaky, test)
