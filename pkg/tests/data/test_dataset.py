from __future__ import annotations

import numpy as np
import pytest

from di_release.data import (
    Batch,
    Dataset,
    Normalization,
    SequenceSample,
    SplitSpec,
    apply_normalization,
    minibatches,
    normalize_fit_apply,
    split,
)
from di_release.errors import ConfigError, ContractViolationError, DataError


def _dataset(n: int, alphabet_size: int = 2, length: int = 4) -> Dataset:
    rng = np.random.default_rng(n)
    samples = [
        SequenceSample(
            y=rng.uniform(0, 3, size=length),
            x=rng.integers(0, alphabet_size, size=length),
            house_id=i % 5,
            day=i // 5,
        )
        for i in range(n)
    ]
    return Dataset(samples, alphabet_size=alphabet_size, sequence_length=length)


class TestDataset:
    def test_wrong_length(self):
        sample = SequenceSample(y=[1.0, 2.0], x=[0, 1], house_id=0)
        with pytest.raises(DataError, match="has length 2, expected 24"):
            Dataset([sample], alphabet_size=2)

    def test_label_out_of_range(self):
        sample = SequenceSample(y=[1.0, 2.0], x=[0, 2], house_id=0)
        with pytest.raises(DataError, match=r"outside \[0, 2\)"):
            Dataset([sample], alphabet_size=2, sequence_length=2)

    def test_negative_raw_consumption(self):
        sample = SequenceSample(y=[1.0, -0.5], x=[0, 1], house_id=0)
        with pytest.raises(DataError, match="Negative consumption"):
            Dataset([sample], alphabet_size=2, sequence_length=2)

    def test_label_changes_within_identity_sequence(self):
        sample = SequenceSample(y=[1.0, 2.0], x=[0, 1], house_id=0)
        with pytest.raises(DataError, match="changes within the sequence"):
            Dataset(
                [sample],
                alphabet_size=2,
                label_semantics="per-sequence",
                sequence_length=2,
            )

    def test_single_label_alphabet(self):
        with pytest.raises(DataError, match="at least two sensitive labels"):
            Dataset([], alphabet_size=1)

    def test_mismatching_sample(self):
        with pytest.raises(ContractViolationError, match="equal length"):
            SequenceSample(y=[1.0, 2.0], x=[0], house_id=0)

    def test_describe(self):
        dataset = _dataset(10)
        summary = dataset.describe()
        assert summary["sequences"] == 10
        assert summary["houses"] == 5
        assert sum(summary["label_frequencies"].values()) == pytest.approx(1.0)

    def test_stack(self):
        batch = _dataset(6).stack()
        assert batch.y.shape == (4, 1, 6)
        assert batch.x.shape == (4, 6)
        assert batch.size == 6

    def test_fingerprint(self):
        dataset = _dataset(10)
        assert dataset.fingerprint() == _dataset(10).fingerprint()
        assert dataset.fingerprint() != dataset.subset(range(9)).fingerprint()
        assert dataset.fingerprint() != dataset.subset(range(9, -1, -1)).fingerprint()
        relabelled = [
            SequenceSample(y=s.y, x=1 - s.x, house_id=s.house_id, day=s.day)
            for s in dataset.samples
        ]
        assert dataset.fingerprint() != Dataset(
            relabelled, alphabet_size=2, sequence_length=4
        ).fingerprint()


class TestBatch:
    def test_observations_with_labels(self):
        samples = [
            SequenceSample(y=[0.5, 1.0], x=[0, 2], house_id=0),
            SequenceSample(y=[0.1, 0.2], x=[1, 1], house_id=1),
        ]
        batch = Batch.from_samples(samples, np.arange(2))
        w_seq = batch.observations(alphabet_size=3, observe_labels=True)
        assert w_seq.shape == (2, 4, 2)
        np.testing.assert_array_equal(w_seq[:, 0, :], batch.y[:, 0, :])
        np.testing.assert_array_equal(w_seq[1, 1:, 0], [0, 0, 1])
        np.testing.assert_array_equal(w_seq[0, 1:, 1], [0, 1, 0])

    def test_observations_without_labels(self):
        batch = _dataset(3).stack()
        assert batch.observations(alphabet_size=2) is batch.y


class TestSplit:
    def test_sizes(self):
        train, val, test = split(_dataset(1000), SplitSpec())
        assert (len(train), len(val), len(test)) == (765, 85, 150)

    def test_disjoint_and_complete(self):
        dataset = _dataset(200)
        parts = split(dataset, SplitSpec(seed=3))
        keys = [s.key for part in parts for s in part.samples]
        assert len(keys) == len(set(keys)) == 200

    def test_deterministic(self):
        dataset = _dataset(50)
        first = split(dataset, SplitSpec(seed=1))
        second = split(dataset, SplitSpec(seed=1))
        for a, b in zip(first, second):
            assert [s.key for s in a.samples] == [s.key for s in b.samples]

    @pytest.mark.parametrize("ratio", [0.0, 1.0, 1.5])
    def test_invalid_ratio(self, ratio: float):
        with pytest.raises(ConfigError, match="must lie in"):
            SplitSpec(train_ratio=ratio)

    def test_empty(self):
        with pytest.raises(ContractViolationError, match="empty dataset"):
            split(Dataset([], alphabet_size=2), SplitSpec())


class TestNormalization:
    def test_fit_on_training_set_only(self):
        train, val, test = split(_dataset(100), SplitSpec())
        (n_train, n_val, n_test), normalization = normalize_fit_apply(train, val, test)
        train_values = np.concatenate([s.y for s in n_train.samples])
        assert train_values.min() == 0.0
        assert train_values.max() == 1.0
        raw_train = np.concatenate([s.y for s in train.samples])
        assert normalization == Normalization.fit(raw_train)
        assert n_val.normalization == n_test.normalization == normalization

    def test_test_values_may_leave_unit_range(self):
        normalization = Normalization(minimum=1.0, maximum=2.0)
        np.testing.assert_allclose(
            normalization.apply(np.array([0.0, 3.0])), [-1.0, 2.0]
        )

    def test_invert(self):
        normalization = Normalization(minimum=0.3, maximum=2.0)
        values = np.array([0.3, 1.1, 2.7])
        np.testing.assert_allclose(
            normalization.invert(normalization.apply(values)), values
        )

    def test_constant_range(self):
        with pytest.raises(DataError, match="constant range"):
            Normalization.fit(np.ones(5))

    def test_apply_twice(self):
        (train,), normalization = normalize_fit_apply(_dataset(10))
        with pytest.raises(ContractViolationError, match="already been normalized"):
            apply_normalization(train, normalization)

    def test_negative_values_allowed_after_normalization(self):
        train, _, test = split(_dataset(100), SplitSpec())
        normalization = Normalization(minimum=1.0, maximum=2.0)
        normalized = apply_normalization(test, normalization)
        assert min(s.y.min() for s in normalized.samples) < 0
        assert len(normalized) == len(test)


class TestMinibatches:
    def test_every_sample_once(self):
        dataset = _dataset(23)
        batches = list(minibatches(dataset, batch_size=5, seed=0))
        assert [b.size for b in batches] == [5, 5, 5, 5, 3]
        indices = np.concatenate([b.indices for b in batches])
        assert sorted(indices.tolist()) == list(range(23))

    def test_seed_changes_order(self):
        dataset = _dataset(23)
        first = next(minibatches(dataset, batch_size=23, seed=0)).indices
        second = next(minibatches(dataset, batch_size=23, seed=1)).indices
        assert not np.array_equal(first, second)

    def test_invalid_batch_size(self):
        with pytest.raises(ContractViolationError, match="at least 1"):
            list(minibatches(_dataset(3), batch_size=0, seed=0))
