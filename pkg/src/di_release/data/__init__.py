"""Household consumption sequences, their splits, normalization, and batching.

A `Dataset` holds daily sequences of hourly consumption :math:`y^T` together with
the sensitive labels :math:`x^T`. Datasets are immutable; every operation in this
module returns new instances.
"""

from __future__ import annotations

import hashlib
import logging
import math
from collections import Counter
from typing import TYPE_CHECKING, Literal

import attrs
import numpy as np
from attrs import field, frozen

from di_release.errors import ConfigError, ContractViolationError, DataError
from di_release.numkit import SeededRng

if TYPE_CHECKING:
    from collections.abc import Iterator, Sequence

_LOGGER = logging.getLogger(__name__)

LabelSemantics = Literal["per-timestep", "per-sequence"]
"""Occupancy labels change within a day, identity labels are constant per sequence."""

DEFAULT_SEQUENCE_LENGTH = 24


def as_float_array(values: Sequence[float] | np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype=np.float64)


def as_int_array(values: Sequence[int] | np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype=np.int64)


@frozen(eq=False)
class SequenceSample:
    """One day of hourly consumption of a house and its sensitive labels."""

    y: np.ndarray = field(converter=as_float_array)
    x: np.ndarray = field(converter=as_int_array)
    house_id: int
    day: int = 0
    """Chronological index of the day within the house."""

    def __attrs_post_init__(self) -> None:
        if self.y.ndim != 1 or self.y.shape != self.x.shape:
            msg = (
                f"Consumption of shape {self.y.shape} and labels of shape"
                f" {self.x.shape} must be sequences of equal length"
            )
            raise ContractViolationError(msg)

    @property
    def key(self) -> tuple[int, int]:
        """Identifier of the sample, unique within a dataset."""
        return self.house_id, self.day


@frozen
class Normalization:
    """Min-max constants fitted on a training set.

    >>> normalization = Normalization(minimum=2, maximum=6)
    >>> normalization.apply(np.array([2.0, 4.0, 8.0]))
    array([0. , 0.5, 1.5])
    """

    minimum: float = field(converter=float)
    maximum: float = field(converter=float)

    def __attrs_post_init__(self) -> None:
        if not self.maximum > self.minimum:
            msg = (
                "Cannot normalize consumption with a constant range"
                f" [{self.minimum}, {self.maximum}]"
            )
            raise DataError(msg)

    @classmethod
    def fit(cls, values: np.ndarray) -> Normalization:
        return cls(minimum=float(np.min(values)), maximum=float(np.max(values)))

    @property
    def scale(self) -> float:
        return self.maximum - self.minimum

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Map the training range to :math:`[0, 1]`. Values outside are not clipped."""
        return (values - self.minimum) / self.scale

    def invert(self, values: np.ndarray) -> np.ndarray:
        return values * self.scale + self.minimum


@frozen(eq=False)
class Dataset:
    samples: tuple[SequenceSample, ...] = field(converter=tuple)
    alphabet_size: int
    label_semantics: LabelSemantics = "per-timestep"
    normalization: Normalization | None = None
    """Constants that were applied to :code:`y`, or `None` for raw kWh values."""
    sequence_length: int = DEFAULT_SEQUENCE_LENGTH

    def __attrs_post_init__(self) -> None:
        if self.alphabet_size < 2:  # noqa: PLR2004
            msg = f"Need at least two sensitive labels, got {self.alphabet_size}"
            raise DataError(msg)
        if self.label_semantics not in {"per-timestep", "per-sequence"}:
            msg = f"Unknown label semantics {self.label_semantics!r}"
            raise ContractViolationError(msg)
        for sample in self.samples:
            self.__check_sample(sample)

    def __check_sample(self, sample: SequenceSample) -> None:
        where = f"house {sample.house_id}, day {sample.day}"
        if sample.y.size != self.sequence_length:
            msg = (
                f"Sample of {where} has length {sample.y.size}, expected"
                f" {self.sequence_length}"
            )
            raise DataError(msg)
        if sample.x.min() < 0 or sample.x.max() >= self.alphabet_size:
            msg = f"Labels of {where} are outside [0, {self.alphabet_size})"
            raise DataError(msg)
        if self.normalization is None and (sample.y < 0).any():
            msg = f"Negative consumption in {where}"
            raise DataError(msg)
        if self.label_semantics == "per-sequence" and (sample.x != sample.x[0]).any():
            msg = f"Label of {where} changes within the sequence"
            raise DataError(msg)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def house_ids(self) -> list[int]:
        return sorted({s.house_id for s in self.samples})

    def subset(self, indices: Sequence[int] | np.ndarray) -> Dataset:
        return attrs.evolve(self, samples=[self.samples[i] for i in indices])

    def fingerprint(self) -> str:
        """SHA-256 digest of the samples in dataset order.

        >>> sample = SequenceSample(y=[0.5, 1.0], x=[0, 1], house_id=3)
        >>> dataset = Dataset([sample], alphabet_size=2, sequence_length=2)
        >>> len(dataset.fingerprint())
        64
        >>> dataset.fingerprint() == dataset.subset([]).fingerprint()
        False
        """
        digest = hashlib.sha256()
        for sample in self.samples:
            digest.update(np.array(sample.key, dtype=np.int64).tobytes())
            digest.update(sample.y.tobytes())
            digest.update(sample.x.tobytes())
        return digest.hexdigest()

    def stack(self) -> Batch:
        """All samples as one batch, in dataset order."""
        return Batch.from_samples(self.samples, np.arange(len(self.samples)))

    def describe(self) -> dict[str, object]:
        """Summarize size, houses, and label frequencies.

        >>> sample = SequenceSample(y=[0.5, 1.0], x=[0, 1], house_id=3)
        >>> summary = Dataset([sample], alphabet_size=2, sequence_length=2).describe()
        >>> summary["sequences"], summary["label_frequencies"]
        (1, {0: 0.5, 1: 0.5})
        """
        counts: Counter[int] = Counter()
        for sample in self.samples:
            counts.update(sample.x.tolist())
        total = sum(counts.values())
        return {
            "sequences": len(self.samples),
            "houses": len(self.house_ids),
            "sequence_length": self.sequence_length,
            "label_frequencies": {
                label: counts[label] / total
                for label in range(self.alphabet_size)
                if counts[label]
            },
        }


@frozen(eq=False)
class Batch:
    y: np.ndarray
    """Consumption of shape :code:`(T, 1, B)`."""
    x: np.ndarray
    """Labels of shape :code:`(T, B)`."""
    indices: np.ndarray
    """Positions of the samples in their dataset."""
    keys: tuple[tuple[int, int], ...] = ()

    @classmethod
    def from_samples(
        cls, samples: Sequence[SequenceSample], indices: np.ndarray
    ) -> Batch:
        chosen = [samples[i] for i in indices]
        return cls(
            y=np.stack([s.y for s in chosen], axis=1)[:, None, :],
            x=np.stack([s.x for s in chosen], axis=1),
            indices=np.asarray(indices),
            keys=tuple(s.key for s in chosen),
        )

    @property
    def size(self) -> int:
        return self.x.shape[1]

    def observations(
        self, alphabet_size: int, observe_labels: bool = False
    ) -> np.ndarray:
        """Releaser observations :math:`w_t`, optionally with one-hot labels."""
        if not observe_labels:
            return self.y
        one_hot = np.eye(alphabet_size)[self.x]  # (T, B, |X|)
        return np.concatenate([self.y, one_hot.transpose(0, 2, 1)], axis=1)


@frozen
class SplitSpec:
    train_ratio: float = field(default=0.85)
    val_fraction_of_train: float = field(default=0.10)
    seed: int = 0

    @train_ratio.validator
    @val_fraction_of_train.validator
    def _check_ratio(self, attribute: attrs.Attribute, value: float) -> None:
        if not 0 < value < 1:
            msg = f"{attribute.name} must lie in (0, 1), got {value}"
            raise ConfigError(msg)


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Shuffle the sequences and cut them into training, validation, and test sets.

    The sets have :math:`\\lfloor n r (1-v)\\rfloor`, :math:`\\lfloor n r v\\rfloor`,
    and the remaining sequences, where :math:`r` is the train ratio and :math:`v` the
    validation fraction of the training data.
    """
    n = len(dataset)
    if n == 0:
        msg = "Cannot split an empty dataset"
        raise ContractViolationError(msg)
    n_train = math.floor(n * spec.train_ratio * (1 - spec.val_fraction_of_train) + 1e-9)
    n_val = math.floor(n * spec.train_ratio * spec.val_fraction_of_train + 1e-9)
    order = SeededRng(spec.seed).generator.permutation(n)
    train = dataset.subset(order[:n_train])
    val = dataset.subset(order[n_train : n_train + n_val])
    test = dataset.subset(order[n_train + n_val :])
    _LOGGER.info(
        "Split %d sequences into %d/%d/%d", n, len(train), len(val), len(test)
    )
    return train, val, test


def normalize_fit_apply(
    train: Dataset, *others: Dataset
) -> tuple[tuple[Dataset, ...], Normalization]:
    """Fit min-max constants on the training set only and apply them to all sets.

    Returns:
        The normalized training set followed by the normalized other sets, and the
        fitted constants.
    """
    if len(train) == 0:
        msg = "Cannot fit normalization constants on an empty training set"
        raise ContractViolationError(msg)
    for dataset in (train, *others):
        if dataset.normalization is not None:
            msg = "Dataset has already been normalized"
            raise ContractViolationError(msg)
    normalization = Normalization.fit(np.concatenate([s.y for s in train.samples]))
    normalized = tuple(
        apply_normalization(dataset, normalization) for dataset in (train, *others)
    )
    return normalized, normalization


def apply_normalization(dataset: Dataset, normalization: Normalization) -> Dataset:
    """Scale a raw dataset with constants fitted elsewhere, e.g. from a bundle."""
    if dataset.normalization is not None:
        msg = "Dataset has already been normalized"
        raise ContractViolationError(msg)
    return attrs.evolve(
        dataset,
        samples=[
            attrs.evolve(s, y=normalization.apply(s.y)) for s in dataset.samples
        ],
        normalization=normalization,
    )


def minibatches(dataset: Dataset, batch_size: int, seed: int) -> Iterator[Batch]:
    """Iterate once over a shuffled dataset; the last batch may be shorter.

    >>> samples = [SequenceSample(y=[1.0], x=[0], house_id=0, day=d) for d in range(10)]
    >>> dataset = Dataset(samples, alphabet_size=2, sequence_length=1)
    >>> [b.size for b in minibatches(dataset, batch_size=4, seed=0)]
    [4, 4, 2]
    """
    if batch_size < 1:
        msg = f"Batch size must be at least 1, got {batch_size}"
        raise ContractViolationError(msg)
    order = SeededRng(seed).generator.permutation(len(dataset))
    for start in range(0, len(order), batch_size):
        yield Batch.from_samples(dataset.samples, order[start : start + batch_size])
