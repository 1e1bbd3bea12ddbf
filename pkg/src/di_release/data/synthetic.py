"""Synthetic households whose consumption depends on a hidden occupancy chain.

Every house has a two-state Markov chain :math:`x_t\\in\\{0, 1\\}` (unoccupied,
occupied) that runs continuously over all its days. The hourly consumption is

.. math::

    y_t = \\max(0, b_h + g_h x_t + a\\sin(2\\pi t/24 + \\phi_h) + \\epsilon_t),

where the base load :math:`b_h`, the occupancy gain :math:`g_h`, and the phase
:math:`\\phi_h` are drawn per house and :math:`\\epsilon_t` is Gaussian noise truncated
at two standard deviations. The house-specific constants make both the occupancy and
the identity of the house learnable from the consumption.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Literal

import numpy as np
import pandas as pd
from attrs import field, frozen
from scipy.stats import truncnorm

from di_release.data import DEFAULT_SEQUENCE_LENGTH, Dataset, SequenceSample
from di_release.errors import ConfigError, ContractViolationError
from di_release.numkit import SeededRng, child_seed

if TYPE_CHECKING:
    from pathlib import Path

    import attrs

_LOGGER = logging.getLogger(__name__)

SyntheticTask = Literal["occupancy", "identity"]
"""Use the occupancy chain or the house index as sensitive label."""

CSV_START = pd.Timestamp("2020-01-01T00:00:00")
"""Timestamp of the first hour of every synthetic house."""

_PARAMETER_STREAM = 0
_CHAIN_STREAM = 1
_NOISE_STREAM = 2


def _check_probability(_: object, attribute: attrs.Attribute, value: float) -> None:
    if not 0 <= value <= 1:
        msg = f"{attribute.name} must be a probability, got {value}"
        raise ConfigError(msg)


def _check_range(_: object, attribute: attrs.Attribute, value: tuple) -> None:
    low, high = value
    if not 0 <= low <= high:
        msg = f"{attribute.name} must be an ordered non-negative range, got {value}"
        raise ConfigError(msg)


def _check_non_negative(_: object, attribute: attrs.Attribute, value: float) -> None:
    if value < 0:
        msg = f"{attribute.name} must be non-negative, got {value}"
        raise ConfigError(msg)


@frozen
class HmmParams:
    """Transition structure of the occupancy chain.

    >>> HmmParams(p_stay=0.9).stationary_occupancy
    0.5
    """

    p_stay: float = field(default=0.9, validator=_check_probability)
    """Probability to remain unoccupied, and occupied if `p_stay_occupied` is unset."""
    p_stay_occupied: float | None = field(default=None)
    initial_state: int | None = None
    """Start every chain in this state instead of drawing from the stationary law."""

    @p_stay_occupied.validator
    def _check_occupied(self, attribute: attrs.Attribute, value: float | None) -> None:
        if value is not None:
            _check_probability(self, attribute, value)

    def __attrs_post_init__(self) -> None:
        if self.initial_state not in {None, 0, 1}:
            msg = f"Initial state must be 0 or 1, got {self.initial_state}"
            raise ConfigError(msg)

    @property
    def stay_probabilities(self) -> tuple[float, float]:
        occupied = self.p_stay if self.p_stay_occupied is None else self.p_stay_occupied
        return self.p_stay, occupied

    @property
    def stationary_occupancy(self) -> float:
        """Long-run fraction of occupied hours."""
        leave_empty, leave_occupied = (1 - p for p in self.stay_probabilities)
        if leave_empty + leave_occupied == 0:
            return 0.5
        return leave_empty / (leave_empty + leave_occupied)


@frozen
class EmissionParams:
    """Distribution of the per-house consumption constants, in kWh."""

    base_range: tuple[float, float] = field(
        default=(0.2, 0.5), converter=tuple, validator=_check_range
    )
    gain_range: tuple[float, float] = field(
        default=(0.5, 1.5), converter=tuple, validator=_check_range
    )
    noise_std: float = field(default=0.1, validator=_check_non_negative)
    sinusoid_amplitude: float = field(default=0.3, validator=_check_non_negative)


@frozen
class SyntheticParams:
    """Everything `generate_synthetic` needs apart from the seed."""

    n_houses: int = 5
    days_per_house: int = 100
    hmm: HmmParams = HmmParams()
    emission: EmissionParams = EmissionParams()
    task: SyntheticTask = "occupancy"
    sequence_length: int = DEFAULT_SEQUENCE_LENGTH

    def __attrs_post_init__(self) -> None:
        if self.n_houses < 1 or self.days_per_house < 1 or self.sequence_length < 1:
            msg = (
                "Need at least one house, one day, and one step per day, got"
                f" {self.n_houses} houses of {self.days_per_house} days"
            )
            raise ConfigError(msg)
        if self.task not in {"occupancy", "identity"}:
            msg = f"Unknown synthetic task {self.task!r}"
            raise ConfigError(msg)
        if self.task == "identity" and self.n_houses < 2:  # noqa: PLR2004
            msg = "The identity task needs at least two houses"
            raise ConfigError(msg)

    def generate(self, seed: int) -> Dataset:
        return generate_synthetic(
            self.n_houses,
            self.days_per_house,
            self.hmm,
            seed,
            emission=self.emission,
            task=self.task,
            sequence_length=self.sequence_length,
        )


def simulate_chain(hmm: HmmParams, n_steps: int, rng: SeededRng) -> np.ndarray:
    """Draw a trajectory of the two-state occupancy chain."""
    stay = hmm.stay_probabilities
    states = np.empty(n_steps, dtype=np.int64)
    if n_steps == 0:
        return states
    draws = rng.generator.random(n_steps)
    if hmm.initial_state is None:
        state = int(draws[0] < hmm.stationary_occupancy)
    else:
        state = hmm.initial_state
    states[0] = state
    for t in range(1, n_steps):
        if draws[t] >= stay[state]:
            state = 1 - state
        states[t] = state
    return states


def generate_synthetic(  # noqa: PLR0913
    n_houses: int,
    days_per_house: int,
    hmm_params: HmmParams,
    seed: int,
    *,
    emission: EmissionParams | None = None,
    task: SyntheticTask = "occupancy",
    sequence_length: int = DEFAULT_SEQUENCE_LENGTH,
) -> Dataset:
    """Generate daily sequences of synthetic households.

    Each house draws its constants, chain, and noise from its own stream derived
    from :code:`seed`, so adding houses does not change the existing ones.

    >>> dataset = generate_synthetic(2, 3, HmmParams(), seed=0)
    >>> len(dataset), dataset.alphabet_size
    (6, 2)
    """
    if n_houses < 1 or days_per_house < 1:
        msg = f"Cannot generate {n_houses} houses of {days_per_house} days"
        raise ContractViolationError(msg)
    if emission is None:
        emission = EmissionParams()
    n_steps = days_per_house * sequence_length
    hours = np.arange(n_steps)
    samples = []
    for house in range(n_houses):
        constants = SeededRng(child_seed(seed, house, _PARAMETER_STREAM)).generator
        base = constants.uniform(*emission.base_range)
        gain = constants.uniform(*emission.gain_range)
        phase = constants.uniform(0, 2 * math.pi)
        occupancy = simulate_chain(
            hmm_params, n_steps, SeededRng(child_seed(seed, house, _CHAIN_STREAM))
        )
        noise = _truncated_noise(
            emission.noise_std,
            n_steps,
            SeededRng(child_seed(seed, house, _NOISE_STREAM)),
        )
        daily = emission.sinusoid_amplitude * np.sin(2 * np.pi * hours / 24 + phase)
        consumption = np.maximum(base + gain * occupancy + daily + noise, 0.0)
        labels = occupancy if task == "occupancy" else np.full(n_steps, house)
        for day in range(days_per_house):
            window = slice(day * sequence_length, (day + 1) * sequence_length)
            samples.append(
                SequenceSample(
                    y=consumption[window], x=labels[window], house_id=house, day=day
                )
            )
    dataset = Dataset(
        samples,
        alphabet_size=2 if task == "occupancy" else n_houses,
        label_semantics="per-timestep" if task == "occupancy" else "per-sequence",
        sequence_length=sequence_length,
    )
    _LOGGER.info(
        "Generated %d %s sequences for %d houses", len(dataset), task, n_houses
    )
    return dataset


def _truncated_noise(std: float, size: int, rng: SeededRng) -> np.ndarray:
    if std == 0:
        return np.zeros(size)
    return truncnorm.rvs(-2, 2, scale=std, size=size, random_state=rng.generator)


def write_csv(dataset: Dataset, path: Path | str) -> int:
    """Write a raw dataset in the ingestion schema and return the number of rows.

    Rows are ordered by house and time. The sequences of a house are placed on
    consecutive days, counting from `CSV_START`, according to their day index.
    """
    if dataset.normalization is not None:
        msg = "Only datasets in kWh can be exported, this one is normalized"
        raise ContractViolationError(msg)
    samples = sorted(dataset.samples, key=lambda s: s.key)
    length = dataset.sequence_length
    frame = pd.DataFrame({
        "house_id": np.repeat([s.house_id for s in samples], length),
        "timestamp": [
            CSV_START + pd.Timedelta(hours=s.day * length + t)
            for s in samples
            for t in range(length)
        ],
        "consumption_kwh": np.concatenate([s.y for s in samples]),
        "label": np.concatenate([s.x for s in samples]),
    })
    frame["timestamp"] = frame["timestamp"].dt.strftime("%Y-%m-%dT%H:%M:%S")
    frame.to_csv(
        path, index=False, float_format="%.6f", lineterminator="\n", encoding="utf-8"
    )
    return len(frame)
