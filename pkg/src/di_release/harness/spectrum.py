"""Power spectral densities of the consumption and of the release error.

Sampling is hourly, so frequencies are given in cycles per hour and the daily
harmonics lie at multiples of :math:`1/24`.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from typing import TYPE_CHECKING, Literal

import numpy as np
import pandas as pd
from attrs import frozen
from scipy.signal import welch

from di_release.data import Batch
from di_release.errors import ContractViolationError
from di_release.numkit import SeededRng
from di_release.privmech import release

if TYPE_CHECKING:
    from pathlib import Path

    from di_release.data import Dataset, SequenceSample
    from di_release.privmech import Releaser

_LOGGER = logging.getLogger(__name__)

DEFAULT_SEGMENT_LENGTH = 64
REPORT_SEGMENT_LENGTH = 96
"""Four days, so that every daily harmonic falls on a frequency bin."""


def welch_psd(
    signal: np.ndarray,
    segment_len: int = DEFAULT_SEGMENT_LENGTH,
    overlap_fraction: float = 0.5,
    window: str = "hann",
    detrend: Literal["constant", "linear"] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Estimate the one-sided power spectral density with Welch's method.

    Overlapping windowed segments are turned into periodograms, which are averaged
    and normalized by the window power. Integrating the density over the returned
    frequencies gives the mean power of the signal.

    Args:
        signal: Hourly samples.
        segment_len: Number of samples per segment.
        overlap_fraction: Overlap of consecutive segments, in :math:`[0, 1)`.
        window: Window function, as accepted by :func:`scipy.signal.get_window`.
        detrend: Subtract the mean or a linear fit from every segment. By default,
            the mean is kept and appears in the DC bin.

    Returns:
        Frequencies in cycles per hour and the power densities.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        msg = f"Expected a one-dimensional signal, got shape {signal.shape}"
        raise ContractViolationError(msg)
    if segment_len < 2 or signal.size < segment_len:  # noqa: PLR2004
        msg = (
            f"Signal of {signal.size} samples is shorter than one segment of"
            f" {segment_len}"
        )
        raise ContractViolationError(msg)
    if not 0 <= overlap_fraction < 1:
        msg = f"Overlap fraction must lie in [0, 1), got {overlap_fraction}"
        raise ContractViolationError(msg)
    frequencies, densities = welch(
        signal,
        fs=1.0,
        window=window,
        nperseg=segment_len,
        noverlap=int(segment_len * overlap_fraction),
        detrend=False if detrend is None else detrend,
        return_onesided=True,
        scaling="density",
    )
    return frequencies, densities


@frozen(eq=False)
class PsdTable:
    frequency_cph: np.ndarray
    input_psd: np.ndarray
    error_psd: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "frequency_cph": self.frequency_cph,
            "input_psd": self.input_psd,
            "error_psd": self.error_psd,
        })

    def write_csv(self, path: Path | str) -> None:
        self.to_frame().to_csv(path, index=False, lineterminator="\n")

    def harmonic_bins(self, period: float = 24.0) -> np.ndarray:
        """Indices of the bins at the non-zero multiples of :math:`1/\\text{period}`."""
        cycles = self.frequency_cph * period
        on_harmonic = np.isclose(cycles, np.round(cycles)) & (cycles > 0.5)  # noqa: PLR2004
        return np.flatnonzero(on_harmonic)


def error_psd_report(  # noqa: PLR0913
    releaser: Releaser,
    test: Dataset,
    n_realizations: int = 10,
    *,
    seed: int = 0,
    observe_labels: bool = False,
    segment_len: int = REPORT_SEGMENT_LENGTH,
) -> PsdTable:
    """Average the PSD of the consumption and of the release error.

    The test sequences of every house are concatenated in chronological order. The
    error :math:`y - z` is computed for :code:`n_realizations` independent noise
    draws. PSDs are averaged over the realizations and over the houses with at least
    one segment of data. Each segment is detrended by its mean, so the daily
    harmonics are not masked by the DC component.
    """
    if n_realizations < 1:
        msg = f"Need at least one realization, got {n_realizations}"
        raise ContractViolationError(msg)
    houses = _chronological_houses(test, segment_len)
    if not houses:
        msg = f"No house has {segment_len} hours of test data"
        raise ContractViolationError(msg)
    realization_rngs = SeededRng(seed).fork(n_realizations)
    input_psds, error_psds = [], []
    frequencies = np.empty(0)
    for samples in houses:
        batch = Batch.from_samples(samples, np.arange(len(samples)))
        w_seq = batch.observations(test.alphabet_size, observe_labels)
        y = np.concatenate([s.y for s in samples])
        frequencies, input_psd = welch_psd(y, segment_len, detrend="constant")
        input_psds.append(input_psd)
        for rng in realization_rngs:
            z_seq = release(releaser, w_seq, rng).z
            z = z_seq[:, 0, :].T.ravel()
            _, error_psd = welch_psd(y - z, segment_len, detrend="constant")
            error_psds.append(error_psd)
    _LOGGER.info(
        "Averaged PSDs over %d houses and %d realizations", len(houses), n_realizations
    )
    return PsdTable(
        frequency_cph=frequencies,
        input_psd=np.mean(input_psds, axis=0),
        error_psd=np.mean(error_psds, axis=0),
    )


def _chronological_houses(
    dataset: Dataset, min_length: int
) -> list[list[SequenceSample]]:
    by_house: dict[int, list[SequenceSample]] = defaultdict(list)
    for sample in dataset.samples:
        by_house[sample.house_id].append(sample)
    houses = []
    for house_id in sorted(by_house):
        samples = sorted(by_house[house_id], key=lambda s: s.day)
        if len(samples) * dataset.sequence_length >= min_length:
            houses.append(samples)
        else:
            _LOGGER.debug("House %d has too little test data for a PSD", house_id)
    return houses

