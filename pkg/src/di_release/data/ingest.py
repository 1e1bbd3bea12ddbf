"""Read hourly household consumption from CSV files.

The files have the header :code:`house_id,timestamp,consumption_kwh[,label]`, with
ISO-8601 timestamps at an hourly cadence. Without a label column, the sensitive label
is the identity of the house: the index of its :code:`house_id` in ascending order.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd
from attrs import field, frozen

from di_release.data import (
    DEFAULT_SEQUENCE_LENGTH,
    Dataset,
    LabelSemantics,
    SequenceSample,
    as_float_array,
    as_int_array,
)
from di_release.errors import DataError

if TYPE_CHECKING:
    from collections.abc import Iterable

_LOGGER = logging.getLogger(__name__)

BASE_COLUMNS = ("house_id", "timestamp", "consumption_kwh")
LABEL_COLUMN = "label"
HOUR = np.timedelta64(1, "h")


def _to_datetime_array(values: np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype="datetime64[ns]")


@frozen
class CsvSchema:
    label_semantics: LabelSemantics = "per-timestep"
    """Interpretation of the label column, if present."""
    alphabet_size: int | None = None
    """Number of labels; inferred from the largest label if unset."""
    sequence_length: int = DEFAULT_SEQUENCE_LENGTH


@frozen(eq=False)
class HouseSeries:
    """Hourly measurements of one house, in chronological order."""

    house_id: int
    timestamps: np.ndarray = field(converter=_to_datetime_array)
    consumption: np.ndarray = field(converter=as_float_array)
    labels: np.ndarray = field(converter=as_int_array)
    start: np.datetime64 | None = None
    """Reference hour for the day indices; defaults to the first timestamp."""

    def __attrs_post_init__(self) -> None:
        n = len(self.timestamps)
        if self.consumption.shape != (n,) or self.labels.shape != (n,):
            msg = f"Series of house {self.house_id} has columns of unequal length"
            raise DataError(msg)

    def __len__(self) -> int:
        return len(self.timestamps)

    def contiguous_runs(self) -> list[HouseSeries]:
        """Cut the series wherever consecutive timestamps are not one hour apart."""
        if len(self) == 0:
            return []
        start = self.timestamps[0] if self.start is None else self.start
        gaps = np.flatnonzero(np.diff(self.timestamps) != HOUR) + 1
        bounds = [0, *gaps.tolist(), len(self)]
        return [
            HouseSeries(
                house_id=self.house_id,
                timestamps=self.timestamps[a:b],
                consumption=self.consumption[a:b],
                labels=self.labels[a:b],
                start=start,
            )
            for a, b in zip(bounds[:-1], bounds[1:])
        ]


def reshape_daily(
    series: Iterable[HouseSeries], sequence_length: int = DEFAULT_SEQUENCE_LENGTH
) -> list[SequenceSample]:
    """Cut hourly series into consecutive non-overlapping windows.

    A trailing partial window is dropped. The day index of a window counts the whole
    windows between the start of the house and the first hour of the window.
    """
    samples = []
    for run in series:
        n_windows = len(run) // sequence_length
        if n_windows == 0:
            continue
        start = run.timestamps[0] if run.start is None else run.start
        for k in range(n_windows):
            window = slice(k * sequence_length, (k + 1) * sequence_length)
            offset = int((run.timestamps[window.start] - start) // HOUR)
            samples.append(
                SequenceSample(
                    y=run.consumption[window],
                    x=run.labels[window],
                    house_id=run.house_id,
                    day=offset // sequence_length,
                )
            )
        dropped = len(run) - n_windows * sequence_length
        if dropped:
            _LOGGER.debug(
                "Dropped %d trailing hours of house %d", dropped, run.house_id
            )
    return samples


def load_csv(path: Path | str, schema: CsvSchema | None = None) -> Dataset:
    """Load a dataset and cut it into daily sequences.

    Raises:
        DataError: If the header does not match the schema, a row is malformed (the
            message names its line number), a consumption value is negative, or the
            timestamps of a house do not increase.
    """
    if schema is None:
        schema = CsvSchema()
    path = Path(path)
    if not path.is_file():
        msg = f"Dataset file {path} does not exist"
        raise DataError(msg)
    frame = _read_frame(path)
    has_labels = LABEL_COLUMN in frame.columns
    series = list(_parse_house_series(frame, has_labels))
    runs = [run for house in series for run in house.contiguous_runs()]
    samples = reshape_daily(runs, schema.sequence_length)
    if has_labels:
        alphabet_size = schema.alphabet_size
        if alphabet_size is None:
            alphabet_size = max(2, int(frame[LABEL_COLUMN].max()) + 1)
        label_semantics = schema.label_semantics
    else:
        alphabet_size = max(2, len(series))
        label_semantics = "per-sequence"
    dataset = Dataset(
        samples,
        alphabet_size=alphabet_size,
        label_semantics=label_semantics,
        sequence_length=schema.sequence_length,
    )
    _LOGGER.info(
        "Loaded %d sequences of %d houses from %s", len(dataset), len(series), path
    )
    return dataset


def _read_frame(path: Path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, encoding="utf-8", sep=","
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeError) as exc:
        msg = f"Cannot parse {path}: {exc}"
        raise DataError(msg) from exc
    columns = tuple(frame.columns)
    if columns not in {BASE_COLUMNS, (*BASE_COLUMNS, LABEL_COLUMN)}:
        expected = ",".join(BASE_COLUMNS)
        msg = f"{path} has header {','.join(columns)!r}, expected {expected}[,label]"
        raise DataError(msg)
    parsed = pd.DataFrame({
        "house_id": pd.to_numeric(frame["house_id"], errors="coerce"),
        "timestamp": pd.to_datetime(
            frame["timestamp"], format="ISO8601", errors="coerce"
        ),
        "consumption_kwh": pd.to_numeric(frame["consumption_kwh"], errors="coerce"),
    })
    if LABEL_COLUMN in frame.columns:
        parsed[LABEL_COLUMN] = pd.to_numeric(frame[LABEL_COLUMN], errors="coerce")
    invalid = parsed.isna().any(axis=1)
    for column in ("house_id", LABEL_COLUMN):
        if column in parsed.columns:
            values = parsed[column]
            invalid |= (values != values.round()) | (values < 0)
    if invalid.any():
        index = int(np.flatnonzero(invalid.to_numpy())[0])
        msg = f"Malformed row on line {_line_number(index)} of {path}"
        raise DataError(msg)
    negative = parsed["consumption_kwh"] < 0
    if negative.any():
        index = int(np.flatnonzero(negative.to_numpy())[0])
        value = parsed["consumption_kwh"].iloc[index]
        msg = f"Negative consumption {value} on line {_line_number(index)} of {path}"
        raise DataError(msg)
    parsed["house_id"] = parsed["house_id"].astype(np.int64)
    if isinstance(parsed["timestamp"].dtype, pd.DatetimeTZDtype):
        parsed["timestamp"] = parsed["timestamp"].dt.tz_convert(None)
    if LABEL_COLUMN in parsed.columns:
        parsed[LABEL_COLUMN] = parsed[LABEL_COLUMN].astype(np.int64)
    return parsed


def _parse_house_series(
    frame: pd.DataFrame, has_labels: bool
) -> Iterable[HouseSeries]:
    houses = frame.groupby("house_id", sort=True)
    for house_index, (house_id, rows) in enumerate(houses):
        timestamps = rows["timestamp"].to_numpy(dtype="datetime64[ns]")
        steps = np.diff(timestamps)
        if (steps <= np.timedelta64(0, "ns")).any():
            index = int(rows.index[np.flatnonzero(steps <= np.timedelta64(0))[0] + 1])
            msg = (
                f"Timestamps of house {house_id} do not increase on line"
                f" {_line_number(index)}"
            )
            raise DataError(msg)
        if has_labels:
            labels = rows[LABEL_COLUMN].to_numpy()
        else:
            labels = np.full(len(rows), house_index)
        yield HouseSeries(
            house_id=int(house_id),
            timestamps=timestamps,
            consumption=rows["consumption_kwh"].to_numpy(),
            labels=labels,
        )


def _line_number(index: int) -> int:
    """Line in the file of a data row, counting the header as line 1."""
    return index + 2
