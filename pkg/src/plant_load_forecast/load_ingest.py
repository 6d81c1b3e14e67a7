# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for reading load CSV files and aligning the production schedules with the load."""
from __future__ import annotations

import logging
import pathlib
from typing import List, Mapping

import numpy as np
import pandas as pd

from .array_types import FloatArray
from .errors import GroupingError, IngestError, InsufficientData, LagError
from .load_dataset import FREQ_PER_DAY, N_GROUPS, ColumnLayout, LoadDataset, ScaleParams

__all__ = [
    "LoadCsvReader",
    "ingest_csv",
    "aggregate_schedules",
    "shift_schedules",
    "write_load_csv",
]

DEFAULT_LAG_STEPS = 8
MIN_DAYS = 3


def aggregate_schedules(raw: FloatArray, groups: Mapping[int, int]) -> FloatArray:
    """
    Sum raw schedule columns into the 3 schedule groups.

    :param raw: steps x n_columns raw schedules
    :param groups: column position to group number (1, 2 or 3), one entry per column
    :return: steps x 3 group sums
    :raises GroupingError: if a column has no group or a group number is invalid
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2:
        raise GroupingError(f"raw schedules must be a 2-D block, got shape {raw.shape}")

    membership = np.zeros((raw.shape[1], N_GROUPS))
    for column in range(raw.shape[1]):
        if column not in groups:
            raise GroupingError(f"schedule column {column} is not assigned to a group")
        group = groups[column]
        if group not in range(1, N_GROUPS + 1):
            raise GroupingError(f"schedule column {column} has invalid group {group}")
        membership[column, group - 1] = 1.0

    return raw @ membership


def shift_schedules(
    dataset: LoadDataset,
    lag_steps: int = DEFAULT_LAG_STEPS,
    logger: logging.Logger | None = None,
) -> LoadDataset:
    """
    Advance the schedule channels by ``lag_steps`` so they align with the load.

    For every kept step s of the continuous process, the shifted schedule value at s equals the
    recorded value at s + lag_steps. Loads keep their timestamps. The last day has no recorded
    values for its final ``lag_steps`` steps, so it is dropped and the day count falls by one.

    :param dataset: the dataset with schedules recorded late
    :param lag_steps: the recording lag in steps, 8 steps being 2 hours at 15-minute resolution
    :param logger: the logger instance to use.
    :raises LagError: if the lag is negative or not shorter than a day
    """
    logger = logger or logging.getLogger(__name__)
    if lag_steps < 0 or lag_steps >= dataset.freq_per_day:
        raise LagError(f"lag_steps={lag_steps} must be in [0, {dataset.freq_per_day})")
    if lag_steps == 0:
        return dataset

    n_days = dataset.n_days - 1
    n_steps = n_days * dataset.freq_per_day
    flat = dataset.flat_schedules()
    shifted = flat[lag_steps : lag_steps + n_steps].reshape(n_days, dataset.freq_per_day, N_GROUPS)

    logger.info(f"shifted schedules by {lag_steps} steps, dropping incomplete day {dataset.dates[-1]}")
    return LoadDataset(
        dates=dataset.dates[:n_days],
        loads=dataset.loads[:n_days],
        schedules=shifted,
        scale=dataset.scale,
        freq_per_day=dataset.freq_per_day,
    )


class LoadCsvReader:
    """Class that reads and validates a load CSV into a LoadDataset.

    The file holds a header row, ISO-8601 timestamps on a strict grid of ``freq_per_day``
    readings per day, the load column and either 3 aggregated schedule columns or raw schedule
    columns with a group map.
    """

    def __init__(
        self: LoadCsvReader,
        path: pathlib.Path,
        layout: ColumnLayout,
        freq_per_day: int = FREQ_PER_DAY,
        min_days: int = MIN_DAYS,
        logger: logging.Logger | None = None,
    ) -> None:
        """
        Initialise the LoadCsvReader object.

        :param path: path to the CSV file
        :param layout: the declared column layout
        :param freq_per_day: number of readings per day
        :param min_days: minimum number of full days required
        :param logger: the logger instance to use.
        """
        self.path = pathlib.Path(path)
        self.layout = layout
        self.freq_per_day = freq_per_day
        self.min_days = min_days
        self.logger = logger or logging.getLogger(__name__)

    @property
    def schedule_columns(self: LoadCsvReader) -> List[str]:
        """Get the names of the schedule columns in the order they are aggregated."""
        if self.layout.is_raw:
            return list(self.layout.schedule_groups.keys())
        return list(self.layout.group_columns)

    def _read_frame(self: LoadCsvReader) -> pd.DataFrame:
        if not self.path.exists():
            raise IngestError(f"input file {self.path} does not exist")
        try:
            frame = pd.read_csv(self.path, dtype=str, keep_default_na=False, encoding="utf-8")
        except (UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise IngestError(f"cannot read {self.path} as a UTF-8 CSV file: {exc}") from exc
        expected = [self.layout.timestamp_column, self.layout.load_column, *self.schedule_columns]
        missing = [column for column in expected if column not in frame.columns]
        if missing:
            raise IngestError(f"{self.path} is missing columns {missing}")
        if not self.layout.is_raw and len(self.layout.group_columns) != N_GROUPS:
            raise IngestError(f"expected {N_GROUPS} group columns, got {self.layout.group_columns}")
        return frame[expected]

    def _parse_timestamps(self: LoadCsvReader, frame: pd.DataFrame) -> pd.DatetimeIndex:
        column = self.layout.timestamp_column
        try:
            timestamps = pd.DatetimeIndex(pd.to_datetime(frame[column], format="ISO8601"))
        except (ValueError, TypeError) as exc:
            raise IngestError(f"cannot parse timestamps in column {column}: {exc}") from exc

        duplicated = timestamps[timestamps.duplicated()]
        if len(duplicated) > 0:
            raise IngestError(f"duplicate timestamp {duplicated[0].isoformat()}")
        if not timestamps.is_monotonic_increasing:
            raise IngestError("timestamps are not in increasing order")

        step = pd.Timedelta(days=1) / self.freq_per_day
        gaps = np.flatnonzero(np.diff(timestamps.asi8) != step.value)
        if len(gaps) > 0:
            first = timestamps[gaps[0]]
            raise IngestError(f"missing timestamps after {first.isoformat()}: expected a {step} grid")
        if len(timestamps) > 0 and timestamps[0] != timestamps[0].normalize():
            raise IngestError(f"first timestamp {timestamps[0].isoformat()} is not at the start of a day")
        if len(timestamps) % self.freq_per_day != 0:
            raise IngestError(
                f"last day starting {timestamps[-1].normalize().date()} is incomplete: "
                f"{len(timestamps) % self.freq_per_day} of {self.freq_per_day} readings"
            )
        return timestamps

    def _parse_numeric(self: LoadCsvReader, frame: pd.DataFrame, columns: List[str]) -> FloatArray:
        values = frame[columns].apply(pd.to_numeric, errors="coerce")
        bad = values.isna().to_numpy()
        if bad.any():
            row, col = np.argwhere(bad)[0]
            # header is line 1
            raise IngestError(
                f"non-numeric value {frame[columns[col]].iloc[row]!r} at row {row + 2}, column {columns[col]}"
            )
        return values.to_numpy(dtype=np.float64)

    def read(self: LoadCsvReader) -> LoadDataset:
        """Read, validate and scale the CSV file.

        :return: the validated dataset with the load scaled into [0, 1]
        :raises IngestError: for missing/duplicate timestamps, bad cells or a constant load
        :raises InsufficientData: for fewer than ``min_days`` full days
        """
        self.logger.debug(f"reading load csv {self.path}")
        frame = self._read_frame()
        timestamps = self._parse_timestamps(frame)
        load = self._parse_numeric(frame, [self.layout.load_column])[:, 0]
        schedules = self._parse_numeric(frame, self.schedule_columns)

        n_days = len(timestamps) // self.freq_per_day
        if n_days < self.min_days:
            raise InsufficientData(f"{self.path} holds {n_days} full days, at least {self.min_days} required")

        if self.layout.is_raw:
            groups = {index: group for index, group in enumerate(self.layout.schedule_groups.values())}
            schedules = aggregate_schedules(schedules, groups)

        scale = ScaleParams.fit(load)
        dates = tuple(timestamps[:: self.freq_per_day].date)
        dataset = LoadDataset(
            dates=dates,
            loads=scale.scale(load).reshape(n_days, self.freq_per_day),
            schedules=schedules.reshape(n_days, self.freq_per_day, N_GROUPS),
            scale=scale,
            freq_per_day=self.freq_per_day,
        )
        self.logger.info(f"ingested {dataset}")
        return dataset


def ingest_csv(
    path: pathlib.Path,
    layout: ColumnLayout,
    freq_per_day: int = FREQ_PER_DAY,
    min_days: int = MIN_DAYS,
    logger: logging.Logger | None = None,
) -> LoadDataset:
    """Read a load CSV into a validated, gap-free, scaled dataset.

    See :py:class:`LoadCsvReader` for the accepted layout.
    """
    return LoadCsvReader(path, layout, freq_per_day=freq_per_day, min_days=min_days, logger=logger).read()


def write_load_csv(
    path: pathlib.Path,
    timestamps: pd.DatetimeIndex,
    load: FloatArray,
    schedules: FloatArray,
    layout: ColumnLayout,
) -> None:
    """Write a load CSV in the layout that :py:func:`ingest_csv` consumes.

    :param path: destination file
    :param timestamps: one timestamp per reading
    :param load: load readings in load units
    :param schedules: readings x n_columns schedules, in the order of the layout's columns
    :param layout: the column layout to write
    """
    columns = list(layout.schedule_groups.keys()) if layout.is_raw else list(layout.group_columns)
    frame = pd.DataFrame(np.asarray(schedules), columns=columns)
    frame.insert(0, layout.load_column, np.asarray(load))
    frame.insert(0, layout.timestamp_column, [ts.isoformat() for ts in timestamps])
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.10f")
