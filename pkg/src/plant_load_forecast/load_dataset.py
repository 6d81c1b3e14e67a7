# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for the data model of the daily load process and its supervised samples."""
from __future__ import annotations

import datetime
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .array_types import FloatArray
from .errors import IngestError, ParamError

__all__ = [
    "ColumnLayout",
    "ScaleParams",
    "CalendarDay",
    "LoadDataset",
    "SamplePair",
    "SampleSplit",
    "FREQ_PER_DAY",
    "N_GROUPS",
    "HORIZON_DAYS",
    "stack_predictors",
    "stack_targets",
]

FREQ_PER_DAY: int = 96
N_GROUPS: int = 3
HORIZON_DAYS: int = 2


def _frozen(values: FloatArray) -> FloatArray:
    array = np.array(values, dtype=np.float64, copy=True)
    array.flags.writeable = False
    return array


@dataclass
class ColumnLayout:
    """
    A data class describing the columns of an input load CSV.

    Exactly one of ``group_columns`` (3 pre-aggregated schedule columns) or ``schedule_groups``
    (raw schedule column name to group 1, 2 or 3) is used.

    :ivar timestamp_column: name of the ISO-8601 timestamp column
    :vartype timestamp_column: str
    :ivar load_column: name of the load column
    :vartype load_column: str
    :ivar group_columns: names of the 3 pre-aggregated schedule columns, in group order
    :vartype group_columns: List[str]
    :ivar schedule_groups: mapping of raw schedule column names to their group
    :vartype schedule_groups: Dict[str, int]
    """

    timestamp_column: str = field(default="timestamp")
    load_column: str = field(default="load")
    group_columns: List[str] = field(default_factory=list)
    schedule_groups: Dict[str, int] = field(default_factory=dict)

    @property
    def is_raw(self: ColumnLayout) -> bool:
        """Get whether the layout declares raw schedule columns with a group map."""
        return len(self.schedule_groups) > 0


@dataclass(frozen=True)
class ScaleParams:
    """Min-max scaling of the load process into [0, 1].

    :ivar min: smallest observed load, in load units
    :vartype min: float
    :ivar max: largest observed load, in load units
    :vartype max: float
    """

    min: float
    max: float

    def __post_init__(self: ScaleParams) -> None:
        """Validate that the scale is not degenerate."""
        if not self.max > self.min:
            raise IngestError(
                f"load column is constant (min={self.min}, max={self.max}); scaling is undefined"
            )

    @classmethod
    def fit(cls: type[ScaleParams], values: FloatArray) -> ScaleParams:
        """Get the scale parameters of the observed values."""
        return cls(min=float(np.min(values)), max=float(np.max(values)))

    def scale(self: ScaleParams, values: FloatArray) -> FloatArray:
        """Map load units into [0, 1]."""
        return (np.asarray(values, dtype=np.float64) - self.min) / (self.max - self.min)

    def unscale(self: ScaleParams, values: FloatArray) -> FloatArray:
        """Map scaled values back to load units."""
        return np.asarray(values, dtype=np.float64) * (self.max - self.min) + self.min


@dataclass(frozen=True)
class CalendarDay:
    """A single day of the load process.

    :ivar date: the calendar date
    :vartype date: datetime.date
    :ivar load: the scaled load readings, one per step
    :vartype load: FloatArray
    :ivar schedules: the aggregated schedule groups, steps x 3
    :vartype schedules: FloatArray
    """

    date: datetime.date
    load: FloatArray
    schedules: FloatArray


@dataclass(frozen=True)
class LoadDataset:
    """A gap-free calendar of days with scaled loads and 3 schedule channels.

    :ivar dates: the strictly increasing, consecutive calendar dates
    :vartype dates: Tuple[datetime.date, ...]
    :ivar loads: scaled loads, days x freq_per_day
    :vartype loads: FloatArray
    :ivar schedules: aggregated schedules, days x freq_per_day x 3
    :vartype schedules: FloatArray
    :ivar scale: scaling metadata retained for inversion
    :vartype scale: ScaleParams
    :ivar freq_per_day: number of readings per day
    :vartype freq_per_day: int
    """

    dates: Tuple[datetime.date, ...]
    loads: FloatArray
    schedules: FloatArray
    scale: ScaleParams
    freq_per_day: int = FREQ_PER_DAY

    def __post_init__(self: LoadDataset) -> None:
        """Validate shapes and freeze the arrays."""
        loads = _frozen(self.loads)
        schedules = _frozen(self.schedules)
        n_days = len(self.dates)
        if loads.shape != (n_days, self.freq_per_day):
            raise ParamError(f"loads shape {loads.shape} != ({n_days}, {self.freq_per_day})")
        if schedules.shape != (n_days, self.freq_per_day, N_GROUPS):
            raise ParamError(
                f"schedules shape {schedules.shape} != ({n_days}, {self.freq_per_day}, {N_GROUPS})"
            )
        for previous, current in zip(self.dates, self.dates[1:]):
            if current - previous != datetime.timedelta(days=1):
                raise IngestError(f"days are not consecutive: {previous} followed by {current}")
        if n_days > 0 and (np.min(loads) < 0.0 or np.max(loads) > 1.0):
            raise ParamError("scaled loads must lie in [0, 1]")
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "loads", loads)
        object.__setattr__(self, "schedules", schedules)

    @property
    def n_days(self: LoadDataset) -> int:
        """Get the number of days."""
        return len(self.dates)

    @property
    def days(self: LoadDataset) -> List[CalendarDay]:
        """Get the dataset as a list of calendar days."""
        return [
            CalendarDay(date=date, load=self.loads[index], schedules=self.schedules[index])
            for index, date in enumerate(self.dates)
        ]

    def flat_loads(self: LoadDataset) -> FloatArray:
        """Get the continuous scaled load process."""
        return self.loads.reshape(-1)

    def flat_schedules(self: LoadDataset) -> FloatArray:
        """Get the continuous schedule channels, (days * freq_per_day) x 3."""
        return self.schedules.reshape(-1, N_GROUPS)

    def __repr__(self: LoadDataset) -> str:
        """Get string representation of the dataset."""
        first = self.dates[0] if self.dates else None
        last = self.dates[-1] if self.dates else None
        return f"LoadDataset(n_days={self.n_days}, first={first}, last={last}, scale={self.scale})"


@dataclass(frozen=True)
class SamplePair:
    """One supervised example of the forecasting task.

    :ivar day_index: index t of the predictor day within the dataset
    :vartype day_index: int
    :ivar predictors: freq_per_day x 4 block, columns x1, x2, x3 and the day-t load
    :vartype predictors: FloatArray
    :ivar target: scaled loads of days t+1 and t+2, 2 * freq_per_day values
    :vartype target: FloatArray
    """

    day_index: int
    predictors: FloatArray
    target: FloatArray

    def __post_init__(self: SamplePair) -> None:
        """Validate the shape contract and freeze the arrays."""
        predictors = _frozen(self.predictors)
        target = _frozen(self.target)
        if predictors.ndim != 2 or predictors.shape[1] != N_GROUPS + 1:
            raise ParamError(f"predictors must have {N_GROUPS + 1} columns, got shape {predictors.shape}")
        if target.shape != (HORIZON_DAYS * predictors.shape[0],):
            raise ParamError(
                f"target must have {HORIZON_DAYS * predictors.shape[0]} values, got {target.shape}"
            )
        object.__setattr__(self, "predictors", predictors)
        object.__setattr__(self, "target", target)

    @property
    def load(self: SamplePair) -> FloatArray:
        """Get the day-t scaled load (the last predictor column)."""
        return self.predictors[:, N_GROUPS]

    @property
    def exog(self: SamplePair) -> FloatArray:
        """Get the day-t schedule channels, steps x 3."""
        return self.predictors[:, :N_GROUPS]


@dataclass(frozen=True)
class SampleSplit:
    """A chronological train/test split of sample pairs.

    :ivar train: pairs whose day index precedes the split day
    :vartype train: List[SamplePair]
    :ivar test: the remaining pairs
    :vartype test: List[SamplePair]
    """

    train: List[SamplePair]
    test: List[SamplePair]

    def __post_init__(self: SampleSplit) -> None:
        """Check that every train day precedes every test day."""
        if self.train and self.test:
            assert (
                max(p.day_index for p in self.train) < min(p.day_index for p in self.test)
            ), "Expected train days to precede test days"


def stack_predictors(samples: List[SamplePair]) -> FloatArray:
    """Stack the predictor blocks of the samples, samples x steps x 4."""
    return np.stack([sample.predictors for sample in samples])


def stack_targets(samples: List[SamplePair]) -> FloatArray:
    """Stack the targets of the samples, samples x (2 * steps)."""
    return np.stack([sample.target for sample in samples])
