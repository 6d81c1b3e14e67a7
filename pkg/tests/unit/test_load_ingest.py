# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""This module contains the pytest tests for reading load CSV files."""

import datetime
import logging
import pathlib
from typing import Callable

import numpy as np
import pandas as pd
import pytest

from plant_load_forecast.errors import GroupingError, IngestError, InsufficientData, LagError
from plant_load_forecast.load_dataset import FREQ_PER_DAY, ColumnLayout, LoadDataset
from plant_load_forecast.load_ingest import aggregate_schedules, ingest_csv, shift_schedules, write_load_csv

GROUP_LAYOUT = ColumnLayout(group_columns=["schedule_1", "schedule_2", "schedule_3"])


def _timestamps(n_days: int) -> pd.DatetimeIndex:
    return pd.date_range("2023-03-01", periods=n_days * FREQ_PER_DAY, freq="15min")


def _write_csv(path: pathlib.Path, n_days: int = 4) -> pathlib.Path:
    n = n_days * FREQ_PER_DAY
    load = 100.0 + 50.0 * np.sin(np.arange(n) / 10.0)
    schedules = np.column_stack([np.arange(n) % 7, np.arange(n) % 5, np.arange(n) % 3]).astype(float)
    write_load_csv(path, _timestamps(n_days), load, schedules, GROUP_LAYOUT)
    return path


def test_ingest_grouped_csv(tmp_path: pathlib.Path, logger: logging.Logger) -> None:
    """Test a well-formed CSV with 3 group columns is scaled and split into days."""
    path = _write_csv(tmp_path / "load.csv")
    dataset = ingest_csv(path, GROUP_LAYOUT, logger=logger)

    assert dataset.n_days == 4
    assert dataset.dates[0] == datetime.date(2023, 3, 1)
    assert dataset.dates[-1] == datetime.date(2023, 3, 4)
    assert dataset.flat_loads().min() == pytest.approx(0.0)
    assert dataset.flat_loads().max() == pytest.approx(1.0)
    np.testing.assert_allclose(dataset.flat_schedules()[:10, 0], np.arange(10) % 7)

    load = 100.0 + 50.0 * np.sin(np.arange(4 * FREQ_PER_DAY) / 10.0)
    np.testing.assert_allclose(dataset.scale.unscale(dataset.flat_loads()), load, atol=1e-8)


def test_ingest_raw_columns(tmp_path: pathlib.Path) -> None:
    """Test raw schedule columns are summed into their groups."""
    groups = {f"line_{c}": c % 3 + 1 for c in range(6)}
    layout = ColumnLayout(schedule_groups=groups)
    n = 3 * FREQ_PER_DAY
    raw = np.tile(np.arange(1.0, 7.0), (n, 1))
    load = np.linspace(0.0, 10.0, n)
    write_load_csv(tmp_path / "raw.csv", _timestamps(3), load, raw, layout)

    dataset = ingest_csv(tmp_path / "raw.csv", layout)
    # group 1 holds columns 0 and 3, group 2 columns 1 and 4, group 3 columns 2 and 5
    np.testing.assert_allclose(dataset.flat_schedules()[0], [1 + 4, 2 + 5, 3 + 6])


def test_aggregate_schedules_rejects_unassigned_column() -> None:
    """Test every raw column must belong to a valid group."""
    raw = np.ones((4, 3))
    with pytest.raises(GroupingError):
        aggregate_schedules(raw, {0: 1, 1: 2})
    with pytest.raises(GroupingError):
        aggregate_schedules(raw, {0: 1, 1: 2, 2: 4})


def test_ingest_missing_file(tmp_path: pathlib.Path) -> None:
    """Test a missing file is an ingest error."""
    with pytest.raises(IngestError):
        ingest_csv(tmp_path / "absent.csv", GROUP_LAYOUT)


def test_ingest_missing_column(tmp_path: pathlib.Path) -> None:
    """Test a declared column absent from the header is reported."""
    path = _write_csv(tmp_path / "load.csv")
    layout = ColumnLayout(group_columns=["schedule_1", "schedule_2", "schedule_9"])
    with pytest.raises(IngestError, match="schedule_9"):
        ingest_csv(path, layout)


def test_ingest_rejects_gap(tmp_path: pathlib.Path) -> None:
    """Test a missing reading in the middle of the grid is rejected."""
    path = _write_csv(tmp_path / "load.csv")
    frame = pd.read_csv(path)
    frame.drop(index=100).to_csv(path, index=False)
    with pytest.raises(IngestError, match="missing timestamps"):
        ingest_csv(path, GROUP_LAYOUT)


def test_ingest_rejects_duplicate(tmp_path: pathlib.Path) -> None:
    """Test a repeated timestamp is rejected."""
    path = _write_csv(tmp_path / "load.csv")
    frame = pd.read_csv(path)
    frame.loc[5, "timestamp"] = frame.loc[4, "timestamp"]
    frame.to_csv(path, index=False)
    with pytest.raises(IngestError, match="duplicate"):
        ingest_csv(path, GROUP_LAYOUT)


def test_ingest_rejects_incomplete_day(tmp_path: pathlib.Path) -> None:
    """Test a trailing partial day is rejected."""
    path = _write_csv(tmp_path / "load.csv")
    frame = pd.read_csv(path)
    frame.iloc[:-3].to_csv(path, index=False)
    with pytest.raises(IngestError, match="incomplete"):
        ingest_csv(path, GROUP_LAYOUT)


def test_ingest_rejects_non_numeric(tmp_path: pathlib.Path) -> None:
    """Test a non-numeric load cell is reported with its row."""
    path = _write_csv(tmp_path / "load.csv")
    frame = pd.read_csv(path)
    frame["load"] = frame["load"].astype(object)
    frame.loc[10, "load"] = "n/a"
    frame.to_csv(path, index=False)
    with pytest.raises(IngestError, match="row 12"):
        ingest_csv(path, GROUP_LAYOUT)


def test_ingest_rejects_constant_load(tmp_path: pathlib.Path) -> None:
    """Test a constant load column cannot be scaled."""
    n = 3 * FREQ_PER_DAY
    write_load_csv(tmp_path / "flat.csv", _timestamps(3), np.full(n, 5.0), np.zeros((n, 3)), GROUP_LAYOUT)
    with pytest.raises(IngestError, match="constant"):
        ingest_csv(tmp_path / "flat.csv", GROUP_LAYOUT)


def test_ingest_insufficient_days(tmp_path: pathlib.Path) -> None:
    """Test fewer full days than required is insufficient data."""
    path = _write_csv(tmp_path / "load.csv", n_days=2)
    with pytest.raises(InsufficientData):
        ingest_csv(path, GROUP_LAYOUT)
    assert ingest_csv(path, GROUP_LAYOUT, min_days=2).n_days == 2


def test_shift_schedules(dataset_factory: Callable[..., LoadDataset]) -> None:
    """Test the shift advances the schedules across day boundaries and drops the last day."""
    n_days, steps = 3, 4
    loads = np.full((n_days, steps), 0.5)
    schedules = np.repeat(np.arange(n_days * steps, dtype=float), 3).reshape(n_days, steps, 3)
    dataset = dataset_factory(loads, schedules)

    shifted = shift_schedules(dataset, lag_steps=2)
    assert shifted.n_days == 2
    assert shifted.dates == dataset.dates[:2]
    np.testing.assert_allclose(shifted.flat_schedules()[:, 0], np.arange(2, 10))
    np.testing.assert_allclose(shifted.loads, loads[:2])


def test_shift_schedules_zero_lag(dataset: LoadDataset) -> None:
    """Test a zero lag keeps the dataset unchanged."""
    assert shift_schedules(dataset, lag_steps=0) is dataset


@pytest.mark.parametrize("lag_steps", [-1, FREQ_PER_DAY, FREQ_PER_DAY + 5])
def test_shift_schedules_rejects_lag(dataset: LoadDataset, lag_steps: int) -> None:
    """Test the lag must lie within one day."""
    with pytest.raises(LagError):
        shift_schedules(dataset, lag_steps=lag_steps)


def test_aggregate_schedules_matches_group_sums(rng: np.random.Generator) -> None:
    """Test grouping random columns equals summing each group's columns by hand."""
    raw = rng.uniform(0.0, 5.0, size=(96, 7))
    groups = {0: 2, 1: 1, 2: 3, 3: 2, 4: 1, 5: 2, 6: 3}
    expected = np.zeros((96, 3))
    for column, group in groups.items():
        expected[:, group - 1] += raw[:, column]

    np.testing.assert_allclose(aggregate_schedules(raw, groups), expected, rtol=1e-12)


def test_aggregate_schedules_is_linear(rng: np.random.Generator) -> None:
    """Test grouping a linear combination of blocks gives the same combination of group sums."""
    groups = {0: 1, 1: 1, 2: 2, 3: 3, 4: 3}
    first, second = rng.normal(size=(50, 5)), rng.normal(size=(50, 5))

    combined = aggregate_schedules(2.5 * first - 0.75 * second, groups)
    expected = 2.5 * aggregate_schedules(first, groups) - 0.75 * aggregate_schedules(second, groups)
    np.testing.assert_allclose(combined, expected, atol=1e-12)
