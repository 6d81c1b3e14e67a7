# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""This module defines elements of the pytest test harness shared by all tests."""

import datetime
import logging
import pathlib
from typing import Any, Callable, Dict, Optional

import numpy as np
import pytest
import yaml

from plant_load_forecast.load_dataset import N_GROUPS, LoadDataset, SampleSplit, ScaleParams
from plant_load_forecast.sample_builder import build_samples
from plant_load_forecast.synth import SynthConfig, SynthResult, generate

START_DATE = datetime.date(2023, 1, 1)


def make_dataset(
    loads: np.ndarray,
    schedules: Optional[np.ndarray] = None,
    start: datetime.date = START_DATE,
) -> LoadDataset:
    """Return a LoadDataset of consecutive days from days x steps loads in [0, 1]."""
    loads = np.asarray(loads, dtype=np.float64)
    n_days, steps = loads.shape
    if schedules is None:
        schedules = np.zeros((n_days, steps, N_GROUPS))
    return LoadDataset(
        dates=tuple(start + datetime.timedelta(days=d) for d in range(n_days)),
        loads=loads,
        schedules=schedules,
        scale=ScaleParams(min=0.0, max=1.0),
        freq_per_day=steps,
    )


@pytest.fixture
def logger() -> logging.Logger:
    """Get logger to use for logging within tests."""
    logger = logging.getLogger("TESTLOGGER")
    logger.setLevel(logging.DEBUG)
    return logger


@pytest.fixture
def rng() -> np.random.Generator:
    """Return a seeded random generator."""
    return np.random.default_rng(20230101)


@pytest.fixture
def synth_config() -> SynthConfig:
    """Return the configuration of a small two-regime synthetic process."""
    return SynthConfig(n_days=30, seed=3)


@pytest.fixture
def synth_result(synth_config: SynthConfig) -> SynthResult:
    """Return a generated small synthetic process."""
    return generate(synth_config)


@pytest.fixture
def dataset(synth_result: SynthResult) -> LoadDataset:
    """Return the 30 day synthetic dataset with recorded schedules."""
    return synth_result.dataset


@pytest.fixture
def sample_split(dataset: LoadDataset) -> SampleSplit:
    """Return 28 sample pairs of the synthetic dataset, 20 for training."""
    return build_samples(dataset, 20)


@pytest.fixture
def small_dataset(rng: np.random.Generator) -> LoadDataset:
    """Return 12 random days of 8 steps each, for the fast model tests."""
    loads = rng.uniform(0.2, 0.8, size=(12, 8))
    schedules = rng.uniform(0.0, 1.0, size=(12, 8, N_GROUPS))
    return make_dataset(loads, schedules)


@pytest.fixture
def small_split(small_dataset: LoadDataset) -> SampleSplit:
    """Return the 10 sample pairs of the small dataset, 7 for training."""
    return build_samples(small_dataset, 7)


@pytest.fixture
def output_dir(tmp_path: pathlib.Path) -> pathlib.Path:
    """Return an output directory unique to the test."""
    return tmp_path / "output"


@pytest.fixture
def config_file_factory(tmp_path: pathlib.Path) -> Callable[..., pathlib.Path]:
    """Return a factory writing a run configuration file next to the test data."""

    def _factory(config: Dict[str, Any], name: str = "config.yaml") -> pathlib.Path:
        path = tmp_path / name
        with open(path, "w") as f:
            yaml.safe_dump(config, f)
        return path

    return _factory


@pytest.fixture
def dataset_factory() -> Callable[..., LoadDataset]:
    """Return a factory of datasets from days x steps loads and optional schedules."""
    return make_dataset
