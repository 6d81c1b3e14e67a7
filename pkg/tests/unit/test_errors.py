# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""This module contains the pytest tests for the error hierarchy."""

from typing import Type

import pytest

from plant_load_forecast.errors import (
    ConfigError,
    DegenerateDifferential,
    IngestError,
    LoadForecastError,
    ModelFileError,
    ParamError,
    SplitError,
    TrainingDiverged,
    TrainingInterrupted,
)


@pytest.mark.parametrize(
    "error_class, exit_code",
    [
        (IngestError, 3),
        (SplitError, 3),
        (ParamError, 4),
        (DegenerateDifferential, 4),
        (ModelFileError, 5),
        (TrainingInterrupted, 130),
    ],
)
def test_exit_codes(error_class: Type[LoadForecastError], exit_code: int) -> None:
    """Test every error class maps to the exit status of its category."""
    error = error_class("something went wrong")
    assert error.exit_code == exit_code
    assert isinstance(error, LoadForecastError)


def test_to_record() -> None:
    """Test the machine-readable record names the error class and message."""
    record = IngestError("missing timestamps").to_record()
    assert record == {"error": "IngestError", "message": "missing timestamps", "exit_code": 3}


def test_config_error_lists_every_problem() -> None:
    """Test ConfigError keeps the itemized problems in its record."""
    error = ConfigError(["seed is required", "lstm: epochs=0 must be at least 1"])
    assert error.exit_code == 1
    assert str(error) == "seed is required; lstm: epochs=0 must be at least 1"
    record = error.to_record()
    assert record["errors"] == ["seed is required", "lstm: epochs=0 must be at least 1"]
    assert record["error"] == "ConfigError"


def test_training_diverged_carries_epoch() -> None:
    """Test TrainingDiverged records the epoch and loss."""
    error = TrainingDiverged(epoch=12, loss=float("inf"))
    assert error.epoch == 12
    assert "epoch 12" in str(error)
