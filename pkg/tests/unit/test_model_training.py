# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""This module contains the pytest tests for training models in worker threads."""

import logging
import threading
from typing import Callable, List

import pytest

from plant_load_forecast.errors import NumericError, ParamError, TrainingInterrupted
from plant_load_forecast.model_training import ModelTrainingThread, train_models


def test_train_models_collects_results(logger: logging.Logger) -> None:
    """Test every job's result is returned under its model kind."""
    jobs = {"lstm": lambda stop: "lstm-model", "arx": lambda stop: "arx-model"}
    results = train_models(jobs, threading.Event(), logger=logger)
    assert results == {"lstm": "lstm-model", "arx": "arx-model"}


def test_sequential_training_stops_at_first_failure() -> None:
    """Test sequential training does not start the jobs after a failure."""
    started: List[str] = []

    def _job(kind: str, fail: bool = False) -> Callable[[threading.Event], str]:
        def _train(stop: threading.Event) -> str:
            started.append(kind)
            if fail:
                raise ParamError(f"{kind} failed")
            return kind

        return _train

    jobs = {"lstm": _job("lstm"), "gru": _job("gru", fail=True), "arx": _job("arx")}
    with pytest.raises(ParamError, match="gru failed"):
        train_models(jobs, threading.Event(), parallel=False)
    assert started == ["lstm", "gru"]


def test_interruption_takes_precedence() -> None:
    """Test an interrupted job is reported even when another job failed first."""

    def _fails(stop: threading.Event) -> None:
        raise ParamError("bad")

    def _interrupted(stop: threading.Event) -> None:
        raise TrainingInterrupted("stopped")

    with pytest.raises(TrainingInterrupted):
        train_models({"arx": _fails, "lstm": _interrupted}, threading.Event())


def test_jobs_see_the_stop_event() -> None:
    """Test a set stop event reaches every job."""

    def _job(stop: threading.Event) -> str:
        if stop.is_set():
            raise TrainingInterrupted("stop requested")
        return "trained"

    stop_event = threading.Event()
    stop_event.set()
    with pytest.raises(TrainingInterrupted):
        train_models({"gru": _job, "fastec": _job}, stop_event)


def test_thread_wraps_unexpected_exceptions() -> None:
    """Test an exception outside the error hierarchy becomes a numeric failure."""

    def _job(stop: threading.Event) -> None:
        raise ZeroDivisionError("division by zero")

    thread = ModelTrainingThread("fastec", _job, threading.Event())
    thread.start()
    thread.wait(poll=0.01)

    assert thread.failed
    assert not thread.completed
    assert isinstance(thread.error, NumericError)
    assert "ZeroDivisionError" in str(thread.error)
    assert repr(thread) == "ModelTrainingThread(model=fastec)"
