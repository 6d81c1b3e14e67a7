# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module class for training independent forecasting models in worker threads."""
from __future__ import annotations

import logging
import threading
from typing import Any, Callable, Dict, List, Mapping

from .errors import LoadForecastError, NumericError, TrainingInterrupted

__all__ = [
    "ModelTrainingThread",
    "train_models",
]

TrainingJob = Callable[[threading.Event], Any]


class ModelTrainingThread(threading.Thread):
    """Thread to train one forecasting model while other models train concurrently."""

    def __init__(
        self: ModelTrainingThread,
        model_kind: str,
        job: TrainingJob,
        stop_event: threading.Event,
        logger: logging.Logger | None = None,
    ) -> None:
        """
        Initialise the ModelTrainingThread object.

        :param model_kind: the model being trained, used for logging and results.
        :param job: trains the model, polling the stop event it is passed, and returns it.
        :param stop_event: event that requests cooperative termination of training.
        :param logger: the logger instance to use.
        """
        threading.Thread.__init__(self, daemon=True)

        self.model_kind = model_kind
        self.job = job
        self.stop_event = stop_event
        self.logger = logger or logging.getLogger(__name__)
        self.result: Any = None
        self.error: LoadForecastError | None = None
        self.completed = False
        self.failed = False

    def run(self: ModelTrainingThread) -> None:
        """Train the model, recording the result or the error."""
        self.logger.debug(f"{self} starting model training thread")

        try:
            self.result = self.job(self.stop_event)
            self.completed = True
            self.logger.info(f"{self} thread exiting as training is complete")
        except TrainingInterrupted as exc:
            self.error = exc
            self.logger.info(f"{self} thread exiting on command")
        except LoadForecastError as exc:
            self.error = exc
            self.failed = True
            self.logger.error(f"{self} training failed: {exc}")
        except Exception as exc:
            self.logger.exception(f"{self} thread received an exception. Exiting.", exc_info=True)
            self.error = NumericError(f"{self.model_kind} training raised {type(exc).__name__}: {exc}")
            self.failed = True

    def wait(self: ModelTrainingThread, poll: float = 0.5) -> None:
        """Join the thread in short waits so signal handlers of the main thread keep running."""
        while self.is_alive():
            self.join(timeout=poll)

    def __repr__(self: ModelTrainingThread) -> str:
        """Get string representation for the training thread."""
        return f"ModelTrainingThread(model={self.model_kind})"


def train_models(
    jobs: Mapping[str, TrainingJob],
    stop_event: threading.Event,
    parallel: bool = True,
    logger: logging.Logger | None = None,
) -> Dict[str, Any]:
    """
    Train every model, concurrently when ``parallel``, and collect the results after all finish.

    :param jobs: training job of every model kind
    :param stop_event: shared event that interrupts every job
    :param parallel: start all threads at once instead of one after the other
    :param logger: the logger instance to use.
    :return: the trained model of every kind
    :raises LoadForecastError: the interruption if any job was interrupted, else the first failure
    """
    logger = logger or logging.getLogger(__name__)
    threads: List[ModelTrainingThread] = [
        ModelTrainingThread(kind, job, stop_event, logger=logger) for kind, job in jobs.items()
    ]
    if parallel:
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.wait()
    else:
        for thread in threads:
            thread.start()
            thread.wait()
            if not thread.completed:
                break

    errors = [t.error for t in threads if t.error is not None]
    for error in errors:
        if isinstance(error, TrainingInterrupted):
            raise error
    if errors:
        raise errors[0]
    return {thread.model_kind: thread.result for thread in threads}
