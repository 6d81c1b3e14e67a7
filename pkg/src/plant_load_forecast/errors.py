# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for the exception hierarchy raised by the load forecasting toolkit."""
from __future__ import annotations

from typing import Any, Dict, List

__all__ = [
    "LoadForecastError",
    "ConfigError",
    "IngestError",
    "InsufficientData",
    "GroupingError",
    "LagError",
    "SplitError",
    "DegenerateSeries",
    "EmptyInput",
    "ParamError",
    "ComponentCollapse",
    "NumericError",
    "TrainingDiverged",
    "TrainingInterrupted",
    "CvError",
    "WeightError",
    "RankError",
    "DegenerateDifferential",
    "ModelFileError",
]

EXIT_CONFIG = 1
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_ARTIFACT = 5
EXIT_INTERNAL = 6
EXIT_INTERRUPTED = 130


class LoadForecastError(Exception):
    """Base class of all errors raised by the toolkit.

    :ivar exit_code: the process exit status the CLI uses for this class of error.
    :vartype exit_code: int
    """

    exit_code: int = EXIT_NUMERIC

    def to_record(self: LoadForecastError) -> Dict[str, Any]:
        """Get a machine-readable record of the error."""
        return {
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class ConfigError(LoadForecastError):
    """Raised when a run configuration fails validation."""

    exit_code = EXIT_CONFIG

    def __init__(self: ConfigError, errors: List[str]) -> None:
        """Initialise with the itemized list of validation problems.

        :param errors: one human readable entry per problem found.
        """
        super().__init__("; ".join(errors))
        self.errors = list(errors)

    def to_record(self: ConfigError) -> Dict[str, Any]:
        """Get a machine-readable record including every validation problem."""
        record = super().to_record()
        record["errors"] = self.errors
        return record


class IngestError(LoadForecastError):
    """Raised when an input CSV is malformed, incomplete or has a constant load column."""

    exit_code = EXIT_DATA


class InsufficientData(LoadForecastError):
    """Raised when there are too few observations for the requested operation."""

    exit_code = EXIT_DATA


class GroupingError(LoadForecastError):
    """Raised when a schedule column is not assigned to exactly one group."""

    exit_code = EXIT_DATA


class LagError(LoadForecastError):
    """Raised when the schedule lag is negative or not shorter than a day."""

    exit_code = EXIT_DATA


class SplitError(LoadForecastError):
    """Raised when a train/test split day leaves one side empty."""

    exit_code = EXIT_DATA


class DegenerateSeries(LoadForecastError):
    """Raised when a series has zero variance where a scale is required."""

    exit_code = EXIT_DATA


class EmptyInput(LoadForecastError):
    """Raised when an operation receives no data."""

    exit_code = EXIT_DATA


class ParamError(LoadForecastError):
    """Raised when a parameter or shape is outside its valid range."""


class ComponentCollapse(LoadForecastError):
    """Raised when a mixture component variance falls below the floor."""


class NumericError(LoadForecastError):
    """Raised when a computation produces non-finite values or a decomposition fails."""


class TrainingDiverged(LoadForecastError):
    """Raised when the training loss explodes."""

    def __init__(self: TrainingDiverged, epoch: int, loss: float) -> None:
        """Initialise with the epoch index and the offending loss value."""
        super().__init__(f"training diverged at epoch {epoch} with loss {loss}")
        self.epoch = epoch
        self.loss = loss


class TrainingInterrupted(LoadForecastError):
    """Raised when training is stopped on command."""

    exit_code = EXIT_INTERRUPTED


class CvError(LoadForecastError):
    """Raised when cross-validation folds are degenerate."""


class WeightError(LoadForecastError):
    """Raised when combination weights cannot be estimated."""


class RankError(LoadForecastError):
    """Raised when a regression design is singular."""


class DegenerateDifferential(LoadForecastError):
    """Raised when two forecast error series have an identically zero loss differential."""


class ModelFileError(LoadForecastError):
    """Raised when a model or forecast artifact is missing or incompatible."""

    exit_code = EXIT_ARTIFACT
