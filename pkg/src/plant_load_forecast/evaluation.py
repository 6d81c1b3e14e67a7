# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""
Module for forecast accuracy metrics, the Diebold-Mariano comparison and the comparison table.

The comparison table has one column per model and the rows MAPE, MASE, nRMSE, niqRMSE,
nmRMSE and D-M. The best model of every metric row is marked with a dagger and the D-M row
compares every model against a reference model on the quadratic loss.
"""
from __future__ import annotations

import logging
import math
import pathlib
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from .array_types import FloatArray
from .errors import DegenerateDifferential, DegenerateSeries, InsufficientData, ParamError

__all__ = [
    "MetricReport",
    "DmResult",
    "QqPoints",
    "ComparisonTable",
    "compute_metrics",
    "dm_test",
    "significance_stars",
    "residual_qq",
    "render_table",
]

DM_MIN_POINTS = 10
QQ_MIN_POINTS = 10
BEST_MARKER = "†"
TABLE_ROWS = ("MAPE", "MASE", "nRMSE", "niqRMSE", "nmRMSE")
DM_ROW = "D-M"
STAR_LEVELS = ((0.01, "***"), (0.05, "**"), (0.10, "*"))


@dataclass(frozen=True)
class MetricReport:
    """
    Accuracy of one forecast against the actual values.

    A metric whose denominator vanishes is None (undefined) while the others are still reported.

    :ivar mae: mean absolute error
    :vartype mae: float
    :ivar rmse: root mean squared error
    :vartype rmse: float
    :ivar mase: MAE scaled by the mean absolute adjacent difference of the actual values
    :vartype mase: Optional[float]
    :ivar mape: mean absolute percentage error, as a fraction
    :vartype mape: Optional[float]
    :ivar nr_rmse: RMSE over the range of the actual values
    :vartype nr_rmse: Optional[float]
    :ivar nm_rmse: RMSE over the mean of the actual values
    :vartype nm_rmse: Optional[float]
    :ivar niqr_rmse: RMSE over the interquartile range of the actual values
    :vartype niqr_rmse: Optional[float]
    :ivar mape_zero_count: number of zero actual values that leave MAPE undefined
    :vartype mape_zero_count: int
    """

    mae: float
    rmse: float
    mase: Optional[float]
    mape: Optional[float]
    nr_rmse: Optional[float]
    nm_rmse: Optional[float]
    niqr_rmse: Optional[float]
    mape_zero_count: int = field(default=0)

    def __post_init__(self: MetricReport) -> None:
        """Check that every defined metric is non-negative."""
        for name, value in self.table_values().items():
            assert value is None or value >= 0.0, f"Expected {name} to be non-negative, got {value}"

    def table_values(self: MetricReport) -> Dict[str, Optional[float]]:
        """Get the metrics by their comparison table row label."""
        return {
            "MAPE": self.mape,
            "MASE": self.mase,
            "nRMSE": self.nr_rmse,
            "niqRMSE": self.niqr_rmse,
            "nmRMSE": self.nm_rmse,
        }

    def to_dict(self: MetricReport) -> Dict[str, Optional[float] | int]:
        """Get a plain dictionary for YAML output."""
        return {
            "mae": self.mae,
            "rmse": self.rmse,
            "mase": self.mase,
            "mape": self.mape,
            "nr_rmse": self.nr_rmse,
            "nm_rmse": self.nm_rmse,
            "niqr_rmse": self.niqr_rmse,
            "mape_zero_count": self.mape_zero_count,
        }


def significance_stars(p_value: float) -> str:
    """Get *** below 1%, ** below 5% and * below 10%, otherwise an empty string."""
    for level, stars in STAR_LEVELS:
        if p_value < level:
            return stars
    return ""


@dataclass(frozen=True)
class DmResult:
    """
    Diebold-Mariano comparison of two forecast error series.

    A negative statistic favours the first series.

    :ivar statistic: mean loss differential over its HAC standard error
    :vartype statistic: float
    :ivar p_value: two-sided p-value from the standard normal
    :vartype p_value: float
    :ivar lags: Bartlett truncation lag of the long-run variance
    :vartype lags: int
    :ivar n: number of loss differentials
    :vartype n: int
    :ivar loss: the loss function, quadratic
    :vartype loss: str
    """

    statistic: float
    p_value: float
    lags: int
    n: int
    loss: str = field(default="quadratic")

    def __post_init__(self: DmResult) -> None:
        """Check the p-value range."""
        assert 0.0 <= self.p_value <= 1.0, f"Expected a p-value in [0, 1], got {self.p_value}"

    @property
    def stars(self: DmResult) -> str:
        """Get the significance stars of the p-value."""
        return significance_stars(self.p_value)

    def formatted(self: DmResult) -> str:
        """Get the statistic with three decimals and its significance stars, e.g. -19.138***."""
        return f"{self.statistic:.3f}{self.stars}"


@dataclass(frozen=True)
class QqPoints:
    """Sorted standardised residuals against standard normal quantiles at (i - 0.5) / n."""

    theoretical: FloatArray
    sample: FloatArray

    def max_deviation(self: QqPoints, central: float = 1.0) -> float:
        """
        Get the largest distance of a point from the 45 degree line.

        :param central: fraction of points around the median to consider, in (0, 1]
        """
        n = len(self.sample)
        cut = int(math.floor(n * (1.0 - central) / 2.0))
        deviation = np.abs(self.sample - self.theoretical)[cut : n - cut]
        return float(np.max(deviation))


def _as_vector(values: Sequence[float] | FloatArray, name: str) -> FloatArray:
    vector = np.asarray(values, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(vector)):
        raise ParamError(f"{name} contains non-finite values")
    return vector


def _ratio(numerator: float, denominator: float) -> Optional[float]:
    return numerator / denominator if denominator > 0.0 else None


def compute_metrics(
    actual: Sequence[float] | FloatArray,
    forecast: Sequence[float] | FloatArray,
    logger: logging.Logger | None = None,
) -> MetricReport:
    """
    Compute the accuracy metrics of a forecast.

    Quantiles of the interquartile range use linear interpolation between order statistics.
    A metric whose normalizer is not positive is None: MASE, nRMSE and niqRMSE when the
    actuals have no spread, nmRMSE when the mean actual is zero or negative, and MAPE when
    any actual is zero.

    :param actual: the actual values
    :param forecast: the forecast values, same length
    :param logger: the logger instance to use.
    :raises ParamError: if the lengths differ or are below 2
    """
    logger = logger or logging.getLogger(__name__)
    y = _as_vector(actual, "actual")
    y_hat = _as_vector(forecast, "forecast")
    if len(y) != len(y_hat):
        raise ParamError(f"actual has {len(y)} values but forecast has {len(y_hat)}")
    if len(y) < 2:
        raise ParamError(f"metrics need at least 2 values, got {len(y)}")

    error = y - y_hat
    mae = float(np.mean(np.abs(error)))
    rmse = float(np.sqrt(np.mean(error * error)))
    scale = float(np.mean(np.abs(np.diff(y))))

    zero_count = int(np.count_nonzero(y == 0.0))
    if zero_count:
        logger.warning(f"MAPE undefined: {zero_count} actual values are zero")
        mape = None
    else:
        mape = float(np.mean(np.abs(error / y)))

    q25, q75 = np.quantile(y, [0.25, 0.75])
    return MetricReport(
        mae=mae,
        rmse=rmse,
        mase=_ratio(mae, scale),
        mape=mape,
        nr_rmse=_ratio(rmse, float(np.max(y) - np.min(y))),
        nm_rmse=_ratio(rmse, float(np.mean(y))),
        niqr_rmse=_ratio(rmse, float(q75 - q25)),
        mape_zero_count=zero_count,
    )


def dm_test(
    errors_a: Sequence[float] | FloatArray,
    errors_b: Sequence[float] | FloatArray,
    lags: int | None = None,
) -> DmResult:
    """
    Compare two forecast error series on the quadratic loss.

    d_t = a_t^2 - b_t^2; the statistic is mean(d) over the square root of its Bartlett-kernel
    long-run variance divided by n, truncated at floor(n^(1/3)) lags by default.

    :raises InsufficientData: if there are fewer than 10 errors
    :raises DegenerateDifferential: if the loss differential is constant
    """
    a = _as_vector(errors_a, "errors_a")
    b = _as_vector(errors_b, "errors_b")
    if len(a) != len(b):
        raise ParamError(f"error series have lengths {len(a)} and {len(b)}")
    n = len(a)
    if n < DM_MIN_POINTS:
        raise InsufficientData(f"Diebold-Mariano needs at least {DM_MIN_POINTS} errors, got {n}")

    d = a * a - b * b
    if not np.any(d):
        raise DegenerateDifferential("loss differential is identically zero; the forecasts are equivalent")
    lags = int(math.floor(n ** (1.0 / 3.0))) if lags is None else lags
    if not 0 <= lags < n:
        raise ParamError(f"lags={lags} must be in [0, {n - 1}]")

    centred = d - np.mean(d)
    long_run_variance = float(np.dot(centred, centred)) / n
    for j in range(1, lags + 1):
        weight = 1.0 - j / (lags + 1.0)
        long_run_variance += 2.0 * weight * float(np.dot(centred[j:], centred[:-j])) / n
    if not long_run_variance > 0.0:
        raise DegenerateDifferential("loss differential has zero long-run variance")

    statistic = float(np.mean(d)) / math.sqrt(long_run_variance / n)
    p_value = float(2.0 * stats.norm.sf(abs(statistic)))
    return DmResult(statistic=statistic, p_value=min(p_value, 1.0), lags=lags, n=n)


def residual_qq(errors: Sequence[float] | FloatArray) -> QqPoints:
    """
    Get QQ-plot points of residuals against the standard normal.

    :raises InsufficientData: if there are fewer than 10 residuals
    :raises DegenerateSeries: if the residuals have zero variance
    """
    e = _as_vector(errors, "errors")
    n = len(e)
    if n < QQ_MIN_POINTS:
        raise InsufficientData(f"QQ points need at least {QQ_MIN_POINTS} residuals, got {n}")
    sd = float(np.std(e, ddof=1))
    if sd == 0.0:
        raise DegenerateSeries("residuals have zero variance")
    sample = np.sort((e - np.mean(e)) / sd)
    theoretical = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    return QqPoints(theoretical=theoretical, sample=sample)


@dataclass
class ComparisonTable:
    """
    Rendered comparison of several models.

    :ivar frame: the table, metric rows by model columns, as formatted strings
    :vartype frame: pd.DataFrame
    :ivar reference: the model the D-M row compares against
    :vartype reference: str
    """

    frame: pd.DataFrame
    reference: str

    @property
    def text(self: ComparisonTable) -> str:
        """Get the table as aligned plain text."""
        return self.frame.to_string()

    def to_csv(self: ComparisonTable, path: pathlib.Path) -> None:
        """Write the table as CSV with the metric label in the first column."""
        self.frame.to_csv(path, index_label="metric", lineterminator="\n")


def _format_value(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.4f}"


def render_table(
    reports: Mapping[str, MetricReport],
    dm_results: Mapping[str, DmResult],
    reference: str,
) -> ComparisonTable:
    """
    Render the comparison table.

    :param reports: metric report of every model, in column order
    :param dm_results: D-M result of the reference against every other model
    :param reference: the reference model; its D-M cell is a dash
    :raises ParamError: if the reference has no report
    """
    if reference not in reports:
        raise ParamError(f"reference model {reference!r} has no metric report")
    models: List[str] = list(reports)
    rows: Dict[str, List[str]] = {}
    for label in TABLE_ROWS:
        values = [reports[model].table_values()[label] for model in models]
        defined = [v for v in values if v is not None]
        best = min(defined) if defined else None
        rows[label] = [
            _format_value(v) + (BEST_MARKER if v is not None and v == best else "") for v in values
        ]
    rows[DM_ROW] = [
        "-" if model == reference else (dm_results[model].formatted() if model in dm_results else "n/a")
        for model in models
    ]
    frame = pd.DataFrame.from_dict(rows, orient="index", columns=models)
    return ComparisonTable(frame=frame, reference=reference)
