# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for the exploratory statistics of the load process: ACF, KDE and unit root tests."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from statsmodels.tools.sm_exceptions import InterpolationWarning
from statsmodels.tsa import stattools

from .array_types import FloatArray
from .errors import DegenerateSeries, EmptyInput, InsufficientData, ParamError

__all__ = [
    "AcfResult",
    "KdeResult",
    "StationarityReport",
    "acf",
    "kde_epanechnikov",
    "adf_test",
    "kpss_test",
    "kpss_lags",
    "format_stationarity_table",
]

# two-sided 5% normal quantile
Z_95 = 1.96
DEFAULT_BANDWIDTH_FRACTION = 0.016
DEFAULT_GRID_SIZE = 4096
ADF_MIN_EXTRA_OBS = 20

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class AcfResult:
    """Sample autocorrelations with the white-noise confidence band.

    :ivar values: autocorrelations at lags 0..max_lag, ``values[0] == 1``
    :vartype values: FloatArray
    :ivar band: half-width of the 95% band, 1.96 / sqrt(n)
    :vartype band: float
    """

    values: FloatArray
    band: float

    @property
    def lags(self: AcfResult) -> FloatArray:
        """Get the lag index of each value."""
        return np.arange(len(self.values))

    def fraction_inside_band(self: AcfResult) -> float:
        """Get the fraction of lags >= 1 whose autocorrelation lies inside the band."""
        if len(self.values) < 2:
            return 1.0
        return float(np.mean(np.abs(self.values[1:]) < self.band))


@dataclass(frozen=True)
class KdeResult:
    """A kernel density estimate evaluated on an equidistant grid.

    :ivar grid: evaluation points
    :vartype grid: FloatArray
    :ivar density: density values, non-negative
    :vartype density: FloatArray
    :ivar bandwidth: the kernel half-width used
    :vartype bandwidth: float
    """

    grid: FloatArray
    density: FloatArray
    bandwidth: float

    def integral(self: KdeResult) -> float:
        """Get the trapezoid-rule integral of the density over the grid."""
        return float(np.trapz(self.density, self.grid))

    def local_maxima(self: KdeResult) -> FloatArray:
        """Get the grid points that are strict local maxima of the density."""
        d = self.density
        peaks = np.flatnonzero((d[1:-1] > d[:-2]) & (d[1:-1] >= d[2:])) + 1
        return self.grid[peaks]


@dataclass(frozen=True)
class StationarityReport:
    """
    Result of a unit root or stationarity test.

    :ivar test_name: ADF or KPSS
    :vartype test_name: str
    :ivar statistic: the test statistic
    :vartype statistic: float
    :ivar p_value: p-value in [0, 1]
    :vartype p_value: float
    :ivar lags_used: number of lags in the regression or long-run variance
    :vartype lags_used: int
    :ivar clamped: whether the p-value was clamped at the edge of the tabulated range
    :vartype clamped: bool
    """

    test_name: str
    statistic: float
    p_value: float
    lags_used: int
    clamped: bool = field(default=False)

    def __post_init__(self: StationarityReport) -> None:
        """Check the report is well formed."""
        assert 0.0 <= self.p_value <= 1.0, f"Expected p_value in [0, 1], got {self.p_value}"
        assert self.lags_used >= 0, f"Expected lags_used >= 0, got {self.lags_used}"


def _as_series(series: Sequence[float] | FloatArray) -> FloatArray:
    values = np.asarray(series, dtype=np.float64).reshape(-1)
    if len(values) == 0:
        raise EmptyInput("series is empty")
    if not np.all(np.isfinite(values)):
        raise ParamError("series contains non-finite values")
    return values


def acf(series: Sequence[float] | FloatArray, max_lag: int) -> AcfResult:
    """
    Get the sample autocorrelation function up to ``max_lag``.

    :param series: the observed series
    :param max_lag: the largest lag, must be smaller than the series length
    :raises DegenerateSeries: for a constant series
    :raises ParamError: if ``max_lag`` is not in [0, n)
    """
    values = _as_series(series)
    n = len(values)
    if max_lag < 0 or max_lag >= n:
        raise ParamError(f"max_lag={max_lag} must be in [0, {n})")
    if np.ptp(values) == 0.0:
        raise DegenerateSeries("autocorrelation of a constant series is undefined")

    correlations = stattools.acf(values, nlags=max_lag, fft=True)
    return AcfResult(values=np.asarray(correlations, dtype=np.float64), band=Z_95 / math.sqrt(n))


def kde_epanechnikov(
    points: Sequence[float] | FloatArray,
    bandwidth: float | None = None,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> KdeResult:
    """
    Estimate the density of ``points`` with the Epanechnikov kernel.

    The kernel is 3/4 (1 - u^2) on |u| <= 1 with u = (x - x_i) / bandwidth. Each grid value is
    evaluated exactly from windowed running sums of 1, x and x^2 over the sorted points, so the
    estimate has no binning error. The grid spans [min - h, max + h].

    :param points: the sample
    :param bandwidth: kernel half-width, defaults to 1.6% of the sample range
    :param grid_size: number of grid points
    :raises EmptyInput: for an empty sample
    :raises ParamError: for a non-positive bandwidth or a zero-range sample without a bandwidth
    """
    values = np.sort(_as_series(points))
    if bandwidth is None:
        bandwidth = DEFAULT_BANDWIDTH_FRACTION * float(values[-1] - values[0])
        if bandwidth <= 0.0:
            raise ParamError("sample range is zero; an explicit bandwidth is required")
    if bandwidth <= 0.0:
        raise ParamError(f"bandwidth={bandwidth} must be positive")
    if grid_size < 2:
        raise ParamError(f"grid_size={grid_size} must be at least 2")

    n = len(values)
    grid = np.linspace(values[0] - bandwidth, values[-1] + bandwidth, grid_size)
    lo = np.searchsorted(values, grid - bandwidth, side="left")
    hi = np.searchsorted(values, grid + bandwidth, side="right")

    s1 = np.concatenate([[0.0], np.cumsum(values)])
    s2 = np.concatenate([[0.0], np.cumsum(values * values)])
    count = (hi - lo).astype(np.float64)
    sum1 = s1[hi] - s1[lo]
    sum2 = s2[hi] - s2[lo]

    squared_distance = count * grid * grid - 2.0 * grid * sum1 + sum2
    density = 0.75 * (count - squared_distance / bandwidth**2) / (n * bandwidth)
    return KdeResult(grid=grid, density=np.clip(density, 0.0, None), bandwidth=float(bandwidth))


def adf_test(series: Sequence[float] | FloatArray, max_lag: int | None = None) -> StationarityReport:
    """
    Run the augmented Dickey-Fuller test with a constant and no trend.

    With ``max_lag`` None the lag order is chosen by AIC up to the Schwert bound
    12 (n / 100)^(1/4); otherwise exactly ``max_lag`` lags are used.

    :raises InsufficientData: if the series has no more than 20 + max_lag observations
    """
    values = _as_series(series)
    n = len(values)
    bound = max_lag if max_lag is not None else int(math.ceil(12.0 * (n / 100.0) ** 0.25))
    if n <= ADF_MIN_EXTRA_OBS + bound:
        raise InsufficientData(
            f"ADF with {bound} lags needs more than {ADF_MIN_EXTRA_OBS + bound} points, got {n}"
        )
    if np.ptp(values) == 0.0:
        raise DegenerateSeries("ADF regression is singular for a constant series")

    if max_lag is None:
        statistic, p_value, lags_used, *_ = stattools.adfuller(values, regression="c", autolag="AIC")
    else:
        statistic, p_value, lags_used, *_ = stattools.adfuller(
            values, maxlag=max_lag, regression="c", autolag=None
        )
    return StationarityReport(
        test_name="ADF",
        statistic=float(statistic),
        p_value=float(np.clip(p_value, 0.0, 1.0)),
        lags_used=int(lags_used),
    )


def kpss_lags(n: int) -> int:
    """Get the automatic KPSS bandwidth, floor(12 (n / 100)^(1/4))."""
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def kpss_test(
    series: Sequence[float] | FloatArray,
    lags: int | None = None,
    logger: logging.Logger | None = None,
) -> StationarityReport:
    """
    Run the level-stationarity KPSS test with a Bartlett long-run variance.

    The p-value is interpolated in the tabulated critical values and clamped to [0.01, 0.10]
    outside that range; the report's ``clamped`` flag records when that happened.

    :param series: the observed series
    :param lags: Bartlett truncation lag, defaults to :py:func:`kpss_lags`
    :param logger: the logger instance to use.
    :raises InsufficientData: if the series is not longer than lags + 1
    """
    logger = logger or _LOGGER
    values = _as_series(series)
    n = len(values)
    nlags = kpss_lags(n) if lags is None else lags
    if nlags < 0:
        raise ParamError(f"lags={nlags} must be non-negative")
    if n <= nlags + 1:
        raise InsufficientData(f"KPSS with {nlags} lags needs more than {nlags + 1} points, got {n}")
    if np.ptp(values) == 0.0:
        raise DegenerateSeries("KPSS long-run variance is zero for a constant series")

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", InterpolationWarning)
        statistic, p_value, lags_used, _ = stattools.kpss(values, regression="c", nlags=nlags)
    clamped = any(issubclass(w.category, InterpolationWarning) for w in caught)
    if clamped:
        logger.warning(
            f"KPSS statistic {statistic:.4f} outside the tabulated range, p-value clamped to {p_value}"
        )

    return StationarityReport(
        test_name="KPSS",
        statistic=float(statistic),
        p_value=float(p_value),
        lags_used=int(lags_used),
        clamped=clamped,
    )


def _format_p_value(report: StationarityReport) -> str:
    if not report.clamped:
        return f"{report.p_value:.4f}"
    return f"<{report.p_value:.2f}" if report.p_value <= 0.01 else f">{report.p_value:.2f}"


def format_stationarity_table(reports: List[StationarityReport]) -> str:
    """Render the reports as a text table with one row per test.

    The columns are test, statistic, p-value and lags.
    """
    header: Tuple[str, ...] = ("test", "statistic", "p-value", "lags")
    rows = [header] + [
        (r.test_name, f"{r.statistic:.2f}", _format_p_value(r), str(r.lags_used)) for r in reports
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"
