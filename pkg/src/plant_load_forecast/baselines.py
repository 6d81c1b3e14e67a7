# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for the benchmark forecasters: ARX with schedule regressors and naive persistence."""
from __future__ import annotations

import logging
import pathlib
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .array_types import BoolArray, FloatArray
from .errors import InsufficientData, ModelFileError, ParamError, RankError
from .forecast import Forecast, clipped_forecast
from .load_dataset import FREQ_PER_DAY, HORIZON_DAYS, SamplePair
from .model_file import read_model_file, write_model_file

__all__ = [
    "ArxModel",
    "arx_fit",
    "arx_fit_series",
    "arx_forecast",
    "forecast_arx",
    "naive_forecast",
    "save_arx",
    "load_arx",
]

DEFAULT_LAGS = FREQ_PER_DAY


@dataclass(frozen=True)
class ArxModel:
    """
    Autoregressive model of the load with contemporaneous schedule regressors.

    y_j = intercept + sum_l ar_coefficients[l - 1] y_{j-l} + sum_g exog_coefficients[g] x^g_j

    :ivar ar_coefficients: coefficient of lag 1, 2, ..., p
    :vartype ar_coefficients: FloatArray
    :ivar exog_coefficients: coefficient of every schedule group
    :vartype exog_coefficients: FloatArray
    :ivar intercept: the constant
    :vartype intercept: float
    :ivar collinear: schedule groups left out of the regression because they never vary
    :vartype collinear: BoolArray
    """

    ar_coefficients: FloatArray
    exog_coefficients: FloatArray
    intercept: float
    collinear: BoolArray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self: ArxModel) -> None:
        """Check the coefficients."""
        assert len(self.ar_coefficients) >= 1, "Expected a lag order of at least 1"
        assert np.all(np.isfinite(self.ar_coefficients)), "Expected finite AR coefficients"
        assert np.all(np.isfinite(self.exog_coefficients)), "Expected finite exogenous coefficients"

    @property
    def lags(self: ArxModel) -> int:
        """Get the lag order p."""
        return len(self.ar_coefficients)


def arx_fit_series(
    load: FloatArray,
    exog: FloatArray,
    lags: int = DEFAULT_LAGS,
    logger: logging.Logger | None = None,
) -> ArxModel:
    """
    Fit an ARX model to a continuous series by ordinary least squares.

    Schedule groups with zero variance are left out, get coefficient 0 and are flagged collinear.

    :param load: the n load values
    :param exog: n x g contemporaneous schedule values
    :param lags: the lag order p
    :param logger: the logger instance to use.
    :raises InsufficientData: if there are not more observations than regressors
    :raises RankError: if the remaining design is singular
    """
    logger = logger or logging.getLogger(__name__)
    y = np.asarray(load, dtype=np.float64).reshape(-1)
    x = np.asarray(exog, dtype=np.float64).reshape(len(y), -1)
    if lags < 1:
        raise ParamError(f"lags={lags} must be at least 1")

    collinear = np.ptp(x, axis=0) == 0.0 if len(y) > 0 else np.ones(x.shape[1], dtype=bool)
    active = np.flatnonzero(~collinear)
    n_rows = len(y) - lags
    n_columns = 1 + lags + len(active)
    if n_rows <= n_columns:
        raise InsufficientData(f"{n_rows} usable observations for {n_columns} ARX regressors")

    # row j holds y_{j-1}, ..., y_{j-p} for target y_j
    lagged = sliding_window_view(y[:-1], lags)[:, ::-1]
    design = np.column_stack([np.ones(n_rows), lagged, x[lags:, active]])
    solution, _, rank, _ = np.linalg.lstsq(design, y[lags:], rcond=None)
    if rank < n_columns:
        raise RankError(f"ARX design has rank {rank} < {n_columns} regressors")

    exog_coefficients = np.zeros(x.shape[1])
    exog_coefficients[active] = solution[1 + lags :]
    if np.any(collinear):
        logger.warning(f"schedule groups {np.flatnonzero(collinear).tolist()} never vary and are left out")
    return ArxModel(
        ar_coefficients=solution[1 : 1 + lags],
        exog_coefficients=exog_coefficients,
        intercept=float(solution[0]),
        collinear=collinear,
    )


def arx_fit(
    samples: Sequence[SamplePair],
    lags: int = DEFAULT_LAGS,
    logger: logging.Logger | None = None,
) -> ArxModel:
    """
    Fit an ARX model to the day-t loads and schedules of consecutive training pairs.

    :raises ParamError: if the lag order exceeds one day, the history a forecast starts from
    """
    if len(samples) == 0:
        raise InsufficientData("training set is empty")
    n_steps = samples[0].predictors.shape[0]
    if lags > n_steps:
        raise ParamError(f"lags={lags} must not exceed the {n_steps} steps of a day")
    load = np.concatenate([sample.load for sample in samples])
    exog = np.concatenate([sample.exog for sample in samples])
    return arx_fit_series(load, exog, lags=lags, logger=logger)


def arx_forecast(model: ArxModel, history: FloatArray, future_exog: FloatArray, steps: int) -> FloatArray:
    """
    Forecast ``steps`` values by recursive substitution of earlier forecasts.

    :param model: the fitted model
    :param history: at least p most recent loads, oldest first
    :param future_exog: steps x g schedule values over the forecast horizon
    :param steps: the number of values to forecast
    """
    past = np.asarray(history, dtype=np.float64).reshape(-1)
    exog = np.asarray(future_exog, dtype=np.float64).reshape(steps, -1)
    if len(past) < model.lags:
        raise InsufficientData(f"history of {len(past)} values is shorter than the lag order {model.lags}")

    window: List[float] = past[-model.lags :][::-1].tolist()
    output = np.empty(steps)
    for j in range(steps):
        value = (
            model.intercept
            + float(np.dot(model.ar_coefficients, window))
            + float(exog[j] @ model.exog_coefficients)
        )
        output[j] = value
        window = [value] + window[:-1]
    return output


def forecast_arx(model: ArxModel, sample: SamplePair) -> Forecast:
    """Forecast two days from the day-t loads, repeating the day-t schedules for both days."""
    future_exog = np.tile(sample.exog, (HORIZON_DAYS, 1))
    raw = arx_forecast(model, sample.load, future_exog, steps=len(future_exog))
    return clipped_forecast(raw, metadata={"model": "arx"})


def naive_forecast(sample: SamplePair) -> Forecast:
    """Repeat the day-t loads for both forecast days."""
    return clipped_forecast(np.tile(sample.load, HORIZON_DAYS), metadata={"model": "naive"})


def save_arx(model: ArxModel, path: pathlib.Path) -> None:
    """Write the model to a versioned model file."""
    header = {"lags": model.lags, "collinear": [bool(c) for c in model.collinear]}
    arrays = {
        "ar_coefficients": model.ar_coefficients,
        "exog_coefficients": model.exog_coefficients,
        "intercept": np.array([model.intercept]),
    }
    write_model_file(path, "arx", header, arrays)


def load_arx(path: pathlib.Path) -> ArxModel:
    """Read a model written by :py:func:`save_arx`."""
    header, arrays = read_model_file(path, "arx")
    try:
        model = ArxModel(
            ar_coefficients=arrays["ar_coefficients"],
            exog_coefficients=arrays["exog_coefficients"],
            intercept=float(arrays["intercept"][0]),
            collinear=np.asarray(header["collinear"], dtype=bool),
        )
    except (KeyError, IndexError, AssertionError) as exc:
        raise ModelFileError(f"{path}: invalid arx model: {exc}") from exc
    if model.lags != header["lags"]:
        raise ModelFileError(f"{path}: {model.lags} AR coefficients but header declares {header['lags']}")
    return model
