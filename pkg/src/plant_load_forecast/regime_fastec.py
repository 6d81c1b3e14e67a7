# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for the regime-switching expectile forecaster built from the mixture and FASTEC fits."""
from __future__ import annotations

import logging
import pathlib
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .array_types import FloatArray
from .errors import ModelFileError, ParamError, TrainingInterrupted, WeightError
from .fastec import (
    ExpectileFit,
    SplineDesign,
    bootstrap_enlarge,
    bspline_design,
    fastec_fit,
    select_lambda,
    splines_for,
)
from .forecast import Forecast, clipped_forecast
from .gmm import GmmFit, GmmParams, affiliate, em_fit
from .load_dataset import HORIZON_DAYS, N_GROUPS, SamplePair
from .model_file import read_model_file, write_model_file

__all__ = [
    "FastecConfig",
    "FastecModel",
    "estimate_weights",
    "train_fastec",
    "regime_forecast",
    "save_fastec",
    "load_fastec",
]

RegimeKey = Tuple[int, int]


@dataclass
class FastecConfig:
    """
    Hyperparameters of the regime-switching expectile forecaster.

    :ivar n_components: number of mixture components (consumption regimes)
    :vartype n_components: int
    :ivar gmm_points: number of leading training load values the mixture is fitted to
    :vartype gmm_points: int
    :ivar taus: expectile levels whose curves are combined
    :vartype taus: List[float]
    :ivar bootstrap_factor: resampled curves per observed curve
    :vartype bootstrap_factor: int
    :ivar max_splines: cap on the number of B-splines
    :vartype max_splines: int
    :ivar degree: B-spline degree
    :vartype degree: int
    :ivar folds: cross-validation folds for the penalty
    :vartype folds: int
    :ivar n_lambda: size of the penalty grid
    :vartype n_lambda: int
    :ivar lam: fixed penalty, or None to cross-validate once per regime and horizon at tau 0.5
    :vartype lam: Optional[float]
    :ivar tol: relative objective tolerance of the solver
    :vartype tol: float
    :ivar max_iter: iteration limit of the solver
    :vartype max_iter: int
    :ivar level: significance level of the affiliation test
    :vartype level: float
    :ivar weight_bound: combination weights are searched in [-bound, bound]
    :vartype weight_bound: float
    :ivar weight_step: grid step of the weight search
    :vartype weight_step: float
    :ivar weight_sweeps: maximum coordinate sweeps of the weight search
    :vartype weight_sweeps: int
    :ivar seed: seed of the mixture initialisation and bootstrap
    :vartype seed: int
    """

    n_components: int = field(default=5)
    gmm_points: int = field(default=10000)
    taus: List[float] = field(default_factory=lambda: [0.1, 0.25, 0.5, 0.75, 0.9])
    bootstrap_factor: int = field(default=10)
    max_splines: int = field(default=24)
    degree: int = field(default=3)
    folds: int = field(default=5)
    n_lambda: int = field(default=10)
    lam: Optional[float] = field(default=None)
    tol: float = field(default=1e-7)
    max_iter: int = field(default=5000)
    level: float = field(default=0.05)
    weight_bound: float = field(default=2.0)
    weight_step: float = field(default=0.01)
    weight_sweeps: int = field(default=50)
    seed: int = field(default=0)

    def validate(self: FastecConfig) -> List[str]:
        """Get a list of problems with the configuration, empty when valid."""
        problems = []
        if self.n_components < 1:
            problems.append(f"n_components={self.n_components} must be at least 1")
        if not self.taus or any(not 0.0 < tau < 1.0 for tau in self.taus):
            problems.append(f"taus={self.taus} must be a non-empty list of levels in (0, 1)")
        if self.bootstrap_factor < 1:
            problems.append(f"bootstrap_factor={self.bootstrap_factor} must be at least 1")
        if self.max_splines <= self.degree:
            problems.append(f"max_splines={self.max_splines} must exceed degree={self.degree}")
        if self.folds < 2:
            problems.append(f"folds={self.folds} must be at least 2")
        if self.lam is not None and self.lam < 0.0:
            problems.append(f"lam={self.lam} must be non-negative or null")
        if not 0.0 < self.level < 1.0:
            problems.append(f"level={self.level} must lie in (0, 1)")
        if self.weight_step <= 0.0 or self.weight_bound <= 0.0:
            problems.append("weight_step and weight_bound must be positive")
        return problems


@dataclass
class FastecModel:
    """
    A trained regime-switching expectile forecaster.

    :ivar gmm: the mixture whose components are the regimes
    :vartype gmm: GmmFit
    :ivar taus: the expectile levels
    :vartype taus: List[float]
    :ivar fits: expectile fits per (regime, horizon), one per level
    :vartype fits: Dict[RegimeKey, List[ExpectileFit]]
    :ivar designs: the B-spline design per (regime, horizon)
    :vartype designs: Dict[RegimeKey, SplineDesign]
    :ivar moment_curves: levels x S expectile curves per (regime, horizon)
    :vartype moment_curves: Dict[RegimeKey, FloatArray]
    :ivar lambdas: the penalty used per (regime, horizon)
    :vartype lambdas: Dict[RegimeKey, float]
    :ivar weights: combination weights per horizon, the levels followed by the schedule groups
    :vartype weights: Dict[int, FloatArray]
    :ivar schedule_scale: per-group divisor applied to the schedule regressors
    :vartype schedule_scale: FloatArray
    :ivar level: significance level of the affiliation test
    :vartype level: float
    """

    gmm: GmmFit
    taus: List[float]
    fits: Dict[RegimeKey, List[ExpectileFit]]
    designs: Dict[RegimeKey, SplineDesign]
    moment_curves: Dict[RegimeKey, FloatArray]
    lambdas: Dict[RegimeKey, float]
    weights: Dict[int, FloatArray]
    schedule_scale: FloatArray
    level: float = field(default=0.05)

    @property
    def regimes(self: FastecModel) -> List[int]:
        """Get the regimes that have fitted curves."""
        return sorted({regime for regime, _ in self.moment_curves})

    @property
    def n_steps(self: FastecModel) -> int:
        """Get the number of steps per day."""
        return next(iter(self.moment_curves.values())).shape[1]

    def nearest_fitted_regime(self: FastecModel, state: int) -> int:
        """Get the fitted regime whose mixture mean is closest to that of ``state``."""
        fitted = self.regimes
        distance = [abs(self.gmm.means[r] - self.gmm.means[state]) for r in fitted]
        return fitted[int(np.argmin(distance))]


def _regressors(moments: FloatArray, schedules: FloatArray, scale: FloatArray) -> FloatArray:
    return np.column_stack([moments.T, schedules / scale])


def estimate_weights(
    moment_forecasts: FloatArray,
    exog: FloatArray,
    actual: FloatArray,
    bound: float = 2.0,
    step: float = 0.01,
    max_sweeps: int = 50,
) -> FloatArray:
    """
    Find combination weights minimizing the mean absolute error.

    The regressors are the moment forecasts followed by the schedule channels. Starting from zero,
    each weight in turn is set to the best value on the grid -bound, -bound + step, ..., bound
    with the others held fixed; a change is only accepted if it strictly lowers the error, so on
    ties the earlier regressor keeps the weight. Sweeps repeat until none improves.

    :param moment_forecasts: n x m forecasts
    :param exog: n x g schedule regressors
    :param actual: n observed values
    :return: m + g weights
    :raises WeightError: if every regressor is identically zero or the lengths disagree
    """
    regressors = np.column_stack(
        [np.asarray(moment_forecasts, dtype=np.float64), np.asarray(exog, dtype=np.float64)]
    )
    y = np.asarray(actual, dtype=np.float64).reshape(-1)
    if regressors.shape[0] != len(y) or len(y) == 0:
        raise WeightError(f"regressors with {regressors.shape[0]} rows do not match {len(y)} observations")
    if not np.any(regressors):
        raise WeightError("all regressors are zero; weights are unidentified")

    n_grid = int(round(bound / step))
    grid = np.arange(-n_grid, n_grid + 1) * step
    weights = np.zeros(regressors.shape[1])
    fitted = np.zeros_like(y)
    current = float(np.mean(np.abs(y)))
    for _ in range(max_sweeps):
        improved = False
        for j in range(regressors.shape[1]):
            column = regressors[:, j]
            if not np.any(column):
                continue
            base = y - fitted + column * weights[j]
            errors = np.mean(np.abs(base[:, None] - column[:, None] * grid[None, :]), axis=0)
            best = int(np.argmin(errors))
            if errors[best] < current:
                fitted = fitted + column * (grid[best] - weights[j])
                weights[j] = grid[best]
                current = float(errors[best])
                improved = True
        if not improved:
            break
    return weights


def _target_block(sample: SamplePair, horizon: int) -> FloatArray:
    n_steps = sample.predictors.shape[0]
    return sample.target[(horizon - 1) * n_steps : horizon * n_steps]


def train_fastec(
    samples: Sequence[SamplePair],
    cfg: FastecConfig,
    stop_event: threading.Event | None = None,
    logger: logging.Logger | None = None,
) -> FastecModel:
    """
    Train the regime-switching expectile forecaster.

    1. Fit the mixture to the first ``gmm_points`` training load values.
    2. Affiliate every training day-t load curve to a regime.
    3. For each regime and horizon, bootstrap the target day-curves, select the penalty and fit
       one coefficient matrix per expectile level; the level's moment curve is the average fitted
       curve.
    4. For each horizon, estimate the combination weights of the moment curves and the day-t
       schedules on the second half of the training pairs.

    :raises ParamError: for an empty training set or an invalid configuration
    :raises TrainingInterrupted: if ``stop_event`` is set between fits
    """
    logger = logger or logging.getLogger(__name__)
    problems = cfg.validate()
    if problems:
        raise ParamError("; ".join(problems))
    if len(samples) < 2:
        raise ParamError("at least 2 training pairs are required")

    def _check_stop() -> None:
        if stop_event is not None and stop_event.is_set():
            raise TrainingInterrupted("fastec training interrupted")

    n_steps = samples[0].predictors.shape[0]
    loads = np.concatenate([sample.load for sample in samples])
    points = loads[: min(cfg.gmm_points, len(loads))]
    gmm = em_fit(points, n_components=cfg.n_components, seed=cfg.seed, logger=logger)

    affiliations = [affiliate(sample.load, gmm, level=cfg.level) for sample in samples]
    states = np.asarray([a.state for a in affiliations])
    logger.info(f"training days per regime: {np.bincount(states, minlength=cfg.n_components).tolist()}")

    fits: Dict[RegimeKey, List[ExpectileFit]] = {}
    designs: Dict[RegimeKey, SplineDesign] = {}
    moment_curves: Dict[RegimeKey, FloatArray] = {}
    lambdas: Dict[RegimeKey, float] = {}
    for regime in sorted(set(states.tolist())):
        members = [sample for sample, state in zip(samples, states) if state == regime]
        n_splines = splines_for(n_steps * len(members), cfg.max_splines, cfg.degree)
        design = bspline_design(n_steps, min(n_splines, n_steps), cfg.degree)
        for horizon in range(1, HORIZON_DAYS + 1):
            _check_stop()
            key = (regime, horizon)
            curves = np.stack([_target_block(sample, horizon) for sample in members])
            seed = cfg.seed * 1000 + regime * 10 + horizon
            y = bootstrap_enlarge(curves, cfg.bootstrap_factor * len(curves), seed=seed).T

            if cfg.lam is None:
                lam = select_lambda(
                    y, design, 0.5, folds=cfg.folds, n_lambda=cfg.n_lambda, tol=cfg.tol, max_iter=cfg.max_iter
                )
            else:
                lam = cfg.lam
            level_fits = [
                fastec_fit(y, design, tau, lam, tol=cfg.tol, max_iter=cfg.max_iter, logger=logger)
                for tau in cfg.taus
            ]
            fits[key] = level_fits
            designs[key] = design
            lambdas[key] = lam
            moment_curves[key] = np.stack([fit.moment_curve(design) for fit in level_fits])
            logger.debug(
                f"regime {regime} horizon {horizon}: {len(members)} days, "
                f"{design.n_splines} splines, lam={lam:.4e}"
            )

    schedules = np.concatenate([sample.exog for sample in samples])
    schedule_scale = np.max(np.abs(schedules), axis=0)
    schedule_scale[schedule_scale == 0.0] = 1.0

    model = FastecModel(
        gmm=gmm,
        taus=list(cfg.taus),
        fits=fits,
        designs=designs,
        moment_curves=moment_curves,
        lambdas=lambdas,
        weights={},
        schedule_scale=schedule_scale,
        level=cfg.level,
    )

    weight_samples = samples[len(samples) // 2 :]
    weight_states = states[len(samples) // 2 :]
    for horizon in range(1, HORIZON_DAYS + 1):
        _check_stop()
        blocks = [
            _regressors(model.moment_curves[(int(state), horizon)], sample.exog, schedule_scale)
            for sample, state in zip(weight_samples, weight_states)
        ]
        design_rows = np.concatenate(blocks)
        actual = np.concatenate([_target_block(sample, horizon) for sample in weight_samples])
        n_levels = len(cfg.taus)
        model.weights[horizon] = estimate_weights(
            design_rows[:, :n_levels],
            design_rows[:, n_levels:],
            actual,
            bound=cfg.weight_bound,
            step=cfg.weight_step,
            max_sweeps=cfg.weight_sweeps,
        )
        logger.info(f"horizon {horizon} combination weights {np.round(model.weights[horizon], 2).tolist()}")

    return model


def regime_forecast(
    model: FastecModel, sample: SamplePair, logger: logging.Logger | None = None
) -> Forecast:
    """
    Forecast the next two days for one sample.

    Day t is affiliated to a regime; an ambiguous affiliation keeps the nearest-mean regime and
    is flagged, and a regime without fitted curves falls back to the nearest fitted regime. The
    moment curves of that regime and the day-t schedules are combined with the weights of each
    horizon.

    :return: the clipped forecast with ``regime``, ``ambiguous`` and ``regime_fallback`` metadata
    """
    logger = logger or logging.getLogger(__name__)
    affiliation = affiliate(sample.load, model.gmm, level=model.level)
    regime = affiliation.state
    fallback = regime not in model.regimes
    if fallback:
        regime = model.nearest_fitted_regime(regime)
        logger.warning(f"day {sample.day_index}: regime {affiliation.state} has no fit, using {regime}")
    if affiliation.ambiguous:
        logger.debug(f"day {sample.day_index}: ambiguous affiliation, using nearest mean regime {regime}")

    horizons = [
        _regressors(model.moment_curves[(regime, horizon)], sample.exog, model.schedule_scale)
        @ model.weights[horizon]
        for horizon in range(1, HORIZON_DAYS + 1)
    ]
    return clipped_forecast(
        np.concatenate(horizons),
        metadata={
            "model": "fastec",
            "regime": int(regime),
            "ambiguous": bool(affiliation.ambiguous),
            "regime_fallback": bool(fallback),
        },
    )


def _key_name(prefix: str, key: RegimeKey) -> str:
    return f"{prefix}_r{key[0]}_h{key[1]}"


def save_fastec(model: FastecModel, path: pathlib.Path) -> None:
    """Write the model to a versioned model file."""
    arrays: Dict[str, FloatArray] = {
        "gmm_weights": model.gmm.weights,
        "gmm_means": model.gmm.means,
        "gmm_variances": model.gmm.variances,
        "gmm_loglik_trace": model.gmm.loglik_trace,
        "gmm_means_trace": model.gmm.means_trace,
        "schedule_scale": model.schedule_scale,
    }
    for horizon, weights in model.weights.items():
        arrays[f"weights_h{horizon}"] = weights
    for key, level_fits in model.fits.items():
        arrays[_key_name("moments", key)] = model.moment_curves[key]
        for index, fit in enumerate(level_fits):
            arrays[f"{_key_name('gamma', key)}_t{index}"] = fit.gamma

    header = {
        "taus": [float(tau) for tau in model.taus],
        "level": float(model.level),
        "n_steps": int(model.n_steps),
        "n_groups": N_GROUPS,
        "horizons": sorted(int(h) for h in model.weights),
        "fits": [
            {
                "regime": int(key[0]),
                "horizon": int(key[1]),
                "splines": int(model.designs[key].n_splines),
                "degree": int(model.designs[key].degree),
                "lam": float(model.lambdas[key]),
            }
            for key in sorted(model.fits)
        ],
    }
    write_model_file(path, "fastec", header, arrays)


def load_fastec(path: pathlib.Path) -> FastecModel:
    """Read a model written by :py:func:`save_fastec`."""
    header, arrays = read_model_file(path, "fastec")
    try:
        gmm = GmmFit(
            params=GmmParams(
                weights=arrays["gmm_weights"], means=arrays["gmm_means"], variances=arrays["gmm_variances"]
            ),
            loglik_trace=arrays["gmm_loglik_trace"],
            means_trace=arrays["gmm_means_trace"],
        )
        taus = [float(tau) for tau in header["taus"]]
        fits: Dict[RegimeKey, List[ExpectileFit]] = {}
        designs: Dict[RegimeKey, SplineDesign] = {}
        moment_curves: Dict[RegimeKey, FloatArray] = {}
        lambdas: Dict[RegimeKey, float] = {}
        for entry in header["fits"]:
            key = (int(entry["regime"]), int(entry["horizon"]))
            designs[key] = bspline_design(int(header["n_steps"]), int(entry["splines"]), int(entry["degree"]))
            lambdas[key] = float(entry["lam"])
            moment_curves[key] = arrays[_key_name("moments", key)]
            fits[key] = [
                ExpectileFit(gamma=arrays[f"{_key_name('gamma', key)}_t{index}"], tau=tau, lam=lambdas[key])
                for index, tau in enumerate(taus)
            ]
        weights = {int(h): arrays[f"weights_h{h}"] for h in header["horizons"]}
    except (KeyError, TypeError, ParamError) as exc:
        raise ModelFileError(f"{path}: invalid fastec model: {exc}") from exc

    return FastecModel(
        gmm=gmm,
        taus=taus,
        fits=fits,
        designs=designs,
        moment_curves=moment_curves,
        lambdas=lambdas,
        weights=weights,
        schedule_scale=arrays["schedule_scale"],
        level=float(header["level"]),
    )
