# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for the univariate Gaussian mixture of load levels and the regime affiliation test."""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import backoff
import numpy as np
from scipy import special, stats

from .array_types import FloatArray, IntArray
from .errors import ComponentCollapse, EmptyInput, ParamError

__all__ = [
    "GmmParams",
    "GmmFit",
    "Responsibilities",
    "Affiliation",
    "em_fit",
    "kmeans_plus_plus",
    "responsibilities",
    "affiliate",
]

DEFAULT_COMPONENTS = 5
DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 500
DEFAULT_VAR_FLOOR = 1e-6
MAX_RESTARTS = 5


@dataclass(frozen=True)
class GmmParams:
    """Parameters of a K-component univariate Gaussian mixture.

    :ivar weights: mixing probabilities, summing to 1
    :vartype weights: FloatArray
    :ivar means: component means in scaled load units
    :vartype means: FloatArray
    :ivar variances: component variances, all positive
    :vartype variances: FloatArray
    """

    weights: FloatArray
    means: FloatArray
    variances: FloatArray

    def __post_init__(self: GmmParams) -> None:
        """Validate shapes and ranges."""
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        means = np.asarray(self.means, dtype=np.float64).reshape(-1)
        variances = np.asarray(self.variances, dtype=np.float64).reshape(-1)
        if not len(weights) == len(means) == len(variances) or len(weights) < 1:
            raise ParamError(
                f"inconsistent mixture parameter lengths {len(weights)}, {len(means)}, {len(variances)}"
            )
        if np.any(variances <= 0.0) or np.any(weights < 0.0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ParamError("mixture weights must be a probability vector and variances positive")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)

    @property
    def n_components(self: GmmParams) -> int:
        """Get the number of components K."""
        return len(self.weights)

    def log_weighted_densities(self: GmmParams, points: FloatArray) -> FloatArray:
        """Get log(alpha_k) + log phi(y_d | mu_k, sigma_k^2) as a D x K matrix."""
        log_pdf = stats.norm.logpdf(
            points[:, None], loc=self.means[None, :], scale=np.sqrt(self.variances)[None, :]
        )
        with np.errstate(divide="ignore"):
            return np.log(self.weights)[None, :] + log_pdf

    def permuted(self: GmmParams, order: Sequence[int]) -> GmmParams:
        """Get the same mixture with the components reordered."""
        index = np.asarray(order)
        return GmmParams(
            weights=self.weights[index], means=self.means[index], variances=self.variances[index]
        )


@dataclass(frozen=True)
class GmmFit:
    """
    The result of fitting a Gaussian mixture by EM.

    :ivar params: the fitted mixture
    :vartype params: GmmParams
    :ivar loglik_trace: log-likelihood at the start of every iteration, ending at the returned params
    :vartype loglik_trace: FloatArray
    :ivar means_trace: component means at every trace entry, iterations x K
    :vartype means_trace: FloatArray
    :ivar converged: whether the relative log-likelihood gain fell below tolerance
    :vartype converged: bool
    :ivar restarts: number of restarts after component collapse
    :vartype restarts: int
    """

    params: GmmParams
    loglik_trace: FloatArray
    means_trace: FloatArray
    converged: bool = field(default=True)
    restarts: int = field(default=0)

    @property
    def n_components(self: GmmFit) -> int:
        """Get the number of components K."""
        return self.params.n_components

    @property
    def weights(self: GmmFit) -> FloatArray:
        """Get the mixing probabilities."""
        return self.params.weights

    @property
    def means(self: GmmFit) -> FloatArray:
        """Get the component means."""
        return self.params.means

    @property
    def variances(self: GmmFit) -> FloatArray:
        """Get the component variances."""
        return self.params.variances

    def to_dict(self: GmmFit) -> Dict[str, Any]:
        """Get a YAML-serialisable summary of the fit."""
        return {
            "n_components": self.n_components,
            "weights": [float(w) for w in self.weights],
            "means": [float(m) for m in self.means],
            "variances": [float(v) for v in self.variances],
            "iterations": int(len(self.loglik_trace)),
            "final_loglik": float(self.loglik_trace[-1]),
            "converged": bool(self.converged),
            "restarts": int(self.restarts),
        }

    def component_table(self: GmmFit) -> str:
        """Render the components ordered by mean as a text table."""
        lines = ["state  weight    mean      sd"]
        for k in np.argsort(self.means):
            sd = math.sqrt(self.variances[k])
            lines.append(f"{k:>5}  {self.weights[k]:.4f}  {self.means[k]:.4f}  {sd:.4f}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Responsibilities:
    """Posterior component probabilities, one row per point.

    :ivar values: D x K matrix with rows summing to 1
    :vartype values: FloatArray
    """

    values: FloatArray

    @property
    def labels(self: Responsibilities) -> IntArray:
        """Get the most probable component of every point."""
        return np.argmax(self.values, axis=1)


@dataclass(frozen=True)
class Affiliation:
    """
    The regime a day-curve is affiliated to by the mean-distance t-test.

    :ivar state: index of the component with the smallest |t|
    :vartype state: int
    :ivar t_statistics: t-statistic of the mean distance to every component mean
    :vartype t_statistics: FloatArray
    :ivar p_values: two-sided p-values of the t-statistics
    :vartype p_values: FloatArray
    :ivar ambiguous: whether equality with every component mean was rejected
    :vartype ambiguous: bool
    """

    state: int
    t_statistics: FloatArray
    p_values: FloatArray
    ambiguous: bool


def _validate_points(points: Sequence[float] | FloatArray) -> FloatArray:
    values = np.asarray(points, dtype=np.float64).reshape(-1)
    if len(values) == 0:
        raise EmptyInput("no points to fit")
    if not np.all(np.isfinite(values)):
        raise ParamError("points must all be finite")
    return values


def kmeans_plus_plus(points: FloatArray, n_components: int, rng: np.random.Generator) -> GmmParams:
    """
    Seed a mixture with k-means++ centres.

    The first centre is drawn uniformly; each further centre is drawn with probability
    proportional to the squared distance to the nearest chosen centre. Weights and variances
    come from the nearest-centre partition, with the sample variance for clusters of fewer
    than two points.
    """
    centres = [points[rng.integers(len(points))]]
    for _ in range(1, n_components):
        d2 = np.min((points[:, None] - np.asarray(centres)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total > 0.0:
            centres.append(points[rng.choice(len(points), p=d2 / total)])
        else:
            centres.append(points[rng.integers(len(points))])

    means = np.asarray(centres, dtype=np.float64)
    nearest = np.argmin(np.abs(points[:, None] - means[None, :]), axis=1)
    overall = max(float(np.var(points)), 10.0 * DEFAULT_VAR_FLOOR)
    counts = np.bincount(nearest, minlength=n_components).astype(np.float64)
    variances = np.full(n_components, overall)
    for k in range(n_components):
        members = points[nearest == k]
        if len(members) > 1 and np.var(members) > 10.0 * DEFAULT_VAR_FLOOR:
            variances[k] = np.var(members)
    weights = (counts + 1.0) / (counts.sum() + n_components)
    return GmmParams(weights=weights, means=means, variances=variances)


def _e_step(points: FloatArray, params: GmmParams) -> Tuple[float, FloatArray]:
    log_dens = params.log_weighted_densities(points)
    log_norm = special.logsumexp(log_dens, axis=1)
    return float(np.sum(log_norm)), np.exp(log_dens - log_norm[:, None])


def _m_step(points: FloatArray, resp: FloatArray, var_floor: float) -> GmmParams:
    nk = resp.sum(axis=0)
    if np.any(nk <= 0.0):
        raise ComponentCollapse(f"component(s) {np.flatnonzero(nk <= 0.0).tolist()} lost all responsibility")
    means = resp.T @ points / nk
    variances = np.sum(resp * (points[:, None] - means[None, :]) ** 2, axis=0) / nk
    if np.any(variances < var_floor):
        raise ComponentCollapse(
            f"component(s) {np.flatnonzero(variances < var_floor).tolist()} "
            f"fell below variance floor {var_floor}"
        )
    return GmmParams(weights=nk / len(points), means=means, variances=variances)


def _run_em(
    points: FloatArray,
    start: GmmParams,
    tol: float,
    max_iter: int,
    var_floor: float,
    logger: logging.Logger,
) -> GmmFit:
    params = start
    loglik_trace: List[float] = []
    means_trace: List[FloatArray] = []
    converged = False
    for iteration in range(max_iter + 1):
        loglik, resp = _e_step(points, params)
        loglik_trace.append(loglik)
        means_trace.append(params.means.copy())
        logger.debug(f"EM iteration {iteration} loglik={loglik:.6f}")
        if iteration > 0:
            previous = loglik_trace[-2]
            if loglik - previous < tol * abs(previous):
                converged = True
                break
        if iteration == max_iter:
            break
        params = _m_step(points, resp, var_floor)

    return GmmFit(
        params=params,
        loglik_trace=np.asarray(loglik_trace),
        means_trace=np.asarray(means_trace),
        converged=converged,
    )


def em_fit(
    points: Sequence[float] | FloatArray,
    n_components: int = DEFAULT_COMPONENTS,
    init: GmmParams | str = "kmeans++",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
    var_floor: float = DEFAULT_VAR_FLOOR,
    logger: logging.Logger | None = None,
) -> GmmFit:
    """
    Fit a K-component Gaussian mixture to the points by expectation-maximization.

    The E-step evaluates responsibilities in log-space and the M-step applies the closed form
    weighted weight, mean and variance updates. Iteration stops when the relative gain in
    log-likelihood is below ``tol`` or after ``max_iter`` M-steps. The temporal order of the
    points is ignored.

    A component whose variance falls below ``var_floor`` triggers a restart from a freshly
    seeded k-means++ initialisation; after 5 restarts the collapse is raised.

    :param points: the D observations
    :param n_components: the number of components K
    :param init: "kmeans++" or explicit initial parameters for the first attempt
    :param tol: relative log-likelihood gain tolerance
    :param max_iter: maximum number of M-steps
    :param seed: seed of the initialisation generator
    :param var_floor: minimum component variance
    :param logger: the logger instance to use.
    :raises ParamError: if K < 1 or D <= K
    :raises ComponentCollapse: if every restart collapses
    """
    logger = logger or logging.getLogger(__name__)
    values = _validate_points(points)
    if n_components < 1:
        raise ParamError(f"n_components={n_components} must be at least 1")
    if len(values) <= n_components:
        raise ParamError(f"need more points than components, got D={len(values)} for K={n_components}")
    if isinstance(init, GmmParams):
        if init.n_components != n_components:
            raise ParamError(
                f"initial parameters have {init.n_components} components, expected {n_components}"
            )
    elif init != "kmeans++":
        raise ParamError(f"unknown initialisation policy {init!r}")

    attempts = itertools.count()

    def _on_restart(details: Dict[str, Any]) -> None:
        logger.warning(f"EM component collapse on attempt {details['tries']}, restarting with new seed")

    @backoff.on_exception(
        backoff.constant,
        ComponentCollapse,
        max_tries=MAX_RESTARTS + 1,
        interval=0,
        jitter=None,
        on_backoff=_on_restart,
        logger=None,
    )
    def _attempt() -> GmmFit:
        attempt = next(attempts)
        if attempt == 0 and isinstance(init, GmmParams):
            start = init
        else:
            start = kmeans_plus_plus(values, n_components, np.random.default_rng([seed, attempt]))
        fit = _run_em(values, start, tol=tol, max_iter=max_iter, var_floor=var_floor, logger=logger)
        return GmmFit(
            params=fit.params,
            loglik_trace=fit.loglik_trace,
            means_trace=fit.means_trace,
            converged=fit.converged,
            restarts=attempt,
        )

    fit = _attempt()
    logger.info(
        f"EM fit K={n_components} on {len(values)} points: {len(fit.loglik_trace)} iterations, "
        f"loglik={fit.loglik_trace[-1]:.4f}, converged={fit.converged}"
    )
    return fit


def responsibilities(points: Sequence[float] | FloatArray, fit: GmmFit | GmmParams) -> Responsibilities:
    """Get the posterior component probabilities of each point.

    Entry (d, k) is alpha_k phi(y_d | mu_k, sigma_k^2) normalised over k, evaluated in log-space
    so points far from every component never produce NaN.
    """
    params = fit.params if isinstance(fit, GmmFit) else fit
    values = _validate_points(points)
    return Responsibilities(values=_e_step(values, params)[1])


def affiliate(
    curve: Sequence[float] | FloatArray, fit: GmmFit | GmmParams, level: float = 0.05
) -> Affiliation:
    """
    Affiliate a day-curve to the component whose mean it is closest to.

    For each component k the t-statistic of the mean of (curve - mu_k) against zero is computed
    with n - 1 degrees of freedom; the affiliation is the component with the smallest |t|. The
    result is ambiguous when equality with every mean is rejected at ``level``.

    A curve with zero variance has t = 0 at an exactly matching mean and infinite |t| otherwise;
    the state is then the nearest mean.
    """
    params = fit.params if isinstance(fit, GmmFit) else fit
    values = _validate_points(curve)
    n = len(values)
    if n < 2:
        raise ParamError("affiliation needs at least 2 points per curve")

    distance = values.mean() - params.means
    sd = float(np.std(values, ddof=1))
    if sd > 0.0:
        t_statistics = distance / (sd / math.sqrt(n))
        p_values = 2.0 * stats.t.sf(np.abs(t_statistics), df=n - 1)
    else:
        t_statistics = np.where(distance == 0.0, 0.0, np.sign(distance) * np.inf)
        p_values = np.where(distance == 0.0, 1.0, 0.0)

    state = int(np.argmin(np.abs(distance)))
    return Affiliation(
        state=state,
        t_statistics=np.asarray(t_statistics, dtype=np.float64),
        p_values=np.asarray(p_values, dtype=np.float64),
        ambiguous=bool(np.all(p_values < level)),
    )
