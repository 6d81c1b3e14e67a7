# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""
Module for nuclear-norm penalized multivariate expectile regression on a B-spline design.

Day-curves are the columns of Y (S x q). Each column is modelled as X Gamma[:, j] where X (S x k)
evaluates k B-splines at the intra-day positions s / S. The coefficients at expectile level tau
minimize

    mean over s, j of rho_tau(Y[s, j] - X[s] Gamma[:, j]) + lam * ||Gamma||_*

with rho_tau(u) = |tau - 1(u < 0)| u^2 and ||.||_* the sum of singular values.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg
from scipy.interpolate import BSpline

from .array_types import FloatArray
from .errors import CvError, EmptyInput, NumericError, ParamError

__all__ = [
    "SplineDesign",
    "ExpectileFit",
    "bspline_design",
    "expectile_loss",
    "nuclear_norm",
    "prox_nuclear",
    "objective",
    "lambda_max",
    "lambda_grid",
    "fastec_fit",
    "cv_scores",
    "select_lambda",
    "bootstrap_enlarge",
    "splines_for",
]

DEFAULT_DEGREE = 3
DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 5000
DEFAULT_FOLDS = 5
DEFAULT_N_LAMBDA = 10
LAMBDA_RANGE = 1e-3

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplineDesign:
    """
    B-spline basis evaluated on the intra-day grid.

    :ivar matrix: S x k basis values, rows sum to 1
    :vartype matrix: FloatArray
    :ivar knots: the clamped knot vector
    :vartype knots: FloatArray
    :ivar degree: the spline degree
    :vartype degree: int
    """

    matrix: FloatArray
    knots: FloatArray
    degree: int

    @property
    def n_steps(self: SplineDesign) -> int:
        """Get the number of intra-day positions S."""
        return self.matrix.shape[0]

    @property
    def n_splines(self: SplineDesign) -> int:
        """Get the number of basis functions k."""
        return self.matrix.shape[1]


@dataclass(frozen=True)
class ExpectileFit:
    """
    A fitted coefficient matrix at one expectile level.

    :ivar gamma: k x q coefficients
    :vartype gamma: FloatArray
    :ivar tau: the expectile level
    :vartype tau: float
    :ivar lam: the nuclear norm penalty
    :vartype lam: float
    :ivar objective_trace: objective value at the start and after every iteration
    :vartype objective_trace: FloatArray
    :ivar converged: whether the relative objective change fell below tolerance
    :vartype converged: bool
    """

    gamma: FloatArray
    tau: float
    lam: float
    objective_trace: FloatArray = field(default_factory=lambda: np.zeros(0))
    converged: bool = field(default=True)

    def fitted(self: ExpectileFit, design: SplineDesign) -> FloatArray:
        """Get the fitted expectile curves, S x q."""
        return design.matrix @ self.gamma

    def moment_curve(self: ExpectileFit, design: SplineDesign) -> FloatArray:
        """Get the average fitted curve over the q columns."""
        return self.fitted(design).mean(axis=1)

    def rank(self: ExpectileFit, threshold: float = 1e-8) -> int:
        """Get the number of singular values of gamma above ``threshold``."""
        return int(np.sum(linalg.svdvals(self.gamma) > threshold))


def bspline_design(n_steps: int, n_splines: int, degree: int = DEFAULT_DEGREE) -> SplineDesign:
    """
    Evaluate a clamped B-spline basis with equidistant interior knots at s / S.

    :param n_steps: number of intra-day positions S
    :param n_splines: number of basis functions k
    :param degree: spline degree, 3 for cubic splines
    :raises ParamError: if k <= degree (for degree > 0) or S < k
    """
    if degree < 0:
        raise ParamError(f"degree={degree} must be non-negative")
    if n_splines < 1 or (degree > 0 and n_splines <= degree):
        raise ParamError(f"n_splines={n_splines} must exceed degree={degree}")
    if n_steps < n_splines:
        raise ParamError(f"n_steps={n_steps} must be at least n_splines={n_splines}")

    interior = np.linspace(0.0, 1.0, n_splines - degree + 1)[1:-1]
    knots = np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])
    positions = np.arange(n_steps) / n_steps
    matrix = BSpline.design_matrix(positions, knots, degree).toarray()
    return SplineDesign(matrix=matrix, knots=knots, degree=degree)


def expectile_loss(u: float | FloatArray, tau: float) -> float | FloatArray:
    """Get rho_tau(u) = |tau - 1(u < 0)| u^2, elementwise."""
    if not 0.0 < tau < 1.0:
        raise ParamError(f"tau={tau} must lie in (0, 1)")
    u = np.asarray(u, dtype=np.float64)
    loss = np.where(u < 0.0, 1.0 - tau, tau) * u * u
    return float(loss) if loss.ndim == 0 else loss


def nuclear_norm(matrix: FloatArray) -> float:
    """Get the sum of the singular values."""
    try:
        return float(np.sum(linalg.svdvals(matrix)))
    except linalg.LinAlgError as exc:
        raise NumericError(f"singular value decomposition failed: {exc}") from exc


def prox_nuclear(matrix: FloatArray, lam: float) -> FloatArray:
    """
    Soft-threshold the singular values of ``matrix`` by ``lam``.

    :raises NumericError: if the matrix is not finite or the SVD fails
    """
    if lam < 0.0:
        raise ParamError(f"lam={lam} must be non-negative")
    matrix = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(matrix)):
        raise NumericError("cannot threshold a matrix with non-finite entries")
    if lam == 0.0:
        return matrix.copy()
    try:
        u, sigma, vt = linalg.svd(matrix, full_matrices=False)
    except linalg.LinAlgError as exc:
        raise NumericError(f"singular value decomposition failed: {exc}") from exc
    return (u * np.maximum(sigma - lam, 0.0)) @ vt


def _weights(residual: FloatArray, tau: float) -> FloatArray:
    return np.where(residual < 0.0, 1.0 - tau, tau)


def objective(y: FloatArray, design: SplineDesign, gamma: FloatArray, tau: float, lam: float) -> float:
    """Get the penalized expectile objective at ``gamma``."""
    residual = y - design.matrix @ gamma
    loss = float(np.mean(_weights(residual, tau) * residual * residual))
    return loss + (lam * nuclear_norm(gamma) if lam > 0.0 else 0.0)


def _gradient(y: FloatArray, x: FloatArray, gamma: FloatArray, tau: float) -> FloatArray:
    residual = y - x @ gamma
    return -2.0 / y.size * (x.T @ (_weights(residual, tau) * residual))


def lambda_max(y: FloatArray, design: SplineDesign, tau: float) -> float:
    """Get the smallest penalty for which the zero matrix is the solution."""
    y = _check_shapes(y, design, tau, 0.0)
    gradient = _gradient(y, design.matrix, np.zeros((design.n_splines, y.shape[1])), tau)
    return float(linalg.norm(gradient, 2))


def lambda_grid(
    y: FloatArray, design: SplineDesign, tau: float, n_lambda: int = DEFAULT_N_LAMBDA
) -> FloatArray:
    """Get the candidate penalties: 0 and a logarithmic grid ending at :py:func:`lambda_max`."""
    top = lambda_max(y, design, tau)
    if n_lambda < 2 or top <= 0.0:
        return np.zeros(1)
    return np.concatenate([[0.0], np.geomspace(top * LAMBDA_RANGE, top, n_lambda - 1)])


def _check_shapes(y: FloatArray, design: SplineDesign, tau: float, lam: float) -> FloatArray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[0] != design.n_steps:
        raise ParamError(f"Y of shape {y.shape} does not match a design with {design.n_steps} rows")
    if not np.all(np.isfinite(y)):
        raise ParamError("Y must be finite")
    if not 0.0 < tau < 1.0:
        raise ParamError(f"tau={tau} must lie in (0, 1)")
    if lam < 0.0:
        raise ParamError(f"lam={lam} must be non-negative")
    return y


def fastec_fit(
    y: FloatArray,
    design: SplineDesign,
    tau: float,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    logger: logging.Logger | None = None,
) -> ExpectileFit:
    """
    Minimize the penalized expectile objective by accelerated proximal gradient.

    Steps have size 1 / L with L = 2 max(tau, 1 - tau) ||X||_2^2 / (S q). Whenever an
    accelerated step would raise the objective the momentum is reset and a plain proximal
    gradient step is taken from the current iterate, so the objective trace never increases.
    Iteration stops when the relative objective change is below ``tol``.

    :param y: S x q day-curves
    :param design: the B-spline design
    :param tau: expectile level in (0, 1)
    :param lam: nuclear norm penalty
    :param tol: relative objective change tolerance
    :param max_iter: maximum number of iterations
    :param logger: the logger instance to use.
    :return: the fit, flagged not converged if ``max_iter`` was reached
    """
    logger = logger or _LOGGER
    y = _check_shapes(y, design, tau, lam)
    x = design.matrix
    spectral = float(linalg.norm(x, 2))
    lipschitz = 2.0 * max(tau, 1.0 - tau) * spectral**2 / y.size
    step = 1.0 / lipschitz
    threshold = lam * step

    gamma = np.zeros((design.n_splines, y.shape[1]))
    momentum = gamma
    t = 1.0
    value = objective(y, design, gamma, tau, lam)
    trace = [value]
    converged = False
    for _ in range(max_iter):
        candidate = prox_nuclear(momentum - step * _gradient(y, x, momentum, tau), threshold)
        candidate_value = objective(y, design, candidate, tau, lam)
        if candidate_value > value:
            candidate = prox_nuclear(gamma - step * _gradient(y, x, gamma, tau), threshold)
            candidate_value = objective(y, design, candidate, tau, lam)
            if candidate_value > value:
                # rounding level, no further descent possible
                converged = True
                break
            momentum = candidate
            t = 1.0
        else:
            t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
            momentum = candidate + ((t - 1.0) / t_next) * (candidate - gamma)
            t = t_next

        change = abs(value - candidate_value)
        gamma, value = candidate, candidate_value
        trace.append(value)
        if change <= tol * max(abs(trace[-2]), np.finfo(float).tiny):
            converged = True
            break

    if not converged:
        logger.warning(f"expectile fit tau={tau} lam={lam:.3e} did not converge in {max_iter} iterations")
    return ExpectileFit(
        gamma=gamma,
        tau=float(tau),
        lam=float(lam),
        objective_trace=np.asarray(trace),
        converged=converged,
    )


def cv_scores(
    y: FloatArray,
    design: SplineDesign,
    tau: float,
    grid: Sequence[float],
    folds: int = DEFAULT_FOLDS,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> FloatArray:
    """
    Get the cross-validated expectile loss of every penalty in ``grid``.

    Intra-day positions are split into interleaved folds, position s going to fold s mod folds.
    Each fold is predicted by a fit on the remaining positions.

    :raises CvError: if folds < 2 or folds > S
    """
    y = _check_shapes(y, design, tau, 0.0)
    if folds < 2 or folds > design.n_steps:
        raise CvError(f"folds={folds} must be in [2, {design.n_steps}]")

    fold_of = np.arange(design.n_steps) % folds
    scores = np.zeros(len(grid))
    for index, lam in enumerate(grid):
        losses = []
        for fold in range(folds):
            held_out = fold_of == fold
            train_design = SplineDesign(
                matrix=design.matrix[~held_out], knots=design.knots, degree=design.degree
            )
            fit = fastec_fit(y[~held_out], train_design, tau, float(lam), tol=tol, max_iter=max_iter)
            residual = y[held_out] - design.matrix[held_out] @ fit.gamma
            losses.append(np.mean(expectile_loss(residual, tau)))
        scores[index] = float(np.mean(losses))
    return scores


def select_lambda(
    y: FloatArray,
    design: SplineDesign,
    tau: float,
    folds: int = DEFAULT_FOLDS,
    grid: Sequence[float] | None = None,
    n_lambda: int = DEFAULT_N_LAMBDA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """
    Select the penalty with the smallest cross-validated expectile loss.

    The grid defaults to :py:func:`lambda_grid`. Ties go to the larger penalty.
    """
    if grid is None:
        grid = lambda_grid(y, design, tau, n_lambda)
    candidates = np.sort(np.asarray(grid, dtype=np.float64))
    if len(candidates) == 0:
        raise CvError("penalty grid is empty")
    scores = cv_scores(y, design, tau, candidates, folds=folds, tol=tol, max_iter=max_iter)
    best = int(np.flatnonzero(scores == scores.min())[-1])
    _LOGGER.debug(f"selected lam={candidates[best]:.4e} with cv loss {scores[best]:.6e} for tau={tau}")
    return float(candidates[best])


def bootstrap_enlarge(curves: Sequence[FloatArray] | FloatArray, target_count: int, seed: int) -> FloatArray:
    """
    Resample whole day-curves with replacement.

    :param curves: the day-curves, one per row
    :param target_count: the number of curves to draw
    :param seed: seed of the resampling generator
    :return: target_count x S curves, each a copy of an input curve
    :raises EmptyInput: if there are no curves
    """
    array = np.asarray(curves, dtype=np.float64)
    if array.size == 0 or len(array) == 0:
        raise EmptyInput("no day-curves to resample")
    if target_count < 1:
        raise ParamError(f"target_count={target_count} must be positive")
    index = np.random.default_rng(seed).integers(0, len(array), size=target_count)
    return array[index].copy()


def splines_for(n_observations: int, max_splines: int, degree: int = DEFAULT_DEGREE) -> int:
    """Get the number of splines floor(sqrt(n)), capped at ``max_splines`` and above the degree."""
    return max(min(int(math.floor(math.sqrt(n_observations))), max_splines), degree + 1)

