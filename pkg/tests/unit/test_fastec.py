# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""This module contains the pytest tests for penalized expectile regression on B-splines."""

import logging

import numpy as np
import pytest

from plant_load_forecast.errors import CvError, EmptyInput, NumericError, ParamError
from plant_load_forecast.fastec import (
    SplineDesign,
    bootstrap_enlarge,
    bspline_design,
    cv_scores,
    expectile_loss,
    fastec_fit,
    lambda_grid,
    lambda_max,
    nuclear_norm,
    prox_nuclear,
    select_lambda,
    splines_for,
)


@pytest.fixture
def design() -> SplineDesign:
    """Return a cubic design of 6 splines on 24 intra-day positions."""
    return bspline_design(24, 6)


def test_bspline_design(design: SplineDesign) -> None:
    """Test the basis has the requested shape, is non-negative and sums to one on every row."""
    assert design.matrix.shape == (24, 6)
    assert design.n_steps == 24
    assert design.n_splines == 6
    assert np.all(design.matrix >= 0.0)
    np.testing.assert_allclose(design.matrix.sum(axis=1), 1.0)
    assert len(design.knots) == 6 + 3 + 1


def test_bspline_design_rejects_bad_sizes() -> None:
    """Test too few splines for the degree and too few positions are rejected."""
    with pytest.raises(ParamError):
        bspline_design(24, 3, degree=3)
    with pytest.raises(ParamError):
        bspline_design(4, 6)
    with pytest.raises(ParamError):
        bspline_design(24, 6, degree=-1)


def test_expectile_loss() -> None:
    """Test the asymmetric squared loss on both sides of zero."""
    assert expectile_loss(2.0, 0.2) == pytest.approx(0.8)
    assert expectile_loss(-2.0, 0.2) == pytest.approx(3.2)
    np.testing.assert_allclose(expectile_loss(np.array([-1.0, 0.0, 1.0]), 0.5), [0.5, 0.0, 0.5])
    with pytest.raises(ParamError):
        expectile_loss(1.0, 1.0)


def test_nuclear_norm_and_threshold() -> None:
    """Test the singular value sum and its soft-thresholding operator."""
    matrix = np.diag([3.0, -1.0])
    assert nuclear_norm(matrix) == pytest.approx(4.0)
    np.testing.assert_allclose(prox_nuclear(matrix, 2.0), [[1.0, 0.0], [0.0, 0.0]], atol=1e-12)

    copy = prox_nuclear(matrix, 0.0)
    np.testing.assert_array_equal(copy, matrix)
    assert copy is not matrix
    with pytest.raises(NumericError):
        prox_nuclear(np.array([[np.nan, 0.0], [0.0, 1.0]]), 1.0)
    with pytest.raises(ParamError):
        prox_nuclear(matrix, -1.0)


def test_prox_nuclear_is_non_expansive(rng: np.random.Generator) -> None:
    """Test thresholding never moves two matrices further apart."""
    for lam in (0.1, 0.5, 2.0):
        first, second = rng.normal(size=(6, 9)), rng.normal(size=(6, 9))
        distance = np.linalg.norm(prox_nuclear(first, lam) - prox_nuclear(second, lam))
        assert distance <= np.linalg.norm(first - second) + 1e-12


def test_median_fit_of_negated_curves_is_negated(design: SplineDesign, rng: np.random.Generator) -> None:
    """Test tau 0.5 treats both signs alike, so negating the curves negates the coefficients."""
    y = rng.normal(0.5, 0.2, size=(24, 6))
    lam = 0.2 * lambda_max(y, design, 0.5)

    fit = fastec_fit(y, design, 0.5, lam, tol=0.0, max_iter=20000)
    negated = fastec_fit(-y, design, 0.5, lam, tol=0.0, max_iter=20000)
    np.testing.assert_allclose(negated.gamma, -fit.gamma, atol=1e-6)


def test_nuclear_norm_shrinks_with_penalty(design: SplineDesign) -> None:
    """Test the nuclear norm of the fitted coefficients does not grow as the penalty grows."""
    y = np.random.default_rng(31).uniform(0.0, 100.0, size=(24, 8))
    norms = [
        nuclear_norm(fastec_fit(y, design, 0.5, lam, tol=1e-12, max_iter=20000).gamma)
        for lam in (0.0, 0.1, 1.0, 10.0)
    ]
    for smaller_penalty, larger_penalty in zip(norms, norms[1:]):
        assert larger_penalty <= smaller_penalty * (1.0 + 1e-6)
    assert norms[-1] < norms[0]


def test_unpenalized_median_fit_is_least_squares(design: SplineDesign, rng: np.random.Generator) -> None:
    """Test tau 0.5 without penalty reproduces the ordinary least squares curves."""
    y = rng.uniform(0.0, 1.0, size=(24, 5))
    fit = fastec_fit(y, design, 0.5, 0.0, tol=0.0, max_iter=20000)

    gamma, *_ = np.linalg.lstsq(design.matrix, y, rcond=None)
    np.testing.assert_allclose(fit.fitted(design), design.matrix @ gamma, atol=1e-6)
    assert fit.converged


def test_objective_trace_never_increases(design: SplineDesign, rng: np.random.Generator) -> None:
    """Test the solver's objective trace is non-increasing."""
    y = rng.normal(0.5, 0.2, size=(24, 8))
    fit = fastec_fit(y, design, 0.8, 0.1 * lambda_max(y, design, 0.8))
    assert np.all(np.diff(fit.objective_trace) <= 0.0)
    assert fit.tau == 0.8


def test_penalty_above_lambda_max_gives_zero(design: SplineDesign, rng: np.random.Generator) -> None:
    """Test the zero matrix solves the problem once the penalty reaches lambda_max."""
    y = rng.uniform(0.0, 1.0, size=(24, 4))
    fit = fastec_fit(y, design, 0.3, 1.01 * lambda_max(y, design, 0.3))
    np.testing.assert_array_equal(fit.gamma, np.zeros((6, 4)))
    assert fit.rank() == 0


def test_penalty_recovers_low_rank(design: SplineDesign, rng: np.random.Generator) -> None:
    """Test a moderate penalty keeps only the common shape of nearly proportional curves."""
    positions = np.arange(24) / 24
    shape = 0.5 + 0.3 * np.sin(2.0 * np.pi * positions)
    y = np.outer(shape, rng.uniform(0.5, 1.5, 12)) + rng.normal(0.0, 0.01, size=(24, 12))

    assert fastec_fit(y, design, 0.5, 0.0).rank() == 6
    assert fastec_fit(y, design, 0.5, 0.2 * lambda_max(y, design, 0.5)).rank() == 1


def test_expectile_levels_are_ordered(design: SplineDesign, rng: np.random.Generator) -> None:
    """Test higher expectile levels give higher fitted curves on average."""
    positions = np.arange(24) / 24
    y = (0.5 + 0.2 * np.sin(2.0 * np.pi * positions))[:, None] + rng.normal(0.0, 0.2, size=(24, 30))
    means = [fastec_fit(y, design, tau, 0.0).fitted(design).mean() for tau in (0.1, 0.5, 0.9)]
    assert means[0] < means[1] < means[2]


def test_fit_rejects_bad_arguments(design: SplineDesign) -> None:
    """Test mismatched curves and invalid levels or penalties are rejected."""
    with pytest.raises(ParamError):
        fastec_fit(np.zeros((23, 2)), design, 0.5, 0.0)
    with pytest.raises(ParamError):
        fastec_fit(np.zeros((24, 2)), design, 0.0, 0.0)
    with pytest.raises(ParamError):
        fastec_fit(np.zeros((24, 2)), design, 0.5, -1.0)
    with pytest.raises(ParamError):
        fastec_fit(np.full((24, 2), np.inf), design, 0.5, 0.0)


def test_fit_logs_when_not_converged(
    design: SplineDesign, rng: np.random.Generator, caplog: pytest.LogCaptureFixture, logger: logging.Logger
) -> None:
    """Test reaching the iteration limit is flagged and logged."""
    y = rng.uniform(0.0, 1.0, size=(24, 3))
    with caplog.at_level(logging.WARNING):
        fit = fastec_fit(y, design, 0.5, 0.0, tol=0.0, max_iter=2, logger=logger)
    assert not fit.converged
    assert "did not converge" in caplog.text


def test_lambda_grid(design: SplineDesign, rng: np.random.Generator) -> None:
    """Test the penalty grid starts at zero and ends at lambda_max."""
    y = rng.uniform(0.0, 1.0, size=(24, 4))
    grid = lambda_grid(y, design, 0.5, n_lambda=10)
    assert len(grid) == 10
    assert grid[0] == 0.0
    assert grid[-1] == pytest.approx(lambda_max(y, design, 0.5))
    assert np.all(np.diff(grid) > 0.0)
    np.testing.assert_array_equal(lambda_grid(np.zeros((24, 2)), design, 0.5), [0.0])


def test_select_lambda_prefers_no_penalty_for_exact_curves(
    design: SplineDesign, rng: np.random.Generator
) -> None:
    """Test curves lying in the spline span are best predicted without shrinkage."""
    y = design.matrix @ rng.uniform(0.0, 1.0, size=(6, 4))
    top = lambda_max(y, design, 0.5)
    grid = [0.0, 0.5 * top, top]

    scores = cv_scores(y, design, 0.5, grid, folds=3, tol=1e-12)
    assert scores[0] < scores[1] < scores[2]
    assert select_lambda(y, design, 0.5, folds=3, grid=grid, tol=1e-12) == 0.0


def test_select_lambda_shrinks_pure_noise(design: SplineDesign) -> None:
    """Test curves of pure noise select a penalty from the upper half of the grid."""
    y = np.random.default_rng(43).normal(0.0, 1.0, size=(24, 20))
    grid = lambda_grid(y, design, 0.5, n_lambda=10)

    selected = select_lambda(y, design, 0.5, grid=grid)
    assert selected >= np.sort(grid)[len(grid) // 2]


def test_cv_rejects_bad_folds(design: SplineDesign) -> None:
    """Test the number of folds must be between 2 and the number of positions."""
    y = np.zeros((24, 2))
    with pytest.raises(CvError):
        cv_scores(y, design, 0.5, [0.0], folds=1)
    with pytest.raises(CvError):
        cv_scores(y, design, 0.5, [0.0], folds=25)
    with pytest.raises(CvError):
        select_lambda(y, design, 0.5, grid=[])


def test_bootstrap_enlarge(rng: np.random.Generator) -> None:
    """Test resampled curves are copies of the inputs and reproducible by seed."""
    curves = rng.uniform(size=(5, 8))
    enlarged = bootstrap_enlarge(curves, 50, seed=7)

    assert enlarged.shape == (50, 8)
    for row in enlarged:
        assert np.any(np.all(curves == row, axis=1))
    np.testing.assert_array_equal(enlarged, bootstrap_enlarge(curves, 50, seed=7))
    with pytest.raises(EmptyInput):
        bootstrap_enlarge([], 5, seed=0)
    with pytest.raises(ParamError):
        bootstrap_enlarge(curves, 0, seed=0)


@pytest.mark.parametrize("n_observations, expected", [(672, 24), (100, 10), (10, 4)])
def test_splines_for(n_observations: int, expected: int) -> None:
    """Test the number of splines is the root of the observation count within its limits."""
    assert splines_for(n_observations, 24) == expected
