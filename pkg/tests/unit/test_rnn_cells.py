# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""This module contains the pytest tests for the recurrent cells and their gradients."""

import itertools
from typing import List, Tuple

import numpy as np
import pytest
from scipy import special

from plant_load_forecast.errors import NumericError, ParamError
from plant_load_forecast.rnn_cells import (
    GRU,
    LSTM,
    PARAM_NAMES,
    RnnParams,
    backward,
    batch_loss,
    dense_apply,
    forward,
    gru_forward,
    init_params,
    loss_and_gradient,
    lstm_forward,
)

FD_STEP = 1e-6
GRADIENT_FLOOR = 1e-4


def _gradient_configs() -> List[Tuple[str, int, int, int, int, bool, int]]:
    shapes = list(itertools.product([LSTM, GRU], range(2, 6), range(1, 5), [1, 2]))
    configs = []
    for seed, (kind, n_steps, n_inputs, n_outputs) in enumerate(shapes):
        configs.append((kind, n_steps, n_inputs, n_outputs, 1 + seed % 2, seed % 3 == 0, seed))
    return configs


def _numeric_gradient(params: RnnParams, inputs: np.ndarray, target: np.ndarray) -> RnnParams:
    grad = params.zeros_like()
    for name in PARAM_NAMES:
        values = getattr(params, name)
        out = getattr(grad, name)
        for index in np.ndindex(values.shape):
            saved = values[index]
            values[index] = saved + FD_STEP
            up = batch_loss(dense_apply(params.dense, forward(params, inputs)[0]), target)
            values[index] = saved - FD_STEP
            down = batch_loss(dense_apply(params.dense, forward(params, inputs)[0]), target)
            values[index] = saved
            out[index] = (up - down) / (2.0 * FD_STEP)
    return grad


def _flatten(params: RnnParams) -> np.ndarray:
    return np.concatenate([a.reshape(-1) for a in params.arrays().values()])


@pytest.mark.parametrize(
    "cell_kind, n_steps, n_inputs, n_outputs, width, shared, seed", _gradient_configs()
)
def test_gradient_matches_finite_differences(
    cell_kind: str, n_steps: int, n_inputs: int, n_outputs: int, width: int, shared: bool, seed: int
) -> None:
    """Test every analytic gradient coordinate against central differences for random models."""
    rng = np.random.default_rng(seed)
    params = init_params(
        cell_kind, n_steps, n_inputs, n_outputs, rng, width=width, shared_weights=shared, scale=0.8
    )
    inputs = rng.uniform(0.0, 1.0, size=(3, n_steps, n_inputs))
    target = rng.uniform(0.0, 1.0, size=(3, n_outputs))

    _, analytic = loss_and_gradient(params, inputs, target)
    numeric = _numeric_gradient(params, inputs, target)

    a, n = _flatten(analytic), _flatten(numeric)
    relative_error = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), GRADIENT_FLOOR)
    assert np.max(relative_error) < 1e-5


def test_init_params_shapes(rng: np.random.Generator) -> None:
    """Test the coefficient shapes for per-step and shared gate weights."""
    params = init_params(LSTM, n_steps=6, n_inputs=4, n_outputs=12, rng=rng, width=2)
    assert params.gamma.shape == (6, 4, 4, 2)
    assert params.theta.shape == (6, 4, 2, 2)
    assert params.lam.shape == (6, 4, 2)
    assert params.dense.shape == (12, 12)
    assert not params.shared_weights

    shared = init_params(GRU, n_steps=6, n_inputs=4, n_outputs=12, rng=rng, shared_weights=True)
    assert shared.gamma.shape == (1, 3, 4, 1)
    assert shared.shared_weights
    assert shared.n_steps == 6
    assert np.all(np.abs(shared.dense) <= 0.05)


def test_init_params_is_reproducible() -> None:
    """Test the same generator state yields the same coefficients."""
    first = init_params(GRU, 5, 4, 10, np.random.default_rng(9))
    second = init_params(GRU, 5, 4, 10, np.random.default_rng(9))
    np.testing.assert_array_equal(_flatten(first), _flatten(second))


def test_lstm_single_step_oracle() -> None:
    """Test one LSTM step against the gate equations evaluated by hand."""
    params = RnnParams(
        cell_kind=LSTM,
        gamma=np.array([0.5, -0.3, 0.8, 0.2]).reshape(1, 4, 1, 1),
        theta=np.array([0.1, 0.2, -0.4, 0.3]).reshape(1, 4, 1, 1),
        lam=np.array([0.0, 0.1, -0.1, 0.05]).reshape(1, 4, 1),
        dense=np.array([[2.0]]),
    )
    x, h0, m0 = 0.6, 0.2, -0.5
    i = special.expit(0.5 * x + 0.1 * h0 + 0.0)
    f = special.expit(-0.3 * x + 0.2 * h0 + 0.1)
    c = np.tanh(0.8 * x - 0.4 * h0 - 0.1)
    o = special.expit(0.2 * x + 0.3 * h0 + 0.05)
    m = f * m0 + i * c
    expected = o * np.tanh(m)

    hidden, trace = lstm_forward(params, np.array([[x]]), h0=h0, m0=m0)
    assert hidden.shape == (1,)
    assert hidden[0] == pytest.approx(expected, rel=1e-12)
    assert trace.memory[0, 0, 0] == pytest.approx(m, rel=1e-12)


def test_gru_single_step_oracle() -> None:
    """Test one GRU step, where the input gate scales the candidate's recurrent term."""
    params = RnnParams(
        cell_kind=GRU,
        gamma=np.array([0.4, 0.7, -0.2]).reshape(1, 3, 1, 1),
        theta=np.array([0.3, -0.6, 0.5]).reshape(1, 3, 1, 1),
        lam=np.array([0.1, 0.0, 0.2]).reshape(1, 3, 1),
        dense=np.array([[1.0]]),
    )
    x, h0 = 0.9, 0.4
    i = special.expit(0.4 * x + 0.3 * h0 + 0.1)
    c = np.tanh(0.7 * x + i * (-0.6 * h0) + 0.0)
    u = special.expit(-0.2 * x + 0.5 * h0 + 0.2)
    expected = (1.0 - u) * h0 + u * c

    hidden, _ = gru_forward(params, np.array([[x]]), h0=h0)
    assert hidden[0] == pytest.approx(expected, rel=1e-12)


def test_gru_with_open_update_gate_follows_candidate(rng: np.random.Generator) -> None:
    """Test a saturated update gate makes every hidden value equal its candidate."""
    params = init_params(GRU, 12, 4, 6, rng, width=2, scale=0.8)
    params.lam[:, 2, :] = 60.0
    hidden, trace = gru_forward(params, rng.uniform(size=(12, 4)), h0=0.7)

    np.testing.assert_array_equal(trace.gates[0, :, 2], 1.0)
    np.testing.assert_allclose(hidden, trace.gates[0, :, 1].reshape(-1), atol=1e-12)


def test_lstm_hidden_values_are_bounded(rng: np.random.Generator) -> None:
    """Test LSTM hidden values stay strictly inside (-1, 1) for large coefficients."""
    params = init_params(LSTM, 96, 4, 8, rng, width=2, scale=3.0)
    hidden, _ = lstm_forward(params, rng.uniform(size=(20, 96, 4)), h0=0.9, m0=-2.0)
    assert np.all(np.abs(hidden) < 1.0)


def test_zero_coefficients() -> None:
    """Test zero coefficients keep the LSTM at rest and halve the GRU state every step."""
    lstm = init_params(LSTM, 3, 2, 4, np.random.default_rng(0), scale=0.0)
    hidden, _ = lstm_forward(lstm, np.ones((3, 2)))
    np.testing.assert_array_equal(hidden, np.zeros(3))

    gru = init_params(GRU, 3, 2, 4, np.random.default_rng(0), scale=0.0)
    hidden, _ = gru_forward(gru, np.ones((3, 2)), h0=1.0)
    np.testing.assert_allclose(hidden, [0.5, 0.25, 0.125])


def test_batch_forward_matches_single_days(rng: np.random.Generator) -> None:
    """Test a batched forward pass equals day by day passes."""
    params = init_params(LSTM, 5, 4, 10, rng, width=2, scale=0.5)
    days = rng.uniform(size=(3, 5, 4))
    batched, _ = forward(params, days)
    for d in range(3):
        single, _ = lstm_forward(params, days[d])
        np.testing.assert_allclose(batched[d], single, rtol=1e-12)


def test_forward_reports_non_finite_values(rng: np.random.Generator) -> None:
    """Test a non-finite input is reported with its step and gate."""
    params = init_params(GRU, 4, 2, 8, rng)
    inputs = np.full((4, 2), 0.5)
    inputs[2, 1] = np.nan
    with pytest.raises(NumericError, match="step 2"):
        forward(params, inputs)


def test_forward_rejects_wrong_inputs(rng: np.random.Generator) -> None:
    """Test inputs must match the steps and columns of the model."""
    params = init_params(LSTM, 4, 2, 8, rng)
    with pytest.raises(ParamError):
        forward(params, np.zeros((5, 2)))
    with pytest.raises(ParamError):
        gru_forward(params, np.zeros((4, 2)))
    with pytest.raises(ParamError):
        dense_apply(params.dense, np.zeros(3))


def test_params_validation(rng: np.random.Generator) -> None:
    """Test inconsistent coefficient shapes and unknown kinds are rejected."""
    params = init_params(LSTM, 4, 2, 8, rng)
    with pytest.raises(ParamError):
        RnnParams(LSTM, params.gamma, params.theta, params.lam, params.dense[:, :3])
    with pytest.raises(ParamError):
        RnnParams(GRU, params.gamma, params.theta, params.lam, params.dense)
    with pytest.raises(ParamError):
        init_params("rnn", 4, 2, 8, rng)


def test_backward_rejects_wrong_target(rng: np.random.Generator) -> None:
    """Test the target must have one row of P values per day in the trace."""
    params = init_params(GRU, 4, 2, 8, rng)
    _, trace = forward(params, rng.uniform(size=(2, 4, 2)))
    with pytest.raises(ParamError):
        backward(params, trace, np.zeros((3, 8)))
    with pytest.raises(ParamError):
        backward(params, trace, np.zeros((2, 8)), loss="mae")


def test_params_copy_is_deep(rng: np.random.Generator) -> None:
    """Test copies and zero-filled coefficients do not share memory with the original."""
    params = init_params(LSTM, 3, 2, 4, rng)
    copy = params.copy()
    copy.gamma[0, 0, 0, 0] += 1.0
    assert copy.gamma[0, 0, 0, 0] != params.gamma[0, 0, 0, 0]
    assert np.all(_flatten(params.zeros_like()) == 0.0)
    assert params.is_finite()
