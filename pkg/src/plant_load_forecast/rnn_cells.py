# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""
Module for the LSTM and GRU day-curve cells, the dense forecast head and their analytic gradients.

Each of the S steps of a day has its own gate coefficients unless ``shared_weights`` is set.
For gate g at step s with input row x_s (k values) and previous hidden value h_{s-1}
(``width`` values) the pre-activation is ``x_s gamma[s, g] + h_{s-1} theta[s, g] + lam[s, g]``.

LSTM gates are ordered input, forget, memory, output; GRU gates input, candidate, update. The
GRU candidate applies the input gate to its recurrent term:
``c = tanh(x_s gamma[s, c] + i * (h_{s-1} theta[s, c]) + lam[s, c])``.

The hidden values of all steps, flattened step by step, feed a dense head of P outputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
from scipy import special

from .array_types import FloatArray
from .errors import NumericError, ParamError

__all__ = [
    "LSTM",
    "GRU",
    "CELL_GATES",
    "RnnParams",
    "ForwardTrace",
    "init_params",
    "forward",
    "lstm_forward",
    "gru_forward",
    "dense_apply",
    "backward",
    "batch_loss",
    "loss_and_gradient",
]

LSTM = "lstm"
GRU = "gru"
CELL_GATES: Dict[str, Tuple[str, ...]] = {
    LSTM: ("input", "forget", "memory", "output"),
    GRU: ("input", "candidate", "update"),
}
PARAM_NAMES: Tuple[str, ...] = ("gamma", "theta", "lam", "dense")
DEFAULT_INIT_SCALE = 0.05


@dataclass
class RnnParams:
    """
    Coefficients of an LSTM or GRU day-curve model.

    :ivar cell_kind: lstm or gru
    :vartype cell_kind: str
    :ivar gamma: input weights, (S or 1) x G x k x width
    :vartype gamma: FloatArray
    :ivar theta: recurrent weights, (S or 1) x G x width x width
    :vartype theta: FloatArray
    :ivar lam: intercepts, (S or 1) x G x width
    :vartype lam: FloatArray
    :ivar dense: dense head, P x (S * width)
    :vartype dense: FloatArray
    :ivar n_steps: number of steps S per day
    :vartype n_steps: int
    """

    cell_kind: str
    gamma: FloatArray
    theta: FloatArray
    lam: FloatArray
    dense: FloatArray
    n_steps: int = field(default=0)

    def __post_init__(self: RnnParams) -> None:
        """Validate the coefficient shapes against each other."""
        if self.cell_kind not in CELL_GATES:
            raise ParamError(f"unknown cell kind {self.cell_kind!r}, expected one of {list(CELL_GATES)}")
        self.gamma = np.asarray(self.gamma, dtype=np.float64)
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.lam = np.asarray(self.lam, dtype=np.float64)
        self.dense = np.asarray(self.dense, dtype=np.float64)
        if self.n_steps == 0:
            self.n_steps = self.gamma.shape[0]

        n_gates = len(CELL_GATES[self.cell_kind])
        blocks, width = self.gamma.shape[0], self.gamma.shape[-1]
        expected = {
            "gamma": (blocks, n_gates, self.gamma.shape[2], width),
            "theta": (blocks, n_gates, width, width),
            "lam": (blocks, n_gates, width),
            "dense": (self.dense.shape[0], self.n_steps * width),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ParamError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if blocks not in (1, self.n_steps):
            raise ParamError(f"gate blocks {blocks} must be 1 (shared) or n_steps={self.n_steps}")

    @property
    def n_gates(self: RnnParams) -> int:
        """Get the number of gates G."""
        return len(CELL_GATES[self.cell_kind])

    @property
    def n_inputs(self: RnnParams) -> int:
        """Get the number of input columns k."""
        return self.gamma.shape[2]

    @property
    def width(self: RnnParams) -> int:
        """Get the hidden width per step."""
        return self.gamma.shape[-1]

    @property
    def n_outputs(self: RnnParams) -> int:
        """Get the number of forecast values P."""
        return self.dense.shape[0]

    @property
    def shared_weights(self: RnnParams) -> bool:
        """Get whether all steps share one set of gate coefficients."""
        return self.gamma.shape[0] == 1 and self.n_steps > 1

    def block(self: RnnParams, step: int) -> int:
        """Get the coefficient block used at ``step``."""
        return 0 if self.gamma.shape[0] == 1 else step

    def arrays(self: RnnParams) -> Dict[str, FloatArray]:
        """Get the coefficient arrays by name."""
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self: RnnParams) -> RnnParams:
        """Get a deep copy."""
        return RnnParams(self.cell_kind, *(a.copy() for a in self.arrays().values()), n_steps=self.n_steps)

    def zeros_like(self: RnnParams) -> RnnParams:
        """Get a zero-filled set of coefficients of the same shapes."""
        zeros = (np.zeros_like(a) for a in self.arrays().values())
        return RnnParams(self.cell_kind, *zeros, n_steps=self.n_steps)

    def is_finite(self: RnnParams) -> bool:
        """Get whether all coefficients are finite."""
        return all(bool(np.all(np.isfinite(a))) for a in self.arrays().values())


@dataclass
class ForwardTrace:
    """
    Intermediate values of a batched forward pass, kept for the backward pass.

    :ivar inputs: B x S x k inputs
    :ivar h_prev: B x S x width hidden value entering each step
    :ivar m_prev: B x S x width memory entering each step (LSTM only)
    :ivar gates: B x S x G x width gate activations
    :ivar memory: B x S x width memory after each step (LSTM only)
    :ivar recurrent: B x S x width candidate recurrent term h_{s-1} theta[s, c] (GRU only)
    :ivar hidden: B x S x width hidden values
    """

    inputs: FloatArray
    h_prev: FloatArray
    m_prev: FloatArray
    gates: FloatArray
    memory: FloatArray
    recurrent: FloatArray
    hidden: FloatArray

    @property
    def flat_hidden(self: ForwardTrace) -> FloatArray:
        """Get the hidden values as B x (S * width), step by step."""
        return self.hidden.reshape(self.hidden.shape[0], -1)


def init_params(
    cell_kind: str,
    n_steps: int,
    n_inputs: int,
    n_outputs: int,
    rng: np.random.Generator,
    width: int = 1,
    shared_weights: bool = False,
    scale: float = DEFAULT_INIT_SCALE,
) -> RnnParams:
    """
    Draw every coefficient uniformly from [-scale, scale].

    The draw order is gamma, theta, lam, dense so a given generator state always yields the
    same model.
    """
    if cell_kind not in CELL_GATES:
        raise ParamError(f"unknown cell kind {cell_kind!r}")
    if min(n_steps, n_inputs, n_outputs, width) < 1:
        raise ParamError("n_steps, n_inputs, n_outputs and width must all be positive")
    n_gates = len(CELL_GATES[cell_kind])
    blocks = 1 if shared_weights else n_steps
    return RnnParams(
        cell_kind=cell_kind,
        gamma=rng.uniform(-scale, scale, size=(blocks, n_gates, n_inputs, width)),
        theta=rng.uniform(-scale, scale, size=(blocks, n_gates, width, width)),
        lam=rng.uniform(-scale, scale, size=(blocks, n_gates, width)),
        dense=rng.uniform(-scale, scale, size=(n_outputs, n_steps * width)),
        n_steps=n_steps,
    )


def _as_batch(params: RnnParams, inputs: FloatArray) -> FloatArray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != (params.n_steps, params.n_inputs):
        raise ParamError(
            f"inputs of shape {np.shape(inputs)} do not match ({params.n_steps}, {params.n_inputs})"
        )
    return x


def _initial_state(value: float | FloatArray, batch: int, width: int) -> FloatArray:
    state = np.asarray(value, dtype=np.float64)
    if state.ndim == 1 and state.shape[0] == batch and width != batch:
        state = state[:, None]
    return np.array(np.broadcast_to(state, (batch, width)), dtype=np.float64)


def _checked(values: FloatArray, step: int, gate: str) -> FloatArray:
    if not np.all(np.isfinite(values)):
        raise NumericError(f"non-finite {gate} value at step {step}")
    return values


def forward(
    params: RnnParams,
    inputs: FloatArray,
    h0: float | FloatArray = 0.0,
    m0: float | FloatArray = 0.0,
) -> Tuple[FloatArray, ForwardTrace]:
    """
    Run the cell over the steps of every day in the batch.

    :param params: the model coefficients
    :param inputs: S x k for one day or B x S x k for a batch
    :param h0: initial hidden value
    :param m0: initial memory, ignored by the GRU
    :return: the B x (S * width) hidden values and the trace for :py:func:`backward`
    :raises NumericError: naming the step and gate of the first non-finite value
    """
    x = _as_batch(params, inputs)
    batch, n_steps, width, n_gates = x.shape[0], params.n_steps, params.width, params.n_gates
    is_lstm = params.cell_kind == LSTM

    h = _initial_state(h0, batch, width)
    m = _initial_state(m0, batch, width) if is_lstm else np.zeros((batch, width))
    trace = ForwardTrace(
        inputs=x,
        h_prev=np.empty((batch, n_steps, width)),
        m_prev=np.zeros((batch, n_steps, width)),
        gates=np.empty((batch, n_steps, n_gates, width)),
        memory=np.zeros((batch, n_steps, width)),
        recurrent=np.zeros((batch, n_steps, width)),
        hidden=np.empty((batch, n_steps, width)),
    )

    for s in range(n_steps):
        b = params.block(s)
        x_part = np.einsum("bk,gkw->bgw", x[:, s], params.gamma[b]) + params.lam[b][None]
        h_part = np.einsum("bv,gvw->bgw", h, params.theta[b])
        trace.h_prev[:, s] = h

        if is_lstm:
            z = x_part + h_part
            i = _checked(special.expit(z[:, 0]), s, "input")
            f = _checked(special.expit(z[:, 1]), s, "forget")
            c = _checked(np.tanh(z[:, 2]), s, "memory")
            o = _checked(special.expit(z[:, 3]), s, "output")
            trace.m_prev[:, s] = m
            m = f * m + i * c
            h = o * np.tanh(m)
            trace.gates[:, s] = np.stack([i, f, c, o], axis=1)
            trace.memory[:, s] = m
        else:
            i = _checked(special.expit(x_part[:, 0] + h_part[:, 0]), s, "input")
            c = _checked(np.tanh(x_part[:, 1] + i * h_part[:, 1]), s, "candidate")
            u = _checked(special.expit(x_part[:, 2] + h_part[:, 2]), s, "update")
            h = (1.0 - u) * h + u * c
            trace.gates[:, s] = np.stack([i, c, u], axis=1)
            trace.recurrent[:, s] = h_part[:, 1]

        trace.hidden[:, s] = _checked(h, s, "hidden")

    return trace.flat_hidden, trace


def lstm_forward(
    params: RnnParams, inputs: FloatArray, h0: float = 0.0, m0: float = 0.0
) -> Tuple[FloatArray, ForwardTrace]:
    """Run an LSTM over one day (S x k) or a batch of days; see :py:func:`forward`."""
    if params.cell_kind != LSTM:
        raise ParamError(f"expected lstm coefficients, got {params.cell_kind}")
    hidden, trace = forward(params, inputs, h0=h0, m0=m0)
    return (hidden[0] if np.ndim(inputs) == 2 else hidden), trace


def gru_forward(params: RnnParams, inputs: FloatArray, h0: float = 0.0) -> Tuple[FloatArray, ForwardTrace]:
    """Run a GRU over one day (S x k) or a batch of days; see :py:func:`forward`."""
    if params.cell_kind != GRU:
        raise ParamError(f"expected gru coefficients, got {params.cell_kind}")
    hidden, trace = forward(params, inputs, h0=h0)
    return (hidden[0] if np.ndim(inputs) == 2 else hidden), trace


def dense_apply(dense: FloatArray, hidden: FloatArray) -> FloatArray:
    """
    Map hidden values to forecasts with the dense head.

    :param dense: P x (S * width) head
    :param hidden: (S * width) values for one day, or B x (S * width)
    :return: P forecasts for one day, or B x P
    """
    dense = np.asarray(dense, dtype=np.float64)
    hidden = np.asarray(hidden, dtype=np.float64)
    if dense.ndim != 2 or hidden.shape[-1] != dense.shape[1]:
        raise ParamError(f"dense head {dense.shape} does not match hidden values {hidden.shape}")
    return hidden @ dense.T


def batch_loss(predicted: FloatArray, target: FloatArray) -> float:
    """Get the mean over days of the per-day mean squared residual."""
    residual = np.asarray(predicted) - np.asarray(target)
    return float(np.mean(residual**2))


def backward(params: RnnParams, trace: ForwardTrace, target: FloatArray, loss: str = "mse") -> RnnParams:
    """
    Get the exact gradient of the batch loss by reverse-mode differentiation through time.

    The gradient flows through the dense head into every step's hidden value and back along the
    recurrent paths h_{s-1} -> gates and, for the LSTM, m_{s-1} -> m_s.

    :param params: the coefficients used in the forward pass
    :param trace: the trace of that forward pass
    :param target: P targets for one day or B x P
    :param loss: the loss, only mse is supported
    :return: the gradient, with the same shapes as ``params``
    :raises ParamError: if the target does not match the trace
    """
    if loss != "mse":
        raise ParamError(f"unsupported loss {loss!r}")
    y = np.asarray(target, dtype=np.float64)
    if y.ndim == 1:
        y = y[None]
    batch = trace.inputs.shape[0]
    if y.shape != (batch, params.n_outputs):
        raise ParamError(f"target shape {np.shape(target)} does not match ({batch}, {params.n_outputs})")

    grad = params.zeros_like()
    flat_hidden = trace.flat_hidden
    d_out = 2.0 * (dense_apply(params.dense, flat_hidden) - y) / (params.n_outputs * batch)
    grad.dense[:] = d_out.T @ flat_hidden
    d_hidden = (d_out @ params.dense).reshape(trace.hidden.shape)

    is_lstm = params.cell_kind == LSTM
    width = params.width
    dh_carry = np.zeros((batch, width))
    dm_carry = np.zeros((batch, width))

    for s in reversed(range(params.n_steps)):
        b = params.block(s)
        x_s, h_prev = trace.inputs[:, s], trace.h_prev[:, s]
        dh = d_hidden[:, s] + dh_carry

        if is_lstm:
            i, f, c, o = (trace.gates[:, s, g] for g in range(4))
            tanh_m = np.tanh(trace.memory[:, s])
            dm = dm_carry + dh * o * (1.0 - tanh_m**2)
            dz = np.stack(
                [
                    dm * c * i * (1.0 - i),
                    dm * trace.m_prev[:, s] * f * (1.0 - f),
                    dm * i * (1.0 - c**2),
                    dh * tanh_m * o * (1.0 - o),
                ],
                axis=1,
            )
            dm_carry = dm * f
            dz_x = dz_h = dz
            dh_direct = 0.0
        else:
            i, c, u = (trace.gates[:, s, g] for g in range(3))
            dz_c = dh * u * (1.0 - c**2)
            dz_u = dh * (c - h_prev) * u * (1.0 - u)
            dz_i = dz_c * trace.recurrent[:, s] * i * (1.0 - i)
            dz_x = np.stack([dz_i, dz_c, dz_u], axis=1)
            dz_h = np.stack([dz_i, dz_c * i, dz_u], axis=1)
            dh_direct = dh * (1.0 - u)

        grad.gamma[b] += np.einsum("bk,bgw->gkw", x_s, dz_x)
        grad.lam[b] += dz_x.sum(axis=0)
        grad.theta[b] += np.einsum("bv,bgw->gvw", h_prev, dz_h)
        dh_carry = dh_direct + np.einsum("bgw,gvw->bv", dz_h, params.theta[b])

    return grad


def loss_and_gradient(params: RnnParams, inputs: FloatArray, target: FloatArray) -> Tuple[float, RnnParams]:
    """Get the batch loss and its gradient with one forward and one backward pass."""
    hidden, trace = forward(params, inputs)
    y = np.asarray(target, dtype=np.float64)
    value = batch_loss(dense_apply(params.dense, hidden), y if y.ndim == 2 else y[None])
    return value, backward(params, trace, y)
