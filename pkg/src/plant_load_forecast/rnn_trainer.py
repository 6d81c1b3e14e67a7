# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for training recurrent day-curve models by backpropagation and forecasting with them."""
from __future__ import annotations

import logging
import math
import pathlib
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .array_types import FloatArray
from .errors import ModelFileError, ParamError, TrainingDiverged, TrainingInterrupted
from .forecast import Forecast, clipped_forecast
from .load_dataset import SamplePair, stack_predictors, stack_targets
from .model_file import read_model_file, write_model_file
from .rnn_cells import (
    CELL_GATES,
    DEFAULT_INIT_SCALE,
    PARAM_NAMES,
    RnnParams,
    dense_apply,
    forward,
    init_params,
    loss_and_gradient,
)

__all__ = [
    "TrainConfig",
    "AdamOptimizer",
    "GradientDescent",
    "train",
    "forecast_nn",
    "save_rnn",
    "load_rnn",
]

OPTIMIZERS = ("gd", "adam")
DIVERGENCE_FACTOR = 1e6


@dataclass
class TrainConfig:
    """
    Hyperparameters of recurrent model training.

    :ivar learning_rate: step size of the update, positive
    :vartype learning_rate: float
    :ivar epochs: number of passes over the training set
    :vartype epochs: int
    :ivar seed: seed of initialisation and batch shuffling
    :vartype seed: int
    :ivar grad_clip: global gradient norm limit, None to disable
    :vartype grad_clip: Optional[float]
    :ivar loss: training loss, mse
    :vartype loss: str
    :ivar optimizer: gd for plain steepest descent, adam for bias-corrected moment steps
    :vartype optimizer: str
    :ivar batch_size: days per update, None for the full training set
    :vartype batch_size: Optional[int]
    :ivar width: hidden width per step
    :vartype width: int
    :ivar shared_weights: share gate coefficients across steps
    :vartype shared_weights: bool
    :ivar init_scale: half-width of the uniform initialisation
    :vartype init_scale: float
    """

    learning_rate: float = field(default=0.01)
    epochs: int = field(default=200)
    seed: int = field(default=0)
    grad_clip: Optional[float] = field(default=5.0)
    loss: str = field(default="mse")
    optimizer: str = field(default="gd")
    batch_size: Optional[int] = field(default=None)
    width: int = field(default=1)
    shared_weights: bool = field(default=False)
    init_scale: float = field(default=DEFAULT_INIT_SCALE)

    def validate(self: TrainConfig) -> List[str]:
        """Get a list of problems with the configuration, empty when valid."""
        problems = []
        if not self.learning_rate >= 0.0:
            problems.append(f"learning_rate={self.learning_rate} must be non-negative")
        if self.epochs < 1:
            problems.append(f"epochs={self.epochs} must be at least 1")
        if self.grad_clip is not None and self.grad_clip <= 0.0:
            problems.append(f"grad_clip={self.grad_clip} must be positive or null")
        if self.loss != "mse":
            problems.append(f"loss={self.loss!r} is not supported, use mse")
        if self.optimizer not in OPTIMIZERS:
            problems.append(f"optimizer={self.optimizer!r} must be one of {list(OPTIMIZERS)}")
        if self.batch_size is not None and self.batch_size < 1:
            problems.append(f"batch_size={self.batch_size} must be positive or null")
        if self.width < 1:
            problems.append(f"width={self.width} must be at least 1")
        if self.init_scale < 0.0:
            problems.append(f"init_scale={self.init_scale} must be non-negative")
        return problems


class GradientDescent:
    """Plain steepest descent, psi <- psi - learning_rate * gradient."""

    def __init__(self: GradientDescent, learning_rate: float) -> None:
        """Initialise with the step size."""
        self.learning_rate = learning_rate

    def step(self: GradientDescent, params: RnnParams, grad: RnnParams) -> None:
        """Update ``params`` in place."""
        for name in PARAM_NAMES:
            getattr(params, name)[...] -= self.learning_rate * getattr(grad, name)


class AdamOptimizer:
    """Adam steps with bias-corrected first and second moment estimates."""

    def __init__(
        self: AdamOptimizer,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        """Initialise the optimizer; moments are created on the first step."""
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._t = 0
        self._m: Dict[str, FloatArray] = {}
        self._v: Dict[str, FloatArray] = {}

    def step(self: AdamOptimizer, params: RnnParams, grad: RnnParams) -> None:
        """Update ``params`` in place."""
        self._t += 1
        for name in PARAM_NAMES:
            g = getattr(grad, name)
            m = self._m.setdefault(name, np.zeros_like(g))
            v = self._v.setdefault(name, np.zeros_like(g))
            m[...] = self.beta1 * m + (1.0 - self.beta1) * g
            v[...] = self.beta2 * v + (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1**self._t)
            v_hat = v / (1.0 - self.beta2**self._t)
            getattr(params, name)[...] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def _clip_gradient(grad: RnnParams, max_norm: float | None) -> float:
    norm = math.sqrt(sum(float(np.sum(a * a)) for a in grad.arrays().values()))
    if max_norm is not None and norm > max_norm:
        for a in grad.arrays().values():
            a *= max_norm / norm
    return norm


def train(
    cell_kind: str,
    samples: Sequence[SamplePair],
    cfg: TrainConfig,
    stop_event: threading.Event | None = None,
    logger: logging.Logger | None = None,
) -> Tuple[RnnParams, FloatArray]:
    """
    Train an LSTM or GRU on the training sample pairs.

    Coefficients start uniform in [-init_scale, init_scale]. Every epoch visits the training days
    in batches (shuffled unless full batch) and steps against the MSE gradient, after clipping
    its global norm to ``grad_clip``. The recorded loss of an epoch is the mean batch loss before
    each update, so with ``learning_rate`` 0 the coefficients never move.

    :param cell_kind: lstm or gru
    :param samples: the training pairs
    :param cfg: the training configuration
    :param stop_event: checked between epochs; when set training stops
    :param logger: the logger instance to use.
    :return: the trained coefficients and the per-epoch loss history
    :raises TrainingDiverged: if the loss becomes non-finite or exceeds 1e6 times the initial loss
    :raises TrainingInterrupted: if ``stop_event`` is set
    """
    logger = logger or logging.getLogger(__name__)
    if cell_kind not in CELL_GATES:
        raise ParamError(f"unknown cell kind {cell_kind!r}")
    if len(samples) == 0:
        raise ParamError("training set is empty")
    problems = cfg.validate()
    if problems:
        raise ParamError("; ".join(problems))

    inputs = stack_predictors(list(samples))
    targets = stack_targets(list(samples))
    n_days, n_steps, n_inputs = inputs.shape
    rng = np.random.default_rng(cfg.seed)
    params = init_params(
        cell_kind,
        n_steps=n_steps,
        n_inputs=n_inputs,
        n_outputs=targets.shape[1],
        rng=rng,
        width=cfg.width,
        shared_weights=cfg.shared_weights,
        scale=cfg.init_scale,
    )
    optimizer: AdamOptimizer | GradientDescent = (
        AdamOptimizer(cfg.learning_rate) if cfg.optimizer == "adam" else GradientDescent(cfg.learning_rate)
    )
    batch_size = cfg.batch_size or n_days

    logger.info(
        f"training {cell_kind} on {n_days} days: epochs={cfg.epochs} optimizer={cfg.optimizer} "
        f"learning_rate={cfg.learning_rate} batch_size={batch_size}"
    )
    history: List[float] = []
    initial_loss: float | None = None
    for epoch in range(cfg.epochs):
        if stop_event is not None and stop_event.is_set():
            raise TrainingInterrupted(f"{cell_kind} training interrupted before epoch {epoch}")

        order = np.arange(n_days) if batch_size >= n_days else rng.permutation(n_days)
        batch_losses = []
        for start in range(0, n_days, batch_size):
            index = order[start : start + batch_size]
            value, grad = loss_and_gradient(params, inputs[index], targets[index])
            if initial_loss is None:
                initial_loss = value
            if not math.isfinite(value) or value > DIVERGENCE_FACTOR * max(initial_loss, 1e-12):
                raise TrainingDiverged(epoch, value)
            norm = _clip_gradient(grad, cfg.grad_clip)
            optimizer.step(params, grad)
            batch_losses.append(value)

        history.append(float(np.mean(batch_losses)))
        logger.debug(f"{cell_kind} epoch {epoch} loss={history[-1]:.6e} grad_norm={norm:.4e}")
        if not params.is_finite():
            raise TrainingDiverged(epoch, math.inf)

    logger.info(f"{cell_kind} training finished: loss {history[0]:.6e} -> {history[-1]:.6e}")
    return params, np.asarray(history)


def forecast_nn(model: RnnParams, predictors: FloatArray) -> Forecast:
    """
    Forecast the next two days from one day of predictors.

    :param model: trained coefficients
    :param predictors: S x k predictor block of day t
    :return: P forecasts clipped to [0, 1] with the count of clipped values
    """
    hidden, _ = forward(model, predictors)
    raw = dense_apply(model.dense, hidden)[0]
    return clipped_forecast(raw, metadata={"model": model.cell_kind})


def save_rnn(params: RnnParams, path: pathlib.Path) -> None:
    """Write the coefficients to a versioned model file."""
    header = {
        "cell_kind": params.cell_kind,
        "S": params.n_steps,
        "k": params.n_inputs,
        "G": params.n_gates,
        "P": params.n_outputs,
        "width": params.width,
        "shared_weights": params.shared_weights,
    }
    write_model_file(path, "rnn", header, params.arrays())


def load_rnn(path: pathlib.Path) -> RnnParams:
    """Read coefficients written by :py:func:`save_rnn`, checking them against the header."""
    header, arrays = read_model_file(path, "rnn")
    try:
        params = RnnParams(header["cell_kind"], *(arrays[name] for name in PARAM_NAMES), n_steps=header["S"])
    except (KeyError, ParamError) as exc:
        raise ModelFileError(f"{path}: invalid rnn coefficients: {exc}") from exc
    found = (params.n_steps, params.n_inputs, params.n_gates, params.n_outputs, params.width)
    declared = (header["S"], header["k"], header["G"], header["P"], header["width"])
    if found != declared:
        raise ModelFileError(f"{path}: coefficient shapes {found} disagree with header {declared}")
    return params
