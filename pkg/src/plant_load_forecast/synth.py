# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""
Module for seeded synthetic regime-switching load processes.

A Markov chain over K consumption regimes runs at day or step resolution. The load is the
regime mean plus AR(1) noise, transient jumps and a linear response to the true production
schedules, clipped to [0, 1]. The schedules are recorded ``record_lag_steps`` late, the way
the plant's schedule log lags the meter, so :py:func:`shift_schedules` restores the alignment.
"""
from __future__ import annotations

import datetime
import logging
import pathlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from .array_types import FloatArray, IntArray
from .errors import ParamError
from .load_dataset import FREQ_PER_DAY, N_GROUPS, ColumnLayout, LoadDataset, ScaleParams
from .load_ingest import write_load_csv

__all__ = [
    "SynthConfig",
    "SynthResult",
    "generate",
    "synth_layout",
    "transition_matrix",
    "stationary_distribution",
    "write_synth",
]

DWELL_UNITS = ("day", "step")
SMOOTHING_STEPS = 5
MIN_SHIFT_STEPS = 24
MAX_SHIFT_STEPS = 56
SHIFT_PROBABILITY = 0.7


@dataclass
class SynthConfig:
    """
    Parameters of the synthetic load process.

    :ivar n_days: number of days to generate
    :vartype n_days: int
    :ivar regime_means: mean load of every regime, in (0, 1)
    :vartype regime_means: List[float]
    :ivar regime_sds: stationary standard deviation of the noise within every regime
    :vartype regime_sds: List[float]
    :ivar dwell: mean sojourn of the chain in a regime, in ``dwell_unit``
    :vartype dwell: float
    :ivar dwell_unit: day or step
    :vartype dwell_unit: str
    :ivar jump_rate: probability of a one-step jump at every step
    :vartype jump_rate: float
    :ivar jump_size: absolute size of a jump
    :vartype jump_size: float
    :ivar noise_scale: multiplier of all regime noise, 0 for a noiseless process
    :vartype noise_scale: float
    :ivar ar_coefficient: AR(1) coefficient of the within-regime noise
    :vartype ar_coefficient: float
    :ivar coupling: response of the load to each of the 3 schedule groups
    :vartype coupling: List[float]
    :ivar record_lag_steps: steps by which the recorded schedules lag the true ones
    :vartype record_lag_steps: int
    :ivar raw_schedule_columns: number of raw schedule columns to emit, 0 for 3 aggregated columns
    :vartype raw_schedule_columns: int
    :ivar start_date: the first calendar day, ISO format
    :vartype start_date: str
    :ivar seed: seed of the generator stream
    :vartype seed: int
    """

    n_days: int = field(default=365)
    regime_means: List[float] = field(default_factory=lambda: [0.3, 0.7])
    regime_sds: List[float] = field(default_factory=lambda: [0.04, 0.04])
    dwell: float = field(default=7.0)
    dwell_unit: str = field(default="day")
    jump_rate: float = field(default=0.002)
    jump_size: float = field(default=0.1)
    noise_scale: float = field(default=1.0)
    ar_coefficient: float = field(default=0.8)
    coupling: List[float] = field(default_factory=lambda: [0.05, 0.05, 0.05])
    record_lag_steps: int = field(default=8)
    raw_schedule_columns: int = field(default=0)
    start_date: str = field(default="2023-01-01")
    seed: int = field(default=0)

    @property
    def n_regimes(self: SynthConfig) -> int:
        """Get the number of regimes K."""
        return len(self.regime_means)

    def validate(self: SynthConfig) -> List[str]:
        """Get a list of problems with the configuration, empty when valid."""
        problems = []
        if self.n_days < 1:
            problems.append(f"n_days={self.n_days} must be at least 1")
        if self.n_regimes < 1:
            problems.append("at least one regime mean is required")
        if any(not 0.0 < m < 1.0 for m in self.regime_means):
            problems.append(f"regime_means={self.regime_means} must lie in (0, 1)")
        if len(self.regime_sds) != self.n_regimes or any(sd < 0.0 for sd in self.regime_sds):
            problems.append(f"regime_sds={self.regime_sds} must be {self.n_regimes} non-negative values")
        if self.dwell < 1.0:
            problems.append(f"dwell={self.dwell} must be at least 1")
        if self.dwell_unit not in DWELL_UNITS:
            problems.append(f"dwell_unit={self.dwell_unit!r} must be one of {list(DWELL_UNITS)}")
        if not 0.0 <= self.jump_rate <= 1.0:
            problems.append(f"jump_rate={self.jump_rate} must be a probability")
        if self.noise_scale < 0.0:
            problems.append(f"noise_scale={self.noise_scale} must be non-negative")
        if not -1.0 < self.ar_coefficient < 1.0:
            problems.append(f"ar_coefficient={self.ar_coefficient} must lie in (-1, 1)")
        if len(self.coupling) != N_GROUPS:
            problems.append(f"coupling must have {N_GROUPS} values, got {len(self.coupling)}")
        if not 0 <= self.record_lag_steps < FREQ_PER_DAY:
            problems.append(f"record_lag_steps={self.record_lag_steps} must be in [0, {FREQ_PER_DAY})")
        if self.raw_schedule_columns != 0 and self.raw_schedule_columns < N_GROUPS:
            problems.append(
                f"raw_schedule_columns={self.raw_schedule_columns} must be 0 or at least {N_GROUPS}"
            )
        try:
            datetime.date.fromisoformat(self.start_date)
        except (TypeError, ValueError):
            problems.append(f"start_date={self.start_date!r} is not an ISO date")
        if self.seed < 0:
            problems.append(f"seed={self.seed} must be non-negative")
        return problems


@dataclass(frozen=True)
class SynthResult:
    """
    A generated dataset with its ground truth.

    :ivar dataset: loads in [0, 1] with the recorded (lagged) schedules
    :vartype dataset: LoadDataset
    :ivar labels: true regime of every step, days x steps
    :vartype labels: IntArray
    :ivar true_schedules: schedules aligned with the load, days x steps x 3
    :vartype true_schedules: FloatArray
    :ivar raw_schedules: recorded raw schedule columns, steps x columns, if requested
    :vartype raw_schedules: Optional[FloatArray]
    :ivar column_groups: group of every raw schedule column
    :vartype column_groups: Dict[int, int]
    """

    dataset: LoadDataset
    labels: IntArray
    true_schedules: FloatArray
    raw_schedules: Optional[FloatArray] = None
    column_groups: Dict[int, int] = field(default_factory=dict)

    @property
    def timestamps(self: SynthResult) -> pd.DatetimeIndex:
        """Get the timestamp of every step."""
        start = pd.Timestamp(self.dataset.dates[0])
        step = pd.Timedelta(days=1) / self.dataset.freq_per_day
        return pd.date_range(start, periods=self.dataset.n_days * self.dataset.freq_per_day, freq=step)


def transition_matrix(cfg: SynthConfig) -> FloatArray:
    """
    Get the transition matrix of the regime chain, one transition per ``dwell_unit``.

    Leaving a regime picks one of the others uniformly.
    """
    k = cfg.n_regimes
    if k == 1:
        return np.ones((1, 1))
    leave = 1.0 / cfg.dwell
    matrix = np.full((k, k), leave / (k - 1))
    np.fill_diagonal(matrix, 1.0 - leave)
    return matrix


def stationary_distribution(matrix: FloatArray) -> FloatArray:
    """Get the stationary distribution of a transition matrix as its left unit eigenvector."""
    values, vectors = np.linalg.eig(np.asarray(matrix).T)
    vector = np.real(vectors[:, np.argmin(np.abs(values - 1.0))])
    return vector / vector.sum()


def _regime_chain(cfg: SynthConfig, n_units: int, rng: np.random.Generator) -> IntArray:
    chain = np.empty(n_units, dtype=np.int64)
    state = int(rng.integers(cfg.n_regimes))
    filled = 0
    while filled < n_units:
        sojourn = int(rng.geometric(1.0 / cfg.dwell))
        chain[filled : filled + sojourn] = state
        filled += sojourn
        if cfg.n_regimes > 1:
            state = (state + 1 + int(rng.integers(cfg.n_regimes - 1))) % cfg.n_regimes
    return chain


def _schedule_profiles(n_days: int, rng: np.random.Generator) -> FloatArray:
    """Get smoothed on/off production shifts, n_days * steps x 3, every value in [0, 1]."""
    profiles = np.zeros((n_days, FREQ_PER_DAY, N_GROUPS))
    active = rng.random((n_days, N_GROUPS)) < SHIFT_PROBABILITY
    starts = rng.integers(0, FREQ_PER_DAY - MIN_SHIFT_STEPS, size=(n_days, N_GROUPS))
    lengths = rng.integers(MIN_SHIFT_STEPS, MAX_SHIFT_STEPS + 1, size=(n_days, N_GROUPS))
    volumes = rng.uniform(0.5, 1.0, size=(n_days, N_GROUPS))
    for day, group in zip(*np.nonzero(active)):
        start = starts[day, group]
        profiles[day, start : start + lengths[day, group], group] = volumes[day, group]

    kernel = np.ones(SMOOTHING_STEPS) / SMOOTHING_STEPS
    flat = profiles.reshape(-1, N_GROUPS)
    return np.column_stack([np.convolve(flat[:, g], kernel, mode="same") for g in range(N_GROUPS)])


def _ar_noise(innovations: FloatArray, coefficient: float) -> FloatArray:
    noise = np.empty_like(innovations)
    previous = 0.0
    for index, value in enumerate(innovations):
        previous = coefficient * previous + value
        noise[index] = previous
    return noise


def generate(cfg: SynthConfig, logger: logging.Logger | None = None) -> SynthResult:
    """
    Generate a synthetic dataset.

    The same configuration always yields the same dataset.

    :param cfg: the process parameters
    :param logger: the logger instance to use.
    :raises ParamError: if the configuration is invalid
    """
    logger = logger or logging.getLogger(__name__)
    problems = cfg.validate()
    if problems:
        raise ParamError("; ".join(problems))

    rng = np.random.default_rng(cfg.seed)
    n_steps = cfg.n_days * FREQ_PER_DAY
    lag = cfg.record_lag_steps

    if cfg.dwell_unit == "day":
        labels = np.repeat(_regime_chain(cfg, cfg.n_days, rng), FREQ_PER_DAY)
    else:
        labels = _regime_chain(cfg, n_steps, rng)

    # day 0 of the extended profiles starts one day early so the first lag steps are recorded
    extended = _schedule_profiles(cfg.n_days + 1, rng)[FREQ_PER_DAY - lag :][: n_steps + lag]
    true_schedules = extended[lag:]
    recorded = extended[:n_steps]

    means = np.asarray(cfg.regime_means)[labels]
    sds = np.asarray(cfg.regime_sds)[labels] * cfg.noise_scale
    innovations = rng.standard_normal(n_steps) * sds * np.sqrt(1.0 - cfg.ar_coefficient**2)
    noise = _ar_noise(innovations, cfg.ar_coefficient)
    jumps = (rng.random(n_steps) < cfg.jump_rate) * rng.choice([-1.0, 1.0], size=n_steps) * cfg.jump_size

    load = np.clip(means + noise + jumps + true_schedules @ np.asarray(cfg.coupling), 0.0, 1.0)

    raw_schedules = None
    column_groups: Dict[int, int] = {}
    if cfg.raw_schedule_columns:
        column_groups = {column: column % N_GROUPS + 1 for column in range(cfg.raw_schedule_columns)}
        shares = rng.uniform(0.5, 1.5, size=cfg.raw_schedule_columns)
        for group in range(1, N_GROUPS + 1):
            members = [c for c, g in column_groups.items() if g == group]
            shares[members] /= shares[members].sum()
        raw_schedules = np.column_stack(
            [recorded[:, column_groups[c] - 1] * shares[c] for c in range(cfg.raw_schedule_columns)]
        )

    start = datetime.date.fromisoformat(cfg.start_date)
    dataset = LoadDataset(
        dates=tuple(start + datetime.timedelta(days=d) for d in range(cfg.n_days)),
        loads=load.reshape(cfg.n_days, FREQ_PER_DAY),
        schedules=recorded.reshape(cfg.n_days, FREQ_PER_DAY, N_GROUPS),
        scale=ScaleParams(min=0.0, max=1.0),
    )
    occupancy = np.bincount(labels, minlength=cfg.n_regimes) / len(labels)
    logger.info(f"generated {dataset} with regime occupancy {np.round(occupancy, 3).tolist()}")
    return SynthResult(
        dataset=dataset,
        labels=labels.reshape(cfg.n_days, FREQ_PER_DAY),
        true_schedules=true_schedules.reshape(cfg.n_days, FREQ_PER_DAY, N_GROUPS),
        raw_schedules=raw_schedules,
        column_groups=column_groups,
    )


def synth_layout(cfg: SynthConfig) -> ColumnLayout:
    """Get the column layout of the CSV written by :py:func:`write_synth`."""
    if cfg.raw_schedule_columns:
        return ColumnLayout(
            schedule_groups={f"line_{c + 1:02d}": c % N_GROUPS + 1 for c in range(cfg.raw_schedule_columns)}
        )
    return ColumnLayout(group_columns=[f"schedule_{g}" for g in range(1, N_GROUPS + 1)])


def write_synth(result: SynthResult, cfg: SynthConfig, path: pathlib.Path) -> pathlib.Path:
    """
    Write the dataset as a load CSV and the regime labels as a sidecar CSV.

    :param result: the generated dataset
    :param cfg: the configuration it was generated with
    :param path: the load CSV to write
    :return: the path of the labels sidecar, ``<stem>.labels.csv`` next to ``path``
    """
    path = pathlib.Path(path)
    timestamps = result.timestamps
    schedules = result.raw_schedules if result.raw_schedules is not None else result.dataset.flat_schedules()
    write_load_csv(path, timestamps, result.dataset.flat_loads(), schedules, synth_layout(cfg))

    labels_path = path.with_name(f"{path.stem}.labels.csv")
    labels = pd.DataFrame(
        {"timestamp": [ts.isoformat() for ts in timestamps], "regime": result.labels.reshape(-1)}
    )
    labels.to_csv(labels_path, index=False, lineterminator="\n")
    return labels_path
