# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""
Module for the standalone SVG figures of the pipeline.

Every figure carries the table it was drawn from as CSV inside an XML comment, so the numbers
survive without a plotting toolchain. Figures are built on :py:class:`matplotlib.figure.Figure`
directly and never touch pyplot state, so training threads may plot concurrently.
"""
from __future__ import annotations

import io
import pathlib
from typing import Dict, List, Mapping, Sequence

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from .array_types import FloatArray
from .diagnostics import AcfResult, KdeResult
from .evaluation import QqPoints
from .gmm import GmmFit
from .load_dataset import N_GROUPS, LoadDataset

__all__ = [
    "extract_data_table",
    "plot_load_process",
    "plot_acf",
    "plot_kde",
    "plot_gmm_convergence",
    "plot_training_history",
    "plot_qq",
    "plot_overlay",
]

SVG_HASH_SALT = "plant-load-forecast"
DATA_BEGIN = "<!-- data"
DATA_END = "-->"


def _embed(svg: str, table: pd.DataFrame) -> str:
    csv = table.to_csv(index=False, float_format="%.10g", lineterminator="\n")
    while "--" in csv:
        csv = csv.replace("--", "- -")
    comment = f"{DATA_BEGIN}\n{csv}{DATA_END}\n"
    index = svg.find("<svg")
    return svg[:index] + comment + svg[index:]


def _write_svg(figure: Figure, path: pathlib.Path, table: pd.DataFrame) -> pathlib.Path:
    """Render ``figure`` as SVG with ``table`` embedded and write it to ``path``."""
    buffer = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(_embed(buffer.getvalue(), table))
    return path


def extract_data_table(path: pathlib.Path) -> pd.DataFrame:
    """Read the data table embedded in an SVG written by this module."""
    with open(path, "r") as f:
        text = f.read()
    start = text.index(DATA_BEGIN) + len(DATA_BEGIN) + 1
    end = text.index(DATA_END, start)
    return pd.read_csv(io.StringIO(text[start:end]))


def plot_load_process(dataset: LoadDataset, path: pathlib.Path) -> pathlib.Path:
    """Plot the scaled load process above the three schedule groups."""
    load = dataset.flat_loads()
    schedules = dataset.flat_schedules()
    steps = np.arange(len(load))

    figure = Figure(figsize=(12, 8))
    axes = figure.subplots(N_GROUPS + 1, 1, sharex=True)
    axes[0].plot(steps, load, linewidth=0.4, color="black")
    axes[0].set_ylabel("scaled load")
    for group in range(N_GROUPS):
        axes[group + 1].plot(steps, schedules[:, group], linewidth=0.4)
        axes[group + 1].set_ylabel(f"group {group + 1}")
    axes[-1].set_xlabel("step")
    figure.tight_layout()

    table = pd.DataFrame({"step": steps, "load": load})
    for group in range(N_GROUPS):
        table[f"schedule_{group + 1}"] = schedules[:, group]
    return _write_svg(figure, path, table)


def plot_acf(results: Sequence[AcfResult], path: pathlib.Path) -> pathlib.Path:
    """Plot one autocorrelation panel per result with its white-noise band."""
    figure = Figure(figsize=(12, 4 * len(results)))
    axes = np.atleast_1d(figure.subplots(len(results), 1))
    frames: List[pd.DataFrame] = []
    for panel, (ax, result) in enumerate(zip(axes, results)):
        ax.vlines(result.lags, 0.0, result.values, linewidth=0.5)
        ax.axhline(result.band, color="tab:blue", linestyle="--", linewidth=0.8)
        ax.axhline(-result.band, color="tab:blue", linestyle="--", linewidth=0.8)
        ax.set_ylabel("ACF")
        ax.set_xlabel("lag")
        frames.append(
            pd.DataFrame({"panel": panel, "lag": result.lags, "acf": result.values, "band": result.band})
        )
    figure.tight_layout()
    return _write_svg(figure, path, pd.concat(frames, ignore_index=True))


def plot_kde(kde: KdeResult, path: pathlib.Path, means: Sequence[float] | None = None) -> pathlib.Path:
    """Plot a density estimate, marking mixture component means when given."""
    figure = Figure(figsize=(8, 5))
    ax = figure.subplots()
    ax.plot(kde.grid, kde.density, color="black")
    for mean in means or []:
        ax.axvline(mean, color="tab:red", linestyle=":", linewidth=0.8)
    ax.set_xlabel("scaled load")
    ax.set_ylabel("density")
    figure.tight_layout()
    return _write_svg(figure, path, pd.DataFrame({"x": kde.grid, "density": kde.density}))


def plot_gmm_convergence(fit: GmmFit, path: pathlib.Path) -> pathlib.Path:
    """Plot the component means and the log-likelihood against the EM iteration."""
    iterations = np.arange(len(fit.loglik_trace))
    figure = Figure(figsize=(10, 7))
    top, bottom = figure.subplots(2, 1, sharex=True)
    for k in range(fit.n_components):
        top.plot(iterations, fit.means_trace[:, k], label=f"state {k}")
    top.set_ylabel("mean")
    top.legend(loc="best", fontsize="small")
    bottom.plot(iterations, fit.loglik_trace, color="black")
    bottom.set_ylabel("log-likelihood")
    bottom.set_xlabel("iteration")
    figure.tight_layout()

    table = pd.DataFrame({"iteration": iterations, "loglik": fit.loglik_trace})
    for k in range(fit.n_components):
        table[f"mean_{k}"] = fit.means_trace[:, k]
    return _write_svg(figure, path, table)


def plot_training_history(history: FloatArray, model_kind: str, path: pathlib.Path) -> pathlib.Path:
    """Plot the training loss against the epoch."""
    epochs = np.arange(len(history))
    figure = Figure(figsize=(8, 5))
    ax = figure.subplots()
    ax.semilogy(epochs, np.maximum(history, np.finfo(float).tiny), color="black")
    ax.set_title(f"{model_kind} training loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE")
    figure.tight_layout()
    return _write_svg(figure, path, pd.DataFrame({"epoch": epochs, "loss": history}))


def plot_qq(qq: QqPoints, model_kind: str, path: pathlib.Path) -> pathlib.Path:
    """Plot standardised residuals against standard normal quantiles with the 45 degree line."""
    figure = Figure(figsize=(6, 6))
    ax = figure.subplots()
    ax.scatter(qq.theoretical, qq.sample, s=2, color="black")
    limit = float(max(np.max(np.abs(qq.theoretical)), np.max(np.abs(qq.sample))))
    ax.plot([-limit, limit], [-limit, limit], color="tab:red", linewidth=0.8)
    ax.set_title(f"{model_kind} residuals")
    ax.set_xlabel("standard normal quantile")
    ax.set_ylabel("standardised residual")
    figure.tight_layout()
    return _write_svg(figure, path, pd.DataFrame({"theoretical": qq.theoretical, "sample": qq.sample}))


def plot_overlay(actual: FloatArray, forecasts: Mapping[str, FloatArray], path: pathlib.Path) -> pathlib.Path:
    """Plot forecasts of several models over the actual values, one line per model."""
    steps = np.arange(len(actual))
    figure = Figure(figsize=(12, 5))
    ax = figure.subplots()
    ax.plot(steps, actual, color="black", linewidth=1.0, label="actual")
    columns: Dict[str, FloatArray] = {"step": steps, "actual": np.asarray(actual)}
    for model_kind, values in forecasts.items():
        ax.plot(steps, values, linewidth=0.8, linestyle="--", label=model_kind)
        columns[model_kind] = np.asarray(values)
    ax.set_xlabel("step")
    ax.set_ylabel("scaled load")
    ax.legend(loc="best", fontsize="small")
    figure.tight_layout()
    return _write_svg(figure, path, pd.DataFrame(columns))
