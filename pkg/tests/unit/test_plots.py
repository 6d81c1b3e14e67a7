# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""This module contains the pytest tests for the SVG figures and their embedded data tables."""

import pathlib

import numpy as np
import pytest

from plant_load_forecast.diagnostics import acf, kde_epanechnikov
from plant_load_forecast.evaluation import residual_qq
from plant_load_forecast.gmm import em_fit
from plant_load_forecast.load_dataset import LoadDataset
from plant_load_forecast.plots import (
    extract_data_table,
    plot_acf,
    plot_gmm_convergence,
    plot_kde,
    plot_load_process,
    plot_overlay,
    plot_qq,
    plot_training_history,
)


def test_plot_load_process(small_dataset: LoadDataset, tmp_path: pathlib.Path) -> None:
    """Test the load process figure embeds the load and the schedule groups."""
    path = plot_load_process(small_dataset, tmp_path / "diagnostics" / "load_process.svg")

    assert path.read_text().lstrip().startswith("<?xml")
    table = extract_data_table(path)
    assert table.columns.tolist() == ["step", "load", "schedule_1", "schedule_2", "schedule_3"]
    np.testing.assert_allclose(table["load"], small_dataset.flat_loads(), rtol=1e-9)


def test_plot_acf_panels(rng: np.random.Generator, tmp_path: pathlib.Path) -> None:
    """Test each ACF panel is tabulated with its lags and band."""
    series = rng.standard_normal(500)
    path = plot_acf([acf(series, 40), acf(series, 10)], tmp_path / "acf.svg")

    table = extract_data_table(path)
    assert len(table) == 41 + 11
    assert table.loc[table["panel"] == 1, "lag"].max() == 10
    assert table["band"].iloc[0] == pytest.approx(1.96 / np.sqrt(500))


def test_plot_kde_and_gmm(rng: np.random.Generator, tmp_path: pathlib.Path) -> None:
    """Test the density and the EM convergence figures embed their curves."""
    points = np.concatenate([rng.normal(0.3, 0.02, 500), rng.normal(0.7, 0.02, 500)])
    kde = kde_epanechnikov(points, grid_size=256)
    fit = em_fit(points, n_components=2, seed=0)

    kde_table = extract_data_table(plot_kde(kde, tmp_path / "kde.svg", means=fit.means))
    assert len(kde_table) == 256
    np.testing.assert_allclose(kde_table["density"], kde.density, rtol=1e-9, atol=1e-12)

    gmm_table = extract_data_table(plot_gmm_convergence(fit, tmp_path / "convergence.svg"))
    assert gmm_table.columns.tolist() == ["iteration", "loglik", "mean_0", "mean_1"]
    assert len(gmm_table) == len(fit.loglik_trace)


def test_plot_training_history_is_reproducible(tmp_path: pathlib.Path) -> None:
    """Test the same figure is written byte for byte identically."""
    history = np.geomspace(1.0, 1e-3, 50)
    first = plot_training_history(history, "lstm", tmp_path / "a.svg")
    second = plot_training_history(history, "lstm", tmp_path / "b.svg")

    assert first.read_bytes() == second.read_bytes()
    np.testing.assert_allclose(extract_data_table(first)["loss"], history, rtol=1e-9)


def test_plot_qq_and_overlay(rng: np.random.Generator, tmp_path: pathlib.Path) -> None:
    """Test the residual and overlay figures embed their points and one column per model."""
    qq = residual_qq(rng.normal(size=100))
    qq_table = extract_data_table(plot_qq(qq, "gru", tmp_path / "qq_gru.svg"))
    np.testing.assert_allclose(qq_table["theoretical"], qq.theoretical, rtol=1e-9)

    actual = np.linspace(0.0, 1.0, 20)
    forecasts = {"lstm": actual + 0.1, "naive": actual[::-1]}
    overlay = extract_data_table(plot_overlay(actual, forecasts, tmp_path / "overlay.svg"))
    assert overlay.columns.tolist() == ["step", "actual", "lstm", "naive"]
    np.testing.assert_allclose(overlay["naive"], actual[::-1], rtol=1e-9)
