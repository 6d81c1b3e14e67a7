# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module class for the batch forecasting pipeline behind every subcommand."""
from __future__ import annotations

import logging
import pathlib
import threading
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import yaml

from .baselines import arx_fit, forecast_arx, load_arx, naive_forecast, save_arx
from .diagnostics import acf, adf_test, format_stationarity_table, kde_epanechnikov, kpss_test
from .errors import ConfigError, DegenerateDifferential, ModelFileError
from .evaluation import DmResult, MetricReport, compute_metrics, dm_test, render_table, residual_qq
from .forecast import Forecast
from .gmm import affiliate, em_fit
from .load_dataset import HORIZON_DAYS, LoadDataset, SamplePair, SampleSplit
from .load_ingest import ingest_csv, shift_schedules
from .manifest_builder import ManifestBuilder
from .model_training import train_models
from .plots import (
    plot_acf,
    plot_gmm_convergence,
    plot_kde,
    plot_load_process,
    plot_overlay,
    plot_qq,
    plot_training_history,
)
from .regime_fastec import load_fastec, regime_forecast, save_fastec, train_fastec
from .rnn_cells import RnnParams
from .rnn_trainer import forecast_nn, load_rnn, save_rnn, train
from .run_config import RunConfig
from .sample_builder import build_samples, default_split_day, eligible_days, export_samples_csv
from .synth import generate, write_synth

__all__ = [
    "Pipeline",
    "NAIVE",
    "FORECAST_COLUMNS",
]

NAIVE = "naive"
FORECAST_COLUMNS = ["day_index", "date", "step", "forecast", "actual"]
FLOAT_FORMAT = "%.10f"


class Pipeline:
    """Class to run the subcommands of one configured run and register their artifacts."""

    def __init__(
        self: Pipeline,
        config: RunConfig,
        command: str,
        arguments: Sequence[str] = (),
        logger: logging.Logger | None = None,
    ) -> None:
        """
        Initialise a Pipeline object.

        :param config: the resolved run configuration
        :param command: the subcommand being run, recorded in the manifest
        :param arguments: the command line arguments, recorded in the manifest
        :param logger: the logger instance to use.
        """
        self.config = config
        self.output_dir = pathlib.Path(config.output_dir)
        self.logger = logger or logging.getLogger(__name__)
        self.stop_event = threading.Event()
        self.manifest = ManifestBuilder(self.output_dir, config, command, arguments, logger=self.logger)
        self._dataset: Optional[LoadDataset] = None
        self._split: Optional[SampleSplit] = None

    def interrupt_processing(self: Pipeline) -> None:
        """Ask running model trainings to stop after their current epoch."""
        self.stop_event.set()

    def _register(self: Pipeline, path: pathlib.Path, description: str) -> pathlib.Path:
        self.manifest.add_file(path, description)
        return path

    def _write_yaml(self: Pipeline, relative: str, data: Dict[str, Any], description: str) -> pathlib.Path:
        path = self.output_dir / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            yaml.safe_dump(data, f, sort_keys=False)
        return self._register(path, description)

    def _write_text(self: Pipeline, relative: str, text: str, description: str) -> pathlib.Path:
        path = self.output_dir / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            f.write(text)
        return self._register(path, description)

    @property
    def dataset(self: Pipeline) -> LoadDataset:
        """Get the aligned dataset, reading or generating it on first use."""
        if self._dataset is None:
            csv_path = self.config.csv_path
            if csv_path is not None:
                raw = ingest_csv(
                    csv_path,
                    self.config.data.layout,
                    freq_per_day=self.config.data.freq_per_day,
                    min_days=self.config.data.min_days,
                    logger=self.logger,
                )
            else:
                assert self.config.synth is not None, "Expected a synth section when data.csv is absent"
                raw = generate(self.config.synth, logger=self.logger).dataset
            self._dataset = shift_schedules(raw, self.config.data.lag_steps, logger=self.logger)
        return self._dataset

    @property
    def split(self: Pipeline) -> SampleSplit:
        """Get the train/test sample pairs."""
        if self._split is None:
            dataset = self.dataset
            split_at = self.config.data.split_day or default_split_day(eligible_days(dataset))
            self._split = build_samples(dataset, split_at, logger=self.logger)
        return self._split

    def synth(self: Pipeline) -> None:
        """Generate the synthetic dataset and write it as a load CSV with a labels sidecar."""
        if self.config.synth is None:
            raise ConfigError(["synth: the synth subcommand needs a synth section"])
        result = generate(self.config.synth, logger=self.logger)
        csv_path = self.output_dir / "synth" / "load.csv"
        labels_path = write_synth(result, self.config.synth, csv_path)
        self._register(csv_path, "Synthetic load CSV")
        self._register(labels_path, "True regime of every synthetic reading")

    def ingest(self: Pipeline) -> None:
        """Validate the data, build the sample pairs and export them."""
        dataset = self.dataset
        split = self.split
        samples_path = self.output_dir / "samples.csv"
        export_samples_csv(split, samples_path)
        self._register(samples_path, "Train and test sample pairs, flattened")
        summary = {
            "n_days": dataset.n_days,
            "first_day": dataset.dates[0].isoformat(),
            "last_day": dataset.dates[-1].isoformat(),
            "scale": {"min": float(dataset.scale.min), "max": float(dataset.scale.max)},
            "lag_steps": self.config.data.lag_steps,
            "n_train": len(split.train),
            "n_test": len(split.test),
        }
        self._write_yaml("dataset.yaml", summary, "Summary of the aligned dataset")

    def diagnose(self: Pipeline) -> None:
        """Compute and plot the descriptive statistics of the load process."""
        cfg = self.config.diagnostics
        series = self.dataset.flat_loads()
        panels = [acf(series, min(lag, len(series) - 1)) for lag in cfg.acf_lags]
        kde = kde_epanechnikov(series, bandwidth=cfg.bandwidth, grid_size=cfg.kde_grid_size)
        reports = [
            adf_test(series, max_lag=cfg.adf_max_lag),
            kpss_test(series, lags=cfg.kpss_lags, logger=self.logger),
        ]

        table = format_stationarity_table(reports)
        self._write_text("diagnostics/stationarity.txt", table, "Stationarity tests")
        summary = {
            "n_points": int(len(series)),
            "kde_bandwidth": float(kde.bandwidth),
            "kde_modes": [float(m) for m in kde.local_maxima()],
            "acf_fraction_inside_band": [float(p.fraction_inside_band()) for p in panels],
            "tests": [
                {
                    "test": r.test_name,
                    "statistic": float(r.statistic),
                    "p_value": float(r.p_value),
                    "lags": int(r.lags_used),
                    "clamped": bool(r.clamped),
                }
                for r in reports
            ],
        }
        self._write_yaml("diagnostics/diagnostics.yaml", summary, "Descriptive statistics of the load")
        diagnostics_dir = self.output_dir / "diagnostics"
        load_svg = plot_load_process(self.dataset, diagnostics_dir / "load_process.svg")
        self._register(load_svg, "Load and schedules")
        self._register(plot_acf(panels, diagnostics_dir / "acf.svg"), "Autocorrelation of the load")
        self._register(plot_kde(kde, diagnostics_dir / "kde.svg"), "Density of the load")

    def gmm(self: Pipeline) -> None:
        """Fit the consumption state mixture and affiliate every day."""
        cfg = self.config.gmm
        dataset = self.dataset
        points = dataset.flat_loads()[: cfg.points]
        fit = em_fit(
            points,
            n_components=cfg.n_components,
            tol=cfg.tol,
            max_iter=cfg.max_iter,
            seed=self.config.seed,
            logger=self.logger,
        )
        self._write_yaml("gmm/gmm.yaml", fit.to_dict(), "Fitted mixture of consumption states")
        self._write_text("gmm/components.txt", fit.component_table(), "Mixture components by mean")

        rows = []
        for index, day in enumerate(dataset.days):
            affiliation = affiliate(day.load, fit)
            rows.append(
                {
                    "day_index": index,
                    "date": day.date.isoformat(),
                    "state": affiliation.state,
                    "ambiguous": affiliation.ambiguous,
                }
            )
        affiliation_path = self.output_dir / "gmm" / "affiliation.csv"
        pd.DataFrame(rows).to_csv(affiliation_path, index=False, lineterminator="\n")
        self._register(affiliation_path, "Consumption state of every day")

        gmm_dir = self.output_dir / "gmm"
        kde = kde_epanechnikov(points, grid_size=self.config.diagnostics.kde_grid_size)
        self._register(plot_gmm_convergence(fit, gmm_dir / "convergence.svg"), "EM parameter convergence")
        self._register(plot_kde(kde, gmm_dir / "kde.svg", means=fit.means), "Density with state means")

    def _model_path(self: Pipeline, model_kind: str) -> pathlib.Path:
        return self.output_dir / "models" / f"{model_kind}.npz"

    def _training_job(self: Pipeline, model_kind: str) -> Callable[[threading.Event], Any]:
        train_pairs = self.split.train
        if model_kind in ("lstm", "gru"):
            cfg = self.config.lstm if model_kind == "lstm" else self.config.gru
            return lambda stop: train(model_kind, train_pairs, cfg, stop_event=stop, logger=self.logger)
        if model_kind == "fastec":
            fastec_cfg = self.config.fastec
            return lambda stop: train_fastec(train_pairs, fastec_cfg, stop_event=stop, logger=self.logger)
        return lambda stop: arx_fit(train_pairs, lags=self.config.arx.lags, logger=self.logger)

    def train(self: Pipeline, models: Sequence[str]) -> None:
        """Train the models, concurrently when configured, and write their model files."""
        jobs = {kind: self._training_job(kind) for kind in models}
        results = train_models(
            jobs, self.stop_event, parallel=self.config.evaluation.parallel, logger=self.logger
        )
        for kind in models:
            path = self._model_path(kind)
            if kind in ("lstm", "gru"):
                params, history = results[kind]
                save_rnn(params, path)
                svg = plot_training_history(history, kind, self.output_dir / "training" / f"{kind}_loss.svg")
                self._register(svg, f"{kind} training loss")
            elif kind == "fastec":
                save_fastec(results[kind], path)
            else:
                save_arx(results[kind], path)
            self._register(path, f"Trained {kind} model")
        self.manifest.add_models(models)

    def _forecaster(self: Pipeline, model_kind: str) -> Callable[[SamplePair], Forecast]:
        path = self._model_path(model_kind)
        if model_kind in ("lstm", "gru"):
            params: RnnParams = load_rnn(path)
            if params.cell_kind != model_kind:
                raise ModelFileError(f"{path} holds a {params.cell_kind} model, expected {model_kind}")
            return lambda sample: forecast_nn(params, sample.predictors)
        if model_kind == "fastec":
            fastec_model = load_fastec(path)
            return lambda sample: regime_forecast(fastec_model, sample, logger=self.logger)
        arx_model = load_arx(path)
        return lambda sample: forecast_arx(arx_model, sample)

    def _forecast_frame(self: Pipeline, forecaster: Callable[[SamplePair], Forecast]) -> pd.DataFrame:
        dates = self.dataset.dates
        steps_per_day = self.dataset.freq_per_day
        frames = []
        clipped = 0
        for sample in self.split.test:
            forecast = forecaster(sample)
            clipped += forecast.clip_count
            steps = np.arange(len(forecast))
            frames.append(
                pd.DataFrame(
                    {
                        "day_index": sample.day_index,
                        "date": [dates[sample.day_index + 1 + s // steps_per_day].isoformat() for s in steps],
                        "step": steps,
                        "forecast": forecast.values,
                        "actual": sample.target,
                    }
                )
            )
        if clipped:
            self.logger.warning(f"{clipped} forecast values were clipped to [0, 1]")
        return pd.concat(frames, ignore_index=True)[FORECAST_COLUMNS]

    def _forecast_path(self: Pipeline, model_kind: str) -> pathlib.Path:
        return self.output_dir / "forecasts" / f"{model_kind}.csv"

    def forecast(self: Pipeline, models: Sequence[str]) -> None:
        """Forecast every test day with the trained models and naive persistence."""
        forecasters = {kind: self._forecaster(kind) for kind in models}
        forecasters[NAIVE] = naive_forecast
        for kind, forecaster in forecasters.items():
            self.logger.info(f"forecasting {len(self.split.test)} test days with {kind}")
            path = self._forecast_path(kind)
            path.parent.mkdir(parents=True, exist_ok=True)
            frame = self._forecast_frame(forecaster)
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
            self._register(path, f"{kind} forecasts of the test days")
        self.manifest.add_models(models)

    def _read_forecasts(self: Pipeline, model_kind: str) -> pd.DataFrame:
        path = self._forecast_path(model_kind)
        if not path.is_file():
            raise ModelFileError(f"forecast file {path} does not exist, run forecast first")
        frame = pd.read_csv(path)
        missing = [c for c in FORECAST_COLUMNS if c not in frame.columns]
        if missing:
            raise ModelFileError(f"forecast file {path} lacks columns {missing}")
        return frame

    def evaluate(self: Pipeline, models: Sequence[str]) -> None:
        """Compare the forecasts of the models and naive persistence on the test days."""
        kinds: List[str] = list(models) + [NAIVE]
        frames = {kind: self._read_forecasts(kind) for kind in kinds}
        actual = frames[kinds[0]]["actual"].to_numpy()
        for kind, frame in frames.items():
            if not np.array_equal(frame["actual"].to_numpy(), actual):
                raise ModelFileError(f"forecasts of {kind} cover other test days than those of {kinds[0]}")

        errors = {kind: actual - frame["forecast"].to_numpy() for kind, frame in frames.items()}
        reports: Dict[str, MetricReport] = {
            kind: compute_metrics(actual, frame["forecast"].to_numpy(), logger=self.logger)
            for kind, frame in frames.items()
        }
        reference = self.config.evaluation.reference
        if reference not in reports:
            reference = kinds[0]
        dm_results: Dict[str, DmResult] = {}
        for kind in kinds:
            if kind == reference:
                continue
            try:
                dm_results[kind] = dm_test(errors[reference], errors[kind])
            except DegenerateDifferential as exc:
                self.logger.warning(f"D-M test of {reference} against {kind} is undefined: {exc}")

        table = render_table(reports, dm_results, reference)
        evaluation_dir = self.output_dir / "evaluation"
        evaluation_dir.mkdir(parents=True, exist_ok=True)
        table.to_csv(evaluation_dir / "metrics.csv")
        self._register(evaluation_dir / "metrics.csv", "Comparison table")
        self._write_text("evaluation/metrics.txt", table.text + "\n", "Comparison table, plain text")
        self._write_yaml(
            "evaluation/metrics.yaml",
            {
                "reference": reference,
                "metrics": {kind: report.to_dict() for kind, report in reports.items()},
                "diebold_mariano": {
                    kind: {"statistic": r.statistic, "p_value": r.p_value, "lags": r.lags, "n": r.n}
                    for kind, r in dm_results.items()
                },
            },
            "Metrics and D-M results",
        )

        for kind in kinds:
            svg = plot_qq(residual_qq(errors[kind]), kind, evaluation_dir / f"qq_{kind}.svg")
            self._register(svg, f"{kind} residual QQ plot")

        steps_per_day = self.config.data.freq_per_day
        n_steps = steps_per_day * HORIZON_DAYS
        overlay_days = max(min(self.config.evaluation.overlay_days, len(actual) // n_steps), 1)
        # the first forecast day of consecutive test pairs covers consecutive calendar days
        first_days = np.concatenate(
            [np.arange(d * n_steps, d * n_steps + steps_per_day) for d in range(overlay_days)]
        )
        svg = plot_overlay(
            actual[first_days],
            {kind: frame["forecast"].to_numpy()[first_days] for kind, frame in frames.items()},
            evaluation_dir / "overlay.svg",
        )
        self._register(svg, "Day-ahead forecasts over the actual load")
        self.logger.info(f"comparison against {reference}:\n{table.text}")

    def compare(self: Pipeline, models: Sequence[str]) -> None:
        """Train, forecast and evaluate the models in one run."""
        self.train(models)
        self.forecast(models)
        self.evaluate(models)

    def finish(self: Pipeline) -> pathlib.Path:
        """Write the run manifest; called last."""
        return self.manifest.write_manifest()
