# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module init code."""

__all__ = [
    "LoadForecastError",
    "LoadDataset",
    "SamplePair",
    "ingest_csv",
    "build_samples",
    "em_fit",
    "TrainConfig",
    "FastecConfig",
    "ArxModel",
    "compute_metrics",
    "dm_test",
    "SynthConfig",
    "RunConfig",
    "ManifestBuilder",
    "Pipeline",
]

from .errors import LoadForecastError
from .load_dataset import LoadDataset, SamplePair
from .load_ingest import ingest_csv
from .sample_builder import build_samples
from .gmm import em_fit
from .rnn_trainer import TrainConfig
from .regime_fastec import FastecConfig
from .baselines import ArxModel
from .evaluation import compute_metrics, dm_test
from .synth import SynthConfig
from .run_config import RunConfig
from .manifest_builder import ManifestBuilder
from .pipeline import Pipeline
