# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for building supervised two-day-ahead sample pairs from a load dataset."""
from __future__ import annotations

import logging
import pathlib
from typing import List

import numpy as np
import pandas as pd

from .errors import InsufficientData, SplitError
from .load_dataset import HORIZON_DAYS, N_GROUPS, LoadDataset, SamplePair, SampleSplit

__all__ = [
    "build_samples",
    "eligible_days",
    "default_split_day",
    "export_samples_csv",
]

# 7 of 12 months go to training
TRAIN_FRACTION_DAYS = 212
YEAR_DAYS = 365


def eligible_days(dataset: LoadDataset) -> int:
    """Get the number of days t for which days t+1 and t+2 exist."""
    return max(dataset.n_days - HORIZON_DAYS, 0)


def default_split_day(n_days: int) -> int:
    """Get the default split day index for a dataset of ``n_days`` days.

    This keeps the 7-month / 5-month ratio of a full year, i.e. day 212 of 365.
    """
    return int(round(n_days * TRAIN_FRACTION_DAYS / YEAR_DAYS))


def _sample_pair(dataset: LoadDataset, day_index: int) -> SamplePair:
    predictors = np.column_stack([dataset.schedules[day_index], dataset.loads[day_index]])
    target = dataset.loads[day_index + 1 : day_index + 1 + HORIZON_DAYS].reshape(-1)
    return SamplePair(day_index=day_index, predictors=predictors, target=target)


def build_samples(
    dataset: LoadDataset,
    split_at: int,
    logger: logging.Logger | None = None,
) -> SampleSplit:
    """
    Build one sample pair per eligible day and split them chronologically.

    Pair t holds the day-t schedule groups and day-t load as predictors and the loads of days
    t+1 and t+2 as target. Pairs with t < ``split_at`` form the training set.

    :param dataset: the aligned dataset
    :param split_at: the first day index of the test set
    :param logger: the logger instance to use.
    :raises InsufficientData: if the dataset has fewer than 3 days
    :raises SplitError: if either side of the split would be empty
    """
    logger = logger or logging.getLogger(__name__)
    n_pairs = eligible_days(dataset)
    if n_pairs < 1:
        raise InsufficientData(f"at least {HORIZON_DAYS + 1} days are required, dataset has {dataset.n_days}")
    if split_at < 1 or split_at > n_pairs - 1:
        raise SplitError(f"split_at={split_at} must be in [1, {n_pairs - 1}] for {n_pairs} sample pairs")

    pairs = [_sample_pair(dataset, t) for t in range(n_pairs)]
    split = SampleSplit(train=pairs[:split_at], test=pairs[split_at:])
    logger.info(f"built {n_pairs} sample pairs: {len(split.train)} train, {len(split.test)} test")
    return split


def export_samples_csv(split: SampleSplit, path: pathlib.Path) -> None:
    """Write the sample pairs as flattened rows for debugging.

    Each row holds ``set`` (train or test), ``day_index``, the predictor block flattened
    channel by channel as ``x{group}_{step}`` and ``load_{step}``, then ``y_{step}`` for the target.

    :param split: the sample split to export
    :param path: destination CSV file
    """
    pairs: List[SamplePair] = [*split.train, *split.test]
    if not pairs:
        return
    steps = pairs[0].predictors.shape[0]
    names = [f"x{group + 1}_{s}" for group in range(N_GROUPS) for s in range(steps)]
    names += [f"load_{s}" for s in range(steps)]
    names += [f"y_{s}" for s in range(HORIZON_DAYS * steps)]

    rows = np.stack([np.concatenate([pair.predictors.T.reshape(-1), pair.target]) for pair in pairs])
    frame = pd.DataFrame(rows, columns=names)
    frame.insert(0, "day_index", [pair.day_index for pair in pairs])
    frame.insert(0, "set", ["train"] * len(split.train) + ["test"] * len(split.test))
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.10f")
