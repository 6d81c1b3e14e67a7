# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for the forecast value object shared by all forecasters."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from .array_types import FloatArray

__all__ = [
    "Forecast",
    "clipped_forecast",
]


@dataclass(frozen=True)
class Forecast:
    """
    A two-day forecast of scaled loads.

    :ivar values: the forecast, clipped to [0, 1]
    :vartype values: FloatArray
    :ivar clip_count: number of raw values that were outside [0, 1]
    :vartype clip_count: int
    :ivar metadata: forecaster specific diagnostics, e.g. the affiliated regime
    :vartype metadata: Dict[str, Any]
    """

    values: FloatArray
    clip_count: int = field(default=0)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __len__(self: Forecast) -> int:
        """Get the number of forecast steps."""
        return len(self.values)


def clipped_forecast(raw: FloatArray, metadata: Dict[str, Any] | None = None) -> Forecast:
    """Clip raw forecast values to [0, 1] and count the clipped values."""
    values = np.asarray(raw, dtype=np.float64)
    clip_count = int(np.count_nonzero((values < 0.0) | (values > 1.0)))
    return Forecast(values=np.clip(values, 0.0, 1.0), clip_count=clip_count, metadata=dict(metadata or {}))
