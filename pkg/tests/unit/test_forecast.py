# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""This module contains the pytest tests for the Forecast value object."""

import numpy as np

from plant_load_forecast.forecast import Forecast, clipped_forecast


def test_clipped_forecast_counts_clipped_values() -> None:
    """Test values outside [0, 1] are clipped and counted."""
    forecast = clipped_forecast(np.array([-0.2, 0.0, 0.5, 1.0, 1.3]), metadata={"model": "arx"})

    np.testing.assert_array_equal(forecast.values, [0.0, 0.0, 0.5, 1.0, 1.0])
    assert forecast.clip_count == 2
    assert len(forecast) == 5
    assert forecast.metadata == {"model": "arx"}


def test_clipped_forecast_copies_metadata() -> None:
    """Test the forecast does not share the metadata dictionary of the caller."""
    metadata = {"regime": 1}
    forecast = clipped_forecast(np.array([0.4]), metadata=metadata)
    metadata["regime"] = 2
    assert forecast.metadata == {"regime": 1}


def test_forecast_defaults() -> None:
    """Test a forecast without clipping or metadata."""
    forecast = Forecast(values=np.full(4, 0.5))
    assert forecast.clip_count == 0
    assert forecast.metadata == {}
