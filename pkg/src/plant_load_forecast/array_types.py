# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Array type aliases used in annotations across the package."""
from __future__ import annotations

from typing import Any

import nptyping as npt

__all__ = [
    "FloatArray",
    "IntArray",
    "BoolArray",
]

FloatArray = npt.NDArray[Any, npt.Float64]
IntArray = npt.NDArray[Any, npt.Int64]
BoolArray = npt.NDArray[Any, npt.Bool]
