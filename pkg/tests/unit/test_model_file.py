# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""This module contains the pytest tests for versioned model files."""

import pathlib

import numpy as np
import pytest

from plant_load_forecast.errors import ModelFileError
from plant_load_forecast.model_file import FORMAT_VERSION, read_model_file, write_model_file


def test_model_file_keeps_header_and_arrays(tmp_path: pathlib.Path) -> None:
    """Test the header gains the kind and version and the arrays load unchanged."""
    path = tmp_path / "nested" / "model.npz"
    arrays = {"coefficients": np.linspace(0.0, 1.0, 7), "matrix": np.eye(3)}
    write_model_file(path, "arx", {"lags": 2, "columns": [1, 3]}, arrays)

    header, loaded = read_model_file(path, "arx")
    assert header == {"model_kind": "arx", "format_version": FORMAT_VERSION, "lags": 2, "columns": [1, 3]}
    assert set(loaded) == {"coefficients", "matrix"}
    np.testing.assert_array_equal(loaded["matrix"], np.eye(3))


def test_model_file_rejects_reserved_name(tmp_path: pathlib.Path) -> None:
    """Test the header array name cannot be used for coefficients."""
    with pytest.raises(ModelFileError, match="reserved"):
        write_model_file(tmp_path / "model.npz", "arx", {}, {"header": np.zeros(2)})


def test_read_model_file_errors(tmp_path: pathlib.Path) -> None:
    """Test missing, corrupt, mismatched and future-version files are rejected."""
    with pytest.raises(ModelFileError, match="does not exist"):
        read_model_file(tmp_path / "absent.npz", "arx")

    corrupt = tmp_path / "corrupt.npz"
    corrupt.write_bytes(b"not an archive")
    with pytest.raises(ModelFileError, match="cannot read"):
        read_model_file(corrupt, "arx")

    path = tmp_path / "model.npz"
    write_model_file(path, "fastec", {}, {"gamma": np.zeros(2)})
    with pytest.raises(ModelFileError, match="does not hold a arx model"):
        read_model_file(path, "arx")

    write_model_file(path, "arx", {"format_version": FORMAT_VERSION + 1}, {"gamma": np.zeros(2)})
    with pytest.raises(ModelFileError, match="format version"):
        read_model_file(path, "arx")
