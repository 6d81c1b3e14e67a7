# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for versioned model files: numpy arrays plus a YAML header in one ``.npz`` archive."""
from __future__ import annotations

import pathlib
import zipfile
from typing import Any, Dict, Tuple

import numpy as np
import yaml

from .array_types import FloatArray
from .errors import ModelFileError

__all__ = [
    "FORMAT_VERSION",
    "write_model_file",
    "read_model_file",
]

FORMAT_VERSION = 1
HEADER_KEY = "header"


def write_model_file(
    path: pathlib.Path, model_kind: str, header: Dict[str, Any], arrays: Dict[str, FloatArray]
) -> None:
    """
    Write arrays and a YAML header to ``path``.

    The header always carries ``model_kind`` and ``format_version``.
    """
    if HEADER_KEY in arrays:
        raise ModelFileError(f"array name {HEADER_KEY!r} is reserved")
    full_header = {"model_kind": model_kind, "format_version": FORMAT_VERSION, **header}
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        np.savez(f, **{HEADER_KEY: np.array(yaml.safe_dump(full_header, sort_keys=True))}, **arrays)


def read_model_file(path: pathlib.Path, model_kind: str) -> Tuple[Dict[str, Any], Dict[str, FloatArray]]:
    """
    Read a model file written by :py:func:`write_model_file`.

    :param path: the file to read
    :param model_kind: the kind of model the caller expects
    :return: the header and the arrays by name
    :raises ModelFileError: if the file is missing, unreadable, of another kind or version
    """
    path = pathlib.Path(path)
    if not path.exists():
        raise ModelFileError(f"model file {path} does not exist")
    try:
        with np.load(path, allow_pickle=False) as archive:
            header = yaml.safe_load(str(archive[HEADER_KEY]))
            arrays = {name: archive[name] for name in archive.files if name != HEADER_KEY}
    except (OSError, KeyError, ValueError, zipfile.BadZipFile, yaml.YAMLError) as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from exc

    if not isinstance(header, dict) or header.get("model_kind") != model_kind:
        raise ModelFileError(f"{path} does not hold a {model_kind} model")
    if header.get("format_version") != FORMAT_VERSION:
        raise ModelFileError(
            f"{path} has format version {header.get('format_version')}, expected {FORMAT_VERSION}"
        )
    return header, arrays
