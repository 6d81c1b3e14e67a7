# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module class for writing YAML run manifest files."""
from __future__ import annotations

__all__ = [
    "ManifestBuilder",
    "MANIFEST_FILE_NAME",
]

import logging
import pathlib
from datetime import datetime, timezone
from importlib import metadata
from typing import List, Sequence

from .errors import ModelFileError
from .run_config import RunConfig
from .run_manifest import ManifestContext, ManifestFile, ManifestTool, RunManifest

INTERFACE: str = "plant-load-forecast/run-manifest/1"
DISTRIBUTION: str = "plant-load-forecast"
FALLBACK_VERSION: str = "0.1.0"
MANIFEST_FILE_NAME: str = "manifest.yaml"


def tool_version() -> str:
    """Get the installed version of the package."""
    try:
        return metadata.version(DISTRIBUTION)
    except metadata.PackageNotFoundError:
        return FALLBACK_VERSION


class ManifestBuilder:
    """Class used for building run manifest files.

    Artifacts are registered as they are written; the manifest itself is written last.
    """

    def __init__(
        self: ManifestBuilder,
        output_dir: pathlib.Path,
        run_config: RunConfig,
        command: str,
        arguments: Sequence[str] = (),
        logger: logging.Logger | None = None,
    ) -> None:
        """
        Create the builder of a run manifest.

        :param output_dir: the directory holding the run artifacts
        :param run_config: the resolved configuration of the run
        :param command: the subcommand of the run
        :param arguments: the command line arguments
        :param logger: the logger instance to use.
        """
        self.logger = logger or logging.getLogger(__name__)
        self._output_dir = pathlib.Path(output_dir)
        self._run_config = run_config
        self._files: List[ManifestFile] = []
        self._manifest = RunManifest(
            interface=INTERFACE,
            tool=ManifestTool(version=tool_version()),
            context=ManifestContext(command=command, arguments=list(arguments)),
        )

    def add_file(self: ManifestBuilder, path: pathlib.Path, description: str) -> None:
        """
        Register an artifact of the run.

        :param path: the artifact, inside the output directory
        :param description: what the artifact holds
        :raises ModelFileError: if the artifact does not exist
        """
        path = pathlib.Path(path)
        if not path.is_file():
            raise ModelFileError(f"artifact {path} was not written")
        relative = path.resolve().relative_to(self._output_dir.resolve())
        self._files = [entry for entry in self._files if entry.path != str(relative)]
        entry = ManifestFile(description=description, path=str(relative), size=path.stat().st_size)
        self._files.append(entry)
        self.logger.debug(f"registered artifact {relative}")

    def add_models(self: ManifestBuilder, models: Sequence[str]) -> None:
        """Record the models the run worked on."""
        self._manifest.context.models.extend(m for m in models if m not in self._manifest.context.models)

    def _build_manifest(self: ManifestBuilder) -> None:
        """Build the RunManifest object."""
        self._manifest.config = self._run_config.to_dict()
        self._manifest.config_hash = self._run_config.config_hash()
        self._manifest.seeds = self._run_config.seeds()
        self._manifest.context.created = datetime.now(timezone.utc).isoformat(timespec="seconds")
        for entry in self._files:
            full_path = self._output_dir / entry.path
            if full_path.is_file():
                entry.size = full_path.stat().st_size
            else:
                entry.status = "missing"
        self._manifest.files = list(self._files)

    def write_manifest(self: ManifestBuilder, file_name: str = MANIFEST_FILE_NAME) -> pathlib.Path:
        """Build the manifest and write it to the output directory."""
        self._build_manifest()
        self._output_dir.mkdir(parents=True, exist_ok=True)
        path = self._output_dir / file_name
        with open(path, "w") as yaml_file:
            yaml_file.write(self._manifest.to_yaml())
        self.logger.info(f"wrote run manifest {path} listing {len(self._files)} artifacts")
        return path

    @property
    def output_dir(self: ManifestBuilder) -> pathlib.Path:
        """Get the directory holding the run artifacts."""
        return self._output_dir

    @property
    def manifest(self: ManifestBuilder) -> RunManifest:
        """Get the manifest being built."""
        return self._manifest
