# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module class for structure used for writing YAML run manifest files."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List

import yaml

__all__ = [
    "ManifestTool",
    "ManifestContext",
    "ManifestFile",
    "RunManifest",
]


@dataclass
class ManifestTool:
    """
    A data class to represent the tool field of a run manifest.

    :ivar name: distribution name of the generating software
    :vartype name: str
    :ivar version: version of the generating software
    :vartype version: str
    """

    name: str = field(default="plant-load-forecast")
    version: str = field(default="")


@dataclass
class ManifestContext:
    """
    A data class to represent the context field of a run manifest.

    :ivar command: the subcommand that produced the artifacts
    :vartype command: str
    :ivar arguments: the command line arguments, verbatim
    :vartype arguments: List[str]
    :ivar models: the models the subcommand worked on
    :vartype models: List[str]
    :ivar created: UTC time the manifest was written, ISO format
    :vartype created: str
    """

    command: str = field(default="")
    arguments: List[str] = field(default_factory=list)
    models: List[str] = field(default_factory=list)
    created: str = field(default="")


@dataclass
class ManifestFile:
    """
    A data class to represent an entry of the files field of a run manifest.

    :ivar description: what the file holds
    :vartype description: str
    :ivar path: path relative to the output directory
    :vartype path: str
    :ivar size: size in bytes
    :vartype size: int
    :ivar status: done, or missing if the file disappeared before the manifest was written
    :vartype status: str
    """

    description: str = field(default="")
    path: str = field(default="")
    size: int = field(default=0)
    status: str = field(default="done")


@dataclass
class RunManifest:
    """Class representing the manifest of one run.

    The manifest is sufficient to reproduce the artifacts it lists: it snapshots the resolved
    configuration with its hash and seeds, and names the tool version.

    :ivar interface: the manifest schema
    :vartype interface: str
    :ivar tool: the generating software
    :vartype tool: ManifestTool
    :ivar context: how the run was invoked
    :vartype context: ManifestContext
    :ivar config: snapshot of the resolved configuration
    :vartype config: Dict[str, Any]
    :ivar config_hash: SHA-256 of the canonical configuration
    :vartype config_hash: str
    :ivar seeds: every seed in use, by section
    :vartype seeds: Dict[str, int]
    :ivar files: the artifacts of the run
    :vartype files: List[ManifestFile]
    """

    interface: str = field(default="")
    tool: ManifestTool = field(default_factory=ManifestTool)
    context: ManifestContext = field(default_factory=ManifestContext)
    config: Dict[str, Any] = field(default_factory=dict)
    config_hash: str = field(default="")
    seeds: Dict[str, int] = field(default_factory=dict)
    files: List[ManifestFile] = field(default_factory=list)

    def to_yaml(self: RunManifest) -> str:
        """Get the object properties in yaml representation in string format."""
        return yaml.safe_dump(asdict(self), sort_keys=False)

    @classmethod
    def from_yaml(cls: type[RunManifest], text: str) -> RunManifest:
        """Build a manifest from its yaml representation."""
        data = yaml.safe_load(text)
        return cls(
            interface=data.get("interface", ""),
            tool=ManifestTool(**data.get("tool", {})),
            context=ManifestContext(**data.get("context", {})),
            config=data.get("config", {}),
            config_hash=data.get("config_hash", ""),
            seeds=data.get("seeds", {}),
            files=[ManifestFile(**entry) for entry in data.get("files", [])],
        )
