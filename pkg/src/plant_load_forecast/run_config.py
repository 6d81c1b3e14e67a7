# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for the YAML run configuration that drives every subcommand."""
from __future__ import annotations

import dataclasses
import hashlib
import os
import pathlib
import types
import typing
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import yaml

from .errors import ConfigError
from .load_dataset import FREQ_PER_DAY, N_GROUPS, ColumnLayout
from .load_ingest import DEFAULT_LAG_STEPS, MIN_DAYS
from .regime_fastec import FastecConfig
from .rnn_trainer import TrainConfig
from .synth import SynthConfig

__all__ = [
    "DataConfig",
    "DiagnosticsConfig",
    "GmmConfig",
    "ArxConfig",
    "EvaluationConfig",
    "RunConfig",
    "MODEL_KINDS",
    "OUTPUT_ENV_VAR",
    "apply_overrides",
    "load_run_config",
    "parse_run_config",
]

OUTPUT_ENV_VAR: str = "PLANT_LOAD_FORECAST_OUTPUT"
DEFAULT_OUTPUT_DIR: pathlib.Path = pathlib.Path("output")
MODEL_KINDS = ("lstm", "gru", "fastec", "arx")
SEEDED_SECTIONS = ("synth", "lstm", "gru", "fastec")


@dataclass
class DataConfig:
    """
    A data class describing the data source and sample construction.

    :ivar csv: the load CSV, relative paths are resolved against the config file; null to use the
        synthetic generator
    :vartype csv: Optional[str]
    :ivar layout: the columns of the CSV
    :vartype layout: ColumnLayout
    :ivar freq_per_day: readings per day
    :vartype freq_per_day: int
    :ivar min_days: minimum number of full days to accept
    :vartype min_days: int
    :ivar lag_steps: recording lag of the schedules, in steps
    :vartype lag_steps: int
    :ivar split_day: number of training pairs, null for the 7 to 5 month ratio
    :vartype split_day: Optional[int]
    """

    csv: Optional[str] = field(default=None)
    layout: ColumnLayout = field(default_factory=ColumnLayout)
    freq_per_day: int = field(default=FREQ_PER_DAY)
    min_days: int = field(default=MIN_DAYS)
    lag_steps: int = field(default=DEFAULT_LAG_STEPS)
    split_day: Optional[int] = field(default=None)


@dataclass
class DiagnosticsConfig:
    """
    A data class describing the descriptive statistics of ``diagnose``.

    :ivar acf_lags: maximum lag of every ACF panel, capped at n - 1
    :vartype acf_lags: List[int]
    :ivar kde_grid_size: number of KDE evaluation points
    :vartype kde_grid_size: int
    :ivar bandwidth: KDE bandwidth, null for the range rule
    :vartype bandwidth: Optional[float]
    :ivar adf_max_lag: fixed ADF lag order, null for AIC selection
    :vartype adf_max_lag: Optional[int]
    :ivar kpss_lags: KPSS bandwidth, null for the sample size rule
    :vartype kpss_lags: Optional[int]
    """

    acf_lags: List[int] = field(default_factory=lambda: [10000, 1000])
    kde_grid_size: int = field(default=4096)
    bandwidth: Optional[float] = field(default=None)
    adf_max_lag: Optional[int] = field(default=None)
    kpss_lags: Optional[int] = field(default=None)


@dataclass
class GmmConfig:
    """
    A data class describing the mixture fit of ``gmm``.

    :ivar n_components: number of consumption states
    :vartype n_components: int
    :ivar points: number of leading load points to fit
    :vartype points: int
    :ivar tol: relative log-likelihood convergence tolerance
    :vartype tol: float
    :ivar max_iter: iteration cap
    :vartype max_iter: int
    """

    n_components: int = field(default=5)
    points: int = field(default=10000)
    tol: float = field(default=1e-7)
    max_iter: int = field(default=500)


@dataclass
class ArxConfig:
    """A data class holding the ARX lag order."""

    lags: int = field(default=FREQ_PER_DAY)


@dataclass
class EvaluationConfig:
    """
    A data class describing the comparison of ``evaluate`` and ``compare``.

    :ivar models: models to train, forecast and compare
    :vartype models: List[str]
    :ivar reference: model the D-M row compares against
    :vartype reference: str
    :ivar overlay_days: number of leading test days in the forecast overlay plots
    :vartype overlay_days: int
    :ivar parallel: train the models of ``compare`` in concurrent worker threads
    :vartype parallel: bool
    """

    models: List[str] = field(default_factory=lambda: list(MODEL_KINDS))
    reference: str = field(default="lstm")
    overlay_days: int = field(default=7)
    parallel: bool = field(default=True)


@dataclass
class RunConfig:
    """
    A data class holding a resolved run configuration.

    :ivar seed: the run seed; model sections without their own seed inherit it
    :vartype seed: int
    :ivar output_dir: directory of all artifacts
    :vartype output_dir: pathlib.Path
    :ivar base_dir: directory that relative data paths are resolved against
    :vartype base_dir: pathlib.Path
    """

    seed: int
    output_dir: pathlib.Path = field(default=DEFAULT_OUTPUT_DIR)
    base_dir: pathlib.Path = field(default_factory=pathlib.Path)
    data: DataConfig = field(default_factory=DataConfig)
    synth: Optional[SynthConfig] = field(default=None)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    gmm: GmmConfig = field(default_factory=GmmConfig)
    lstm: TrainConfig = field(default_factory=TrainConfig)
    gru: TrainConfig = field(default_factory=TrainConfig)
    fastec: FastecConfig = field(default_factory=FastecConfig)
    arx: ArxConfig = field(default_factory=ArxConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    @property
    def csv_path(self: RunConfig) -> Optional[pathlib.Path]:
        """Get the resolved load CSV path, None when the synthetic generator is the data source."""
        if self.data.csv is None:
            return None
        return self.base_dir / pathlib.Path(self.data.csv).expanduser()

    def seeds(self: RunConfig) -> Dict[str, int]:
        """Get every seed in use by section."""
        seeds = {"run": self.seed, "lstm": self.lstm.seed, "gru": self.gru.seed, "fastec": self.fastec.seed}
        if self.synth is not None:
            seeds["synth"] = self.synth.seed
        return seeds

    def to_dict(self: RunConfig) -> Dict[str, Any]:
        """Get the configuration as plain YAML-safe data, without the output and base directories."""
        snapshot = asdict(self)
        del snapshot["output_dir"]
        del snapshot["base_dir"]
        return snapshot

    def config_hash(self: RunConfig) -> str:
        """Get the SHA-256 hex digest of the canonical YAML dump of the configuration."""
        canonical = yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def validate(self: RunConfig) -> List[str]:
        """Get a list of problems with the configuration, empty when valid."""
        problems: List[str] = []
        if self.seed < 0:
            problems.append(f"seed={self.seed} must be non-negative")

        csv_path = self.csv_path
        if csv_path is None and self.synth is None:
            problems.append("either data.csv or a synth section is required")
        if csv_path is not None:
            if not csv_path.is_file():
                problems.append(f"data.csv: {csv_path} does not exist")
            layout = self.data.layout
            if layout.is_raw == (len(layout.group_columns) > 0):
                problems.append("data.layout needs exactly one of group_columns or schedule_groups")
            elif not layout.is_raw and len(layout.group_columns) != N_GROUPS:
                problems.append(f"data.layout.group_columns must name {N_GROUPS} columns")
        if self.data.freq_per_day < 2:
            problems.append(f"data.freq_per_day={self.data.freq_per_day} must be at least 2")
        if self.data.min_days < 3:
            problems.append(f"data.min_days={self.data.min_days} must be at least 3")
        if not 0 <= self.data.lag_steps < self.data.freq_per_day:
            problems.append(f"data.lag_steps={self.data.lag_steps} must be in [0, {self.data.freq_per_day})")
        if self.data.split_day is not None and self.data.split_day < 1:
            problems.append(f"data.split_day={self.data.split_day} must be at least 1")

        if any(lag < 1 for lag in self.diagnostics.acf_lags) or not self.diagnostics.acf_lags:
            problems.append(f"diagnostics.acf_lags={self.diagnostics.acf_lags} must be positive lags")
        if self.diagnostics.kde_grid_size < 2:
            problems.append(f"diagnostics.kde_grid_size={self.diagnostics.kde_grid_size} must be at least 2")
        if self.diagnostics.bandwidth is not None and not self.diagnostics.bandwidth > 0.0:
            problems.append(f"diagnostics.bandwidth={self.diagnostics.bandwidth} must be positive")

        if self.gmm.n_components < 1:
            problems.append(f"gmm.n_components={self.gmm.n_components} must be at least 1")
        if self.gmm.points <= self.gmm.n_components:
            problems.append(f"gmm.points={self.gmm.points} must exceed gmm.n_components")
        if self.gmm.tol < 0.0 or self.gmm.max_iter < 1:
            problems.append("gmm.tol must be non-negative and gmm.max_iter at least 1")

        if not 1 <= self.arx.lags <= self.data.freq_per_day:
            problems.append(f"arx.lags={self.arx.lags} must be in [1, {self.data.freq_per_day}]")

        unknown = [m for m in self.evaluation.models if m not in MODEL_KINDS]
        if unknown or not self.evaluation.models:
            problems.append(
                f"evaluation.models={self.evaluation.models} must be a subset of {list(MODEL_KINDS)}"
            )
        if self.evaluation.reference not in self.evaluation.models:
            problems.append(
                f"evaluation.reference={self.evaluation.reference!r} must be one of evaluation.models"
            )
        if self.evaluation.overlay_days < 1:
            problems.append(f"evaluation.overlay_days={self.evaluation.overlay_days} must be at least 1")

        problems.extend(f"lstm: {p}" for p in self.lstm.validate())
        problems.extend(f"gru: {p}" for p in self.gru.validate())
        problems.extend(f"fastec: {p}" for p in self.fastec.validate())
        if self.synth is not None:
            problems.extend(f"synth: {p}" for p in self.synth.validate())
        return problems


def _accepts(hint: Any, value: Any) -> bool:
    if value is None:
        return hint is type(None) or type(None) in typing.get_args(hint)
    origin = typing.get_origin(hint)
    if origin in (typing.Union, types.UnionType):
        return any(_accepts(arg, value) for arg in typing.get_args(hint) if arg is not type(None))
    if origin is list:
        return isinstance(value, list)
    if origin is dict:
        return isinstance(value, dict)
    if hint is bool:
        return isinstance(value, bool)
    if hint is int:
        return isinstance(value, int) and not isinstance(value, bool)
    if hint is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if hint is str:
        return isinstance(value, str)
    return True


def _build_section(cls: type, values: Any, section: str, problems: List[str]) -> Any:
    """Build a section data class from a mapping, recording every problem instead of raising."""
    if values is None:
        values = {}
    if not isinstance(values, dict):
        problems.append(f"{section}: expected a mapping, got {type(values).__name__}")
        return cls()

    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs: Dict[str, Any] = {}
    for key, value in values.items():
        name = f"{section}.{key}"
        if key not in names:
            problems.append(f"{name}: unknown key")
            continue
        hint = hints[key]
        if dataclasses.is_dataclass(hint):
            kwargs[key] = _build_section(hint, value, name, problems)
        elif _accepts(hint, value):
            kwargs[key] = value
        else:
            problems.append(f"{name}: unexpected value {value!r}")
    return cls(**kwargs)


SECTIONS: Dict[str, type] = {
    "data": DataConfig,
    "synth": SynthConfig,
    "diagnostics": DiagnosticsConfig,
    "gmm": GmmConfig,
    "lstm": TrainConfig,
    "gru": TrainConfig,
    "fastec": FastecConfig,
    "arx": ArxConfig,
    "evaluation": EvaluationConfig,
}


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[str]) -> List[str]:
    """
    Apply ``dotted.key=value`` overrides to the raw configuration in place.

    Values are parsed as YAML scalars, so ``lstm.epochs=50`` sets an integer.

    :return: a list of malformed overrides
    """
    problems = []
    for override in overrides:
        key, sep, text = override.partition("=")
        if not sep or not key:
            problems.append(f"override {override!r} is not of the form key=value")
            continue
        try:
            value = yaml.safe_load(text)
        except yaml.YAMLError:
            problems.append(f"override {override!r} has an unparseable value")
            continue
        *parents, leaf = key.split(".")
        node = raw
        for parent in parents:
            child = node.setdefault(parent, {})
            if not isinstance(child, dict):
                problems.append(f"override {override!r}: {parent} is not a section")
                break
            node = child
        else:
            node[leaf] = value
    return problems


def parse_run_config(
    raw: Any,
    base_dir: pathlib.Path | None = None,
    output_dir: pathlib.Path | None = None,
) -> RunConfig:
    """
    Build and validate a run configuration from parsed YAML.

    The output directory is ``output_dir`` if given, else the environment variable
    ``PLANT_LOAD_FORECAST_OUTPUT``, else the ``output_dir`` key, else ``./output``.

    :raises ConfigError: with every problem found
    """
    if not isinstance(raw, dict):
        raise ConfigError([f"configuration must be a mapping, got {type(raw).__name__}"])
    problems: List[str] = []
    unknown = set(raw) - set(SECTIONS) - {"seed", "output_dir"}
    problems.extend(f"{key}: unknown section" for key in sorted(unknown))

    seed = raw.get("seed")
    if seed is None:
        problems.append("seed: a run seed is required")
    elif not _accepts(int, seed):
        problems.append(f"seed: expected an integer, got {seed!r}")
        seed = None

    sections = {
        name: _build_section(cls, raw.get(name), name, problems)
        for name, cls in SECTIONS.items()
        if name != "synth" or raw.get("synth") is not None
    }
    for name in SEEDED_SECTIONS:
        section_values = raw.get(name)
        has_own_seed = isinstance(section_values, dict) and "seed" in section_values
        if name in sections and seed is not None and not has_own_seed:
            sections[name].seed = seed

    env_output = os.environ.get(OUTPUT_ENV_VAR)
    resolved_output = output_dir or (pathlib.Path(env_output) if env_output else None)
    if resolved_output is None:
        resolved_output = pathlib.Path(str(raw.get("output_dir", DEFAULT_OUTPUT_DIR)))

    if problems:
        raise ConfigError(problems)
    assert seed is not None
    config = RunConfig(
        seed=seed,
        output_dir=resolved_output,
        base_dir=base_dir or pathlib.Path.cwd(),
        **sections,
    )
    problems = config.validate()
    if problems:
        raise ConfigError(problems)
    return config


def load_run_config(
    path: pathlib.Path,
    overrides: Sequence[str] = (),
    output_dir: pathlib.Path | None = None,
) -> RunConfig:
    """
    Read, override and validate a YAML run configuration.

    :param path: the YAML file
    :param overrides: ``dotted.key=value`` flag overrides
    :param output_dir: output directory from the command line
    :raises ConfigError: if the file is missing, unparseable or invalid
    """
    path = pathlib.Path(path)
    if not path.is_file():
        raise ConfigError([f"config file {path} does not exist"])
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except (yaml.YAMLError, UnicodeDecodeError) as exc:
        raise ConfigError([f"config file {path} is not valid YAML: {exc}"]) from exc
    if raw is None:
        raw = {}
    if isinstance(raw, dict):
        problems = apply_overrides(raw, overrides)
        if problems:
            raise ConfigError(problems)
    return parse_run_config(raw, base_dir=path.parent.resolve(), output_dir=output_dir)
