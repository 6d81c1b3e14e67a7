# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""This module contains the pytest tests for the command line application."""

import pathlib
from typing import Callable, List

import pandas as pd
import pytest
import yaml

from plant_load_forecast.cli import ERROR_FILE_NAME, build_parser, main, run
from plant_load_forecast.errors import EXIT_ARTIFACT, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL
from plant_load_forecast.pipeline import Pipeline
from plant_load_forecast.run_config import OUTPUT_ENV_VAR

ConfigFileFactory = Callable[..., pathlib.Path]


@pytest.fixture(autouse=True)
def clear_output_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Ensure the output directory environment variable is not inherited."""
    monkeypatch.delenv(OUTPUT_ENV_VAR, raising=False)


@pytest.fixture
def synth_config_file(config_file_factory: ConfigFileFactory) -> pathlib.Path:
    """Return a configuration file of a small synthetic run."""
    return config_file_factory({"seed": 5, "synth": {"n_days": 10}})


def _run(arguments: List[str]) -> int:
    return run(build_parser().parse_args(arguments), arguments)


def _error_record(output_dir: pathlib.Path) -> dict:
    with open(output_dir / ERROR_FILE_NAME, "r") as f:
        return yaml.safe_load(f)


def test_parser_model_option() -> None:
    """Test only the model subcommands take a model option, defaulting to all models."""
    parser = build_parser()
    args = parser.parse_args(["train", "run.yaml", "--model", "gru", "--set", "gru.epochs=2"])
    assert args.command == "train"
    assert args.model == "gru"
    assert args.overrides == ["gru.epochs=2"]
    assert parser.parse_args(["compare", "run.yaml"]).model == "all"
    with pytest.raises(SystemExit):
        parser.parse_args(["ingest", "run.yaml", "--model", "gru"])


def test_unknown_subcommand_is_a_usage_error() -> None:
    """Test an unknown subcommand exits with the usage status."""
    with pytest.raises(SystemExit) as excinfo:
        main(["forecast-all", "run.yaml"])
    assert excinfo.value.code == 2


def test_synth_succeeds(synth_config_file: pathlib.Path, output_dir: pathlib.Path) -> None:
    """Test a synth run writes its CSV and the run manifest."""
    status = _run(["synth", str(synth_config_file), "--output-dir", str(output_dir)])

    assert status == 0
    assert len(pd.read_csv(output_dir / "synth" / "load.csv")) == 10 * 96
    with open(output_dir / "manifest.yaml", "r") as f:
        manifest = yaml.safe_load(f)
    assert manifest["context"]["command"] == "synth"
    assert manifest["seeds"]["synth"] == 5
    assert not (output_dir / ERROR_FILE_NAME).exists()


def test_main_exits_with_status(synth_config_file: pathlib.Path, output_dir: pathlib.Path) -> None:
    """Test main exits with the status of the run."""
    with pytest.raises(SystemExit) as excinfo:
        main(["ingest", str(synth_config_file), "--output-dir", str(output_dir)])
    assert excinfo.value.code == 0
    assert (output_dir / "samples.csv").is_file()


def test_missing_config_file(tmp_path: pathlib.Path, output_dir: pathlib.Path) -> None:
    """Test a missing configuration file is a configuration error with an error record."""
    status = _run(["ingest", str(tmp_path / "absent.yaml"), "--output-dir", str(output_dir)])

    assert status == EXIT_CONFIG
    record = _error_record(output_dir)
    assert record["error"] == "ConfigError"
    assert record["exit_code"] == EXIT_CONFIG
    assert "does not exist" in record["errors"][0]


def test_invalid_override(synth_config_file: pathlib.Path, output_dir: pathlib.Path) -> None:
    """Test an override failing validation is reported with its section."""
    status = _run(
        ["train", str(synth_config_file), "--output-dir", str(output_dir), "--set", "lstm.epochs=0"]
    )

    assert status == EXIT_CONFIG
    assert any(problem.startswith("lstm: ") for problem in _error_record(output_dir)["errors"])


def test_error_record_goes_to_env_output(
    tmp_path: pathlib.Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Test the error record is written to the environment's output directory without a flag."""
    env_output = tmp_path / "env_output"
    monkeypatch.setenv(OUTPUT_ENV_VAR, str(env_output))

    assert _run(["diagnose", str(tmp_path / "absent.yaml")]) == EXIT_CONFIG
    assert (env_output / ERROR_FILE_NAME).is_file()


def test_data_error(
    config_file_factory: ConfigFileFactory, tmp_path: pathlib.Path, output_dir: pathlib.Path
) -> None:
    """Test a CSV lacking its schedule columns exits with the data status."""
    csv_path = tmp_path / "plant.csv"
    pd.DataFrame(
        {"timestamp": pd.date_range("2023-01-01", periods=96 * 4, freq="15min"), "load": 1.0}
    ).to_csv(csv_path, index=False)
    config = config_file_factory(
        {"seed": 1, "data": {"csv": "plant.csv", "layout": {"group_columns": ["a", "b", "c"]}}}
    )

    assert _run(["ingest", str(config), "--output-dir", str(output_dir)]) == EXIT_DATA
    assert _error_record(output_dir)["error"] == "IngestError"


def test_evaluate_without_forecasts(synth_config_file: pathlib.Path, output_dir: pathlib.Path) -> None:
    """Test evaluating before forecasting exits with the artifact status."""
    status = _run(["evaluate", str(synth_config_file), "--output-dir", str(output_dir), "--model", "arx"])

    assert status == EXIT_ARTIFACT
    assert _error_record(output_dir)["error"] == "ModelFileError"


def test_undecodable_csv_is_a_data_error(
    config_file_factory: ConfigFileFactory, tmp_path: pathlib.Path, output_dir: pathlib.Path
) -> None:
    """Test a CSV that is not valid UTF-8 exits with the data status and an error record."""
    (tmp_path / "plant.csv").write_bytes(b"\xff\xfe\x00timestamp,load\n\xff\xff,1\n")
    config = config_file_factory(
        {"seed": 1, "data": {"csv": "plant.csv", "layout": {"group_columns": ["a", "b", "c"]}}}
    )

    assert _run(["ingest", str(config), "--output-dir", str(output_dir)]) == EXIT_DATA
    record = _error_record(output_dir)
    assert record["error"] == "IngestError"
    assert "UTF-8" in record["message"]


def test_undecodable_config_is_a_config_error(tmp_path: pathlib.Path, output_dir: pathlib.Path) -> None:
    """Test a configuration file that is not valid UTF-8 exits with the configuration status."""
    config = tmp_path / "run.yaml"
    config.write_bytes(b"seed: \xff\xfe\n")

    assert _run(["ingest", str(config), "--output-dir", str(output_dir)]) == EXIT_CONFIG
    assert _error_record(output_dir)["error"] == "ConfigError"


def test_unexpected_exception_writes_error_record(
    synth_config_file: pathlib.Path, output_dir: pathlib.Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Test an exception outside the error hierarchy exits with the internal status and a record."""

    def fail(self: Pipeline) -> None:
        raise RuntimeError("disk vanished")

    monkeypatch.setattr(Pipeline, "ingest", fail)

    assert _run(["ingest", str(synth_config_file), "--output-dir", str(output_dir)]) == EXIT_INTERNAL
    record = _error_record(output_dir)
    assert record == {"error": "RuntimeError", "message": "disk vanished", "exit_code": EXIT_INTERNAL}
