# -*- coding: utf-8 -*-
#
# This file is part of the Plant Load Forecast project
#
# Distributed under the terms of the BSD 3-clause new license.
# See LICENSE for more info.

"""Module for the main plant load forecasting command line application."""
from __future__ import annotations

import argparse
import logging
import os
import pathlib
import sys
from signal import SIGINT, SIGTERM, getsignal, signal
from types import FrameType
from typing import Any, Dict, List, Optional, Sequence

import yaml
from ska_ser_logging import configure_logging

from .errors import EXIT_INTERNAL, EXIT_INTERRUPTED, LoadForecastError, TrainingInterrupted
from .pipeline import Pipeline
from .run_config import DEFAULT_OUTPUT_DIR, MODEL_KINDS, OUTPUT_ENV_VAR, RunConfig, load_run_config

__all__ = [
    "build_parser",
    "run",
    "main",
]

ERROR_FILE_NAME = "error.yaml"
SUBCOMMANDS: Dict[str, str] = {
    "synth": "generate a synthetic load CSV with regime labels",
    "ingest": "validate the data and export the sample pairs",
    "diagnose": "ACF, density and stationarity tests of the load process",
    "gmm": "fit the consumption state mixture and affiliate every day",
    "train": "train forecasting models",
    "forecast": "forecast the test days with trained models",
    "evaluate": "compare forecasts with metrics and Diebold-Mariano tests",
    "compare": "train, forecast and evaluate in one run",
}
MODEL_SUBCOMMANDS = ("train", "forecast", "evaluate", "compare")


def build_parser() -> argparse.ArgumentParser:
    """Get the argument parser of the application."""
    p = argparse.ArgumentParser(
        prog="plant_load_forecast",
        description="Short-term load forecasting of a production plant from its schedules.",
    )
    subparsers = p.add_subparsers(dest="command", required=True, metavar="subcommand")
    for name, help_text in SUBCOMMANDS.items():
        s = subparsers.add_parser(name, help=help_text)
        s.add_argument("config", type=pathlib.Path, help="YAML run configuration")
        s.add_argument(
            "--output-dir",
            type=pathlib.Path,
            default=None,
            help=f"directory for all artifacts, overrides {OUTPUT_ENV_VAR} and the config",
        )
        s.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a configuration value, e.g. --set lstm.epochs=50",
        )
        s.add_argument("-v", "--verbose", action="store_true")
        if name in MODEL_SUBCOMMANDS:
            s.add_argument(
                "--model",
                choices=list(MODEL_KINDS) + ["all"],
                default="all",
                help="model to work on, all for every model of evaluation.models",
            )
    return p


def _selected_models(choice: str, config: RunConfig) -> List[str]:
    return list(config.evaluation.models) if choice == "all" else [choice]


def _fallback_output_dir(args: argparse.Namespace) -> pathlib.Path:
    if args.output_dir is not None:
        return pathlib.Path(args.output_dir)
    env_output = os.environ.get(OUTPUT_ENV_VAR)
    return pathlib.Path(env_output) if env_output else DEFAULT_OUTPUT_DIR


def write_error_record(output_dir: pathlib.Path, record: Dict[str, Any]) -> Optional[pathlib.Path]:
    """Write the error record to the output directory and echo it to stderr."""
    text = yaml.safe_dump(record, sort_keys=False)
    sys.stderr.write(text)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        path = output_dir / ERROR_FILE_NAME
        with open(path, "w") as f:
            f.write(text)
        return path
    except OSError:
        return None


def _dispatch(pipeline: Pipeline, args: argparse.Namespace) -> None:
    models = _selected_models(getattr(args, "model", "all"), pipeline.config)
    if args.command == "synth":
        pipeline.synth()
    elif args.command == "ingest":
        pipeline.ingest()
    elif args.command == "diagnose":
        pipeline.diagnose()
    elif args.command == "gmm":
        pipeline.gmm()
    elif args.command == "train":
        pipeline.train(models)
    elif args.command == "forecast":
        pipeline.forecast(models)
    elif args.command == "evaluate":
        pipeline.evaluate(models)
    else:
        pipeline.compare(models)


def run(args: argparse.Namespace, arguments: Sequence[str] = ()) -> int:
    """
    Run one subcommand.

    :param args: the parsed command line
    :param arguments: the raw command line, recorded in the run manifest
    :return: the process exit status, 0 on success
    """
    logging_level = logging.DEBUG if args.verbose else logging.INFO
    configure_logging(level=logging_level)
    logger = logging.getLogger(__name__)

    output_dir = _fallback_output_dir(args)
    previous_handlers = {sig: getsignal(sig) for sig in (SIGINT, SIGTERM)}
    try:
        config = load_run_config(args.config, overrides=args.overrides, output_dir=args.output_dir)
        output_dir = config.output_dir
        pipeline = Pipeline(config, args.command, arguments, logger=logger)

        # stop model training cooperatively so no partial model files are written
        def signal_handler(signal: int, frame: FrameType | None) -> None:
            sys.stderr.write("interrupt requested, stopping after the current epoch\n")
            pipeline.interrupt_processing()

        signal(SIGINT, signal_handler)
        signal(SIGTERM, signal_handler)

        logger.info(f"running {args.command} with output directory {output_dir}")
        _dispatch(pipeline, args)
        pipeline.finish()
        return 0
    except LoadForecastError as exc:
        logger.error(f"{args.command} failed: {exc}")
        write_error_record(output_dir, exc.to_record())
        return exc.exit_code
    except KeyboardInterrupt:
        write_error_record(output_dir, TrainingInterrupted(f"{args.command} interrupted").to_record())
        return EXIT_INTERRUPTED
    except Exception as exc:
        logger.exception(f"{args.command} failed unexpectedly: {exc}")
        record = {"error": type(exc).__name__, "message": str(exc), "exit_code": EXIT_INTERNAL}
        write_error_record(output_dir, record)
        return EXIT_INTERNAL
    finally:
        for sig, handler in previous_handlers.items():
            signal(sig, handler)


def main(argv: Sequence[str] | None = None) -> None:
    """Parse command line arguments and run the subcommand."""
    arguments = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(arguments)
    sys.exit(run(args, arguments))


if __name__ == "__main__":
    main()
