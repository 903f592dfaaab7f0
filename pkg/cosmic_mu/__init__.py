#!/usr/bin/env python3
"""
Cosmic measurement field simulator.

:copyright: (c) 2025-2026 by the cosmic-mu developers.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from cosmic_mu.config import ConfigError, OutputFormat, ScenarioConfig, load_config
from cosmic_mu.const import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE
from cosmic_mu.export import write_results
from cosmic_mu.runner import run_scenario

logging.getLogger(__name__).addHandler(logging.NullHandler())

if getattr(sys, "frozen", False) and hasattr(sys, "_MEIPASS"):
    _MANIFEST = str(Path(sys._MEIPASS) / "simulator.json")
else:
    _MANIFEST = str(Path(__file__).parent.parent.absolute() / "simulator.json")

try:
    with open(_MANIFEST, "r", encoding="utf-8") as f:
        manifest = json.load(f)
        __version__ = manifest.get("version", "0.0.0")
except (FileNotFoundError, json.JSONDecodeError, KeyError):
    __version__ = "0.0.0"

_LOG = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cosmic-mu", description="Run a cosmic measurement field scenario.")
    parser.add_argument("--config", required=True, type=Path, help="JSON scenario document")
    parser.add_argument("--seed", type=int, help="master seed (overrides the document)")
    parser.add_argument("--trials", type=int, help="number of trials (overrides the document)")
    parser.add_argument("--out", type=Path, help="output directory (overrides the document)")
    parser.add_argument("--format", choices=[f.value for f in OutputFormat], help="table format")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


async def execute(config: ScenarioConfig) -> list[Path]:
    _LOG.info("=" * 70)
    _LOG.info("cosmic-mu v%s: scenario %s", __version__, config.scenario)
    _LOG.info("=" * 70)
    output = await run_scenario(config, __version__)
    return write_results(output, config.output.path, config.output.format)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code == 0 else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s | %(name)-40s | %(levelname)-8s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    try:
        config = load_config(args.config).with_overrides(
            seed=args.seed, trials=args.trials, out=args.out, format=args.format
        )
    except ConfigError as err:
        _LOG.error("Invalid configuration: %s", err)
        return EXIT_USAGE

    try:
        asyncio.run(execute(config))
    except (ValueError, RuntimeError, ArithmeticError) as err:
        _LOG.error("Scenario %s failed: %s", config.scenario, err)
        return EXIT_RUNTIME
    return EXIT_OK


def run() -> None:
    try:
        code = main()
    except KeyboardInterrupt:
        _LOG.info("Run stopped by user")
        code = EXIT_RUNTIME
    except Exception as err:
        _LOG.error("Fatal error: %s", err, exc_info=True)
        raise
    sys.exit(code)


__all__ = ["__version__", "execute", "main", "run"]

if __name__ == "__main__":
    run()
