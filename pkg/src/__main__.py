#!/usr/bin/python3

import argparse
import logging
import platform
import sys
import typing as t

from src.models.config import SimConfig, load_config_file
from src.models.errors import InvalidArgumentError, NoCandidateError, NoDataError, SweepFailedError
from src.utils.sweep import emit_csv, run_replicate, run_sweep, write_csv

LOG_FORMAT = "[%(asctime)s] [%(levelname)s] %(name)s: %(message)s"

EXIT_OK = 0
EXIT_SWEEP_FAILED = 1
EXIT_INVALID = 2

COMMAND = "simulate"


def build_parser() -> argparse.ArgumentParser:
    sim = argparse.ArgumentParser(
        prog=COMMAND, description="Run a replicated sweep of the cell-based WSN fault management simulator."
    )
    sim.add_argument("--config", help="Flat 'key = value' file, flags override it.")
    sim.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    sim.add_argument("--nodes", help="Node count, or a comma separated list to sweep.")
    sim.add_argument("--area", help="WIDTHxHEIGHT in meters, e.g. 120x120.")
    sim.add_argument("--cell-side", type=float)
    sim.add_argument("--group-dim", type=int)
    sim.add_argument("--initial-energy", type=float)
    sim.add_argument("--algorithm", help="cellular, venkataraman, lbc or aso. Comma separated to compare.")
    sim.add_argument("--scenario")
    sim.add_argument("--replications", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", help="Path of the aggregate CSV.")
    sim.add_argument("--trace", help="Write the trace of the first run here, and its role log next to it.")

    sim.add_argument("--loss", type=float, help="Probability that a single copy of a message is lost.")
    sim.add_argument("--latency", type=int, help="Ticks per hop.")
    sim.add_argument("--max-ticks", type=int)
    sim.add_argument("--in-cell-period", type=int)
    sim.add_argument("--out-cell-period", type=int)
    sim.add_argument("--query-timeout", type=int)
    sim.add_argument("--radio-range", type=float)
    sim.add_argument("--min-cell-density", type=int)
    sim.add_argument("--sleeping-fraction", type=float)
    sim.add_argument("--proactive-policy", choices=["rate", "merge"])
    sim.add_argument("--idle-drain", type=float)
    sim.add_argument("--workers", type=int)
    sim.add_argument("--flood", action="store_true", default=None)
    gets = sim.add_mutually_exclusive_group()
    gets.add_argument("--broadcast-gets", dest="broadcast_gets", action="store_true", default=None)
    gets.add_argument("--unicast-gets", dest="broadcast_gets", action="store_false")
    return sim


def collect_options(args: argparse.Namespace) -> dict[str, t.Any]:
    """Config options given on the command line, by option name."""
    skipped = {"config", "log_level"}
    options: dict[str, t.Any] = {}
    for dest, value in vars(args).items():
        if dest in skipped or value is None:
            continue
        options[dest] = value
    return options


def load_settings(args: argparse.Namespace) -> SimConfig:
    """Merge defaults, the config file and the flags, in that order of precedence.

    Raises
    ------
    InvalidArgumentError
        An option is unknown or invalid.
    """
    config = SimConfig()
    if args.config:
        config = SimConfig.from_options(load_config_file(args.config), config)
    return SimConfig.from_options(collect_options(args), config)


def simulate(config: SimConfig) -> int:
    rows = run_sweep(config)

    if config.out:
        emit_csv(rows, config.out)
    else:
        write_csv(rows, sys.stdout)

    if config.trace:
        result = run_replicate(config, config.node_counts[0], config.algorithms[0], config.seed)
        result.journal.write(config.trace)
        logging.getLogger(__name__).info(f"Wrote trace of seed {config.seed} to {config.trace}")
    return EXIT_OK


def main(argv: t.Sequence[str] | None = None) -> int:
    if int(platform.python_version_tuple()[1]) < 11:
        logging.fatal("Python version must be 3.11 or greater! Exiting...")
        return EXIT_INVALID

    arguments = list(sys.argv[1:] if argv is None else argv)
    # `python -m src simulate ...` names the command explicitly
    if arguments[:1] == [COMMAND]:
        arguments = arguments[1:]

    args = build_parser().parse_args(arguments)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)

    try:
        config = load_settings(args)
    except (InvalidArgumentError, OSError) as e:
        logging.fatal(f"Invalid configuration: {e}")
        return EXIT_INVALID

    try:
        return simulate(config)
    except SweepFailedError as e:
        logging.fatal(f"Sweep failed at seed {e.seed} ({e.algorithm}, {e.node_count} nodes): {e.cause}")
        return EXIT_SWEEP_FAILED
    except (NoCandidateError, NoDataError) as e:
        logging.fatal(f"Sweep produced no result: {e}")
        return EXIT_SWEEP_FAILED
    except OSError as e:
        logging.fatal(f"Failed writing results: {e}")
        return EXIT_SWEEP_FAILED


if __name__ == "__main__":
    sys.exit(main())

# Copyright (C) 2022-present hypergonial

# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.

# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.

# You should have received a copy of the GNU General Public License
# along with this program.  If not, see: https://www.gnu.org/licenses
