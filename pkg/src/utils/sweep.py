"""Replicated runs over node counts and algorithms, and their aggregation into CSV rows."""

from __future__ import annotations

import concurrent.futures
import csv
import logging
import math
import os
import typing as t
import warnings

import attr
import numpy as np

from src.etc import const
from src.models.errors import NoDataError, SimulationError, SweepFailedError
from src.models.metrics import METRIC_NAMES, RunMetrics
from src.models.scenario import scenario
from src.models.simulation import RunResult, Simulation
from src.models.world import build_world

if t.TYPE_CHECKING:
    from src.models.config import SimConfig

logger = logging.getLogger(__name__)


@attr.frozen(weakref_slot=False)
class AggregateRow:
    """One line of the sweep CSV: a metric aggregated over the replications of one pair."""

    node_count: int
    algorithm: str
    metric: str
    mean: float
    stdev: float
    replications: int
    seed_base: int

    @property
    def display_content(self) -> list[str]:
        return [
            str(self.node_count),
            self.algorithm,
            self.metric,
            f"{self.mean:.6f}",
            f"{self.stdev:.6f}",
            str(self.replications),
            str(self.seed_base),
        ]


def run_replicate(config: SimConfig, node_count: int, algorithm: str, seed: int) -> RunResult:
    """Build the world of one seed, inject the configured scenario and run one algorithm over it.

    Raises
    ------
    SweepFailedError
        The run aborted. Carries the seed, node count and algorithm.
    """
    try:
        world = build_world(config, node_count, seed)
        faults = scenario(config.scenario, world, seed)
        return Simulation(world, algorithm, faults).run()
    except SimulationError as e:
        raise SweepFailedError(seed, node_count, algorithm, e) from e


def _run_metrics(job: tuple[SimConfig, int, str, int]) -> RunMetrics:
    # Top-level so worker processes can unpickle it
    return run_replicate(*job).metrics


def run_pair(config: SimConfig, node_count: int, algorithm: str) -> list[RunMetrics]:
    """Run every replication of one (node count, algorithm) pair, in replicate order."""
    jobs = [(config, node_count, algorithm, config.seed + i) for i in range(config.replications)]
    logger.info(f"Running {len(jobs)} replications of {algorithm} with {node_count} nodes")

    if config.workers <= 1:
        return [_run_metrics(job) for job in jobs]

    with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as executor:
        return list(executor.map(_run_metrics, jobs))


def aggregate(
    runs: t.Sequence[RunMetrics], *, node_count: int, algorithm: str, seed_base: int
) -> list[AggregateRow]:
    """Fold the metrics of a pair's replications into one row per metric.

    Every metric in `METRIC_NAMES` gets a row, followed by one row per message kind
    seen in any replication. Runs that never sent a kind count it as zero. NaN values,
    such as an undetected fault, are left out of the mean. A metric that is NaN in
    every run aggregates to NaN.

    Raises
    ------
    NoDataError
        `runs` is empty.
    """
    if not runs:
        raise NoDataError(f"No runs to aggregate for {algorithm} with {node_count} nodes.")

    kinds = sorted({kind for run in runs for kind in run.messages_by_kind})
    names = [*METRIC_NAMES, *(f"messages_{kind}" for kind in kinds)]
    per_run = [run.values() for run in runs]

    rows: list[AggregateRow] = []
    for name in names:
        values = np.array([values.get(name, 0.0) for values in per_run], dtype=float)
        if np.isnan(values).all():
            mean = stdev = math.nan
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", category=RuntimeWarning)
                mean = float(np.nanmean(values))
                stdev = float(np.nanstd(values, ddof=0))
        rows.append(
            AggregateRow(
                node_count=node_count,
                algorithm=algorithm,
                metric=name,
                mean=mean,
                stdev=stdev,
                replications=len(runs),
                seed_base=seed_base,
            )
        )
    return rows


def run_sweep(config: SimConfig) -> list[AggregateRow]:
    """Run the configured scenario for every node count and algorithm and aggregate the results.

    Raises
    ------
    SweepFailedError
        A replication aborted. The sweep stops at the first failure.
    """
    rows: list[AggregateRow] = []
    for node_count in config.node_counts:
        for algorithm in config.algorithms:
            runs = run_pair(config, node_count, algorithm)
            rows.extend(aggregate(runs, node_count=node_count, algorithm=algorithm, seed_base=config.seed))
    logger.info(f"Sweep finished with {len(rows)} aggregate rows")
    return rows


def write_csv(rows: t.Iterable[AggregateRow], out_file: t.TextIO) -> None:
    writer = csv.writer(out_file, lineterminator="\n")
    writer.writerow(const.SWEEP_HEADER.split(","))
    writer.writerows(row.display_content for row in rows)


def emit_csv(rows: t.Sequence[AggregateRow], path: str | os.PathLike[str]) -> None:
    """Write aggregate rows to a CSV file with a fixed header and column order.

    Raises
    ------
    NoDataError
        `rows` is empty. No file is created.
    OSError
        The file could not be written.
    """
    if not rows:
        raise NoDataError("Refusing to write an empty sweep result.")

    with open(path, "w", newline="") as out_file:
        write_csv(rows, out_file)
    logger.info(f"Wrote {len(rows)} rows to {os.fspath(path)}")


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
