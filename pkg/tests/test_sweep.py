import io
import math

import pytest

from src import __main__ as cli
from src.etc import const
from src.models.config import SimConfig
from src.models.errors import NoCandidateError, NoDataError, SweepFailedError
from src.models.metrics import METRIC_NAMES, RunMetrics
from src.utils.sweep import AggregateRow, aggregate, emit_csv, run_pair, run_sweep, write_csv

SWEEP_NODE_COUNTS = (40, 50, 60, 70, 80)


def make_run(seed: int, **fields) -> RunMetrics:
    return RunMetrics(algorithm="cellular", node_count=40, seed=seed, **fields)


def by_metric(rows: list[AggregateRow]) -> dict[str, AggregateRow]:
    return {row.metric: row for row in rows}


def test_aggregate_mean_and_population_stdev():
    runs = [
        make_run(0, recovery_energy=1.0, messages_by_kind={"get": 4}),
        make_run(1, recovery_energy=3.0, messages_by_kind={"get": 6, "update": 2}),
    ]

    rows = aggregate(runs, node_count=40, algorithm="cellular", seed_base=0)
    metrics = by_metric(rows)

    assert [row.metric for row in rows[: len(METRIC_NAMES)]] == list(METRIC_NAMES)
    assert metrics["recovery_energy"].mean == 2.0
    assert metrics["recovery_energy"].stdev == 1.0
    assert metrics["messages_get"].mean == 5.0
    # The first run never sent an update
    assert metrics["messages_update"].mean == 1.0
    assert all(row.replications == 2 for row in rows)


def test_aggregate_skips_undetected_runs():
    runs = [make_run(0, detection_latency=4.0), make_run(1), make_run(2, detection_latency=8.0)]
    metrics = by_metric(aggregate(runs, node_count=40, algorithm="cellular", seed_base=0))

    assert metrics["detection_latency"].mean == 6.0
    assert metrics["detection_latency"].stdev == 2.0


def test_aggregate_all_nan():
    metrics = by_metric(aggregate([make_run(0), make_run(1)], node_count=40, algorithm="cellular", seed_base=0))

    assert math.isnan(metrics["detection_latency"].mean)
    assert math.isnan(metrics["detection_latency"].stdev)
    assert metrics["detection_latency"].display_content[3] == "nan"


def test_aggregate_nothing():
    with pytest.raises(NoDataError):
        aggregate([], node_count=40, algorithm="cellular", seed_base=0)


def test_csv_layout():
    row = AggregateRow(
        node_count=40, algorithm="lbc", metric="recovery_energy", mean=1.5, stdev=0.25, replications=3, seed_base=7
    )
    out = io.StringIO()
    write_csv([row], out)

    assert out.getvalue().splitlines() == [const.SWEEP_HEADER, "40,lbc,recovery_energy,1.500000,0.250000,3,7"]


def test_empty_result_writes_no_file(tmp_path):
    path = tmp_path / "empty.csv"
    with pytest.raises(NoDataError):
        emit_csv([], path)
    assert not path.exists()


def test_run_pair_is_in_replicate_order():
    config = SimConfig(node_counts=(30,), replications=3, seed=10, max_ticks=60)
    assert [run.seed for run in run_pair(config, 30, "cellular")] == [10, 11, 12]


def test_sweep_covers_every_pair():
    config = SimConfig(node_counts=(20, 30), algorithms=("cellular", "aso"), replications=1, max_ticks=60)
    rows = run_sweep(config)

    pairs = {(row.node_count, row.algorithm) for row in rows}
    assert pairs == {(20, "cellular"), (20, "aso"), (30, "cellular"), (30, "aso")}


def test_failed_replicate_names_its_seed(monkeypatch):
    config = SimConfig(node_counts=(20,), scenario="group-manager-sudden-death", seed=3, max_ticks=60)

    def no_world(*_):
        raise NoCandidateError("nothing to fail")

    monkeypatch.setattr("src.utils.sweep.scenario", no_world)
    with pytest.raises(SweepFailedError) as info:
        run_sweep(config)
    assert info.value.seed == 3
    assert info.value.algorithm == "cellular"


# Command line


def test_cli_writes_the_aggregate(tmp_path):
    out = tmp_path / "result.csv"
    trace = tmp_path / "trace.csv"
    argv = ["simulate", "--nodes", "20", "--replications", "2", "--max-ticks", "60", "--out", str(out)]

    assert cli.main([*argv, "--trace", str(trace)]) == cli.EXIT_OK

    lines = out.read_text().splitlines()
    assert lines[0] == const.SWEEP_HEADER
    assert lines[1].startswith("20,cellular,recovery_energy,")
    assert trace.exists()
    assert (tmp_path / "trace.roles.csv").exists()


def test_cli_takes_flags_without_the_command_name(tmp_path):
    out = tmp_path / "result.csv"

    assert cli.main(["--nodes", "20", "--replications", "1", "--max-ticks", "40", "--out", str(out)]) == cli.EXIT_OK
    assert out.read_text().splitlines()[0] == const.SWEEP_HEADER


def test_cli_prints_without_out(capsys):
    assert cli.main(["simulate", "--nodes", "20", "--replications", "1", "--max-ticks", "40"]) == cli.EXIT_OK
    assert capsys.readouterr().out.startswith(const.SWEEP_HEADER)


@pytest.mark.parametrize(
    "flags",
    [
        ["--algorithm", "dijkstra"],
        ["--area", "120by120"],
        ["--replications", "0"],
        ["--loss", "1.5"],
        ["--config", "/nonexistent/simulate.conf"],
    ],
)
def test_cli_rejects_invalid_options(flags):
    assert cli.main(["simulate", "--nodes", "20", *flags]) == cli.EXIT_INVALID


def test_cli_reports_failed_sweeps(monkeypatch, tmp_path):
    def failing_sweep(config):
        raise SweepFailedError(config.seed, 20, "cellular", RuntimeError("boom"))

    monkeypatch.setattr(cli, "run_sweep", failing_sweep)
    out = tmp_path / "result.csv"

    assert cli.main(["simulate", "--nodes", "20", "--out", str(out)]) == cli.EXIT_SWEEP_FAILED
    assert not out.exists()


def test_cli_reads_a_config_file(tmp_path):
    settings = tmp_path / "simulate.conf"
    settings.write_text("# small sweep\nnodes = 20\nreplications = 1\nmax_ticks = 40\n")
    out = tmp_path / "result.csv"

    assert cli.main(["simulate", "--config", str(settings), "--algorithm", "lbc", "--out", str(out)]) == cli.EXIT_OK
    assert out.read_text().splitlines()[1].startswith("20,lbc,")


def means(config: SimConfig) -> dict[tuple[int, str, str], float]:
    return {(row.node_count, row.algorithm, row.metric): row.mean for row in run_sweep(config)}


@pytest.mark.slow()
def test_cellular_recovers_cheaper_and_faster_than_the_tree_baseline():
    config = SimConfig(
        node_counts=SWEEP_NODE_COUNTS,
        algorithms=("cellular", "venkataraman"),
        scenario="cluster-head-failure",
        replications=30,
    )
    result = means(config)

    for n in SWEEP_NODE_COUNTS:
        for metric in ("recovery_energy", "recovery_latency"):
            assert result[(n, "cellular", metric)] < result[(n, "venkataraman", metric)], (n, metric)


@pytest.mark.slow()
def test_cellular_reclusters_cheaper_than_the_gateway_baselines():
    config = SimConfig(
        node_counts=SWEEP_NODE_COUNTS, algorithms=("cellular", "lbc", "aso"), scenario="re-clustering", replications=30
    )
    result = means(config)

    for n in SWEEP_NODE_COUNTS:
        cellular = result[(n, "cellular", "recovery_energy")]
        assert cellular < result[(n, "lbc", "recovery_energy")], n
        assert cellular < result[(n, "aso", "recovery_energy")], n


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
