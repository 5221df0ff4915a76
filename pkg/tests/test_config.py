import pytest

from src.models.config import ProactivePolicy, SimConfig, Timers, load_config_file, parse_area, parse_bool
from src.models.errors import InvalidArgumentError


def test_defaults():
    config = SimConfig()
    assert config.node_counts == (40, 50, 60, 70, 80)
    assert (config.area_width, config.area_height) == (120.0, 120.0)
    assert config.timers.in_cell_period < config.timers.out_cell_period
    assert config.thresholds.low == 0.2
    assert config.thresholds.high == 0.5


def test_from_options_converts_raw_strings():
    config = SimConfig.from_options(
        {
            "nodes": "40,60",
            "area": "90x30",
            "algorithm": "cellular, venkataraman",
            "in-cell-period": "5",
            "loss": "0.1",
            "broadcast_gets": "no",
            "proactive_policy": "merge",
            "low_threshold": "0.25",
        }
    )
    assert config.node_counts == (40, 60)
    assert (config.area_width, config.area_height) == (90.0, 30.0)
    assert config.algorithms == ("cellular", "venkataraman")
    assert config.timers.in_cell_period == 5
    assert config.loss_probability == 0.1
    assert config.broadcast_gets is False
    assert config.proactive_policy is ProactivePolicy.MERGE
    assert config.thresholds.low == 0.25


def test_from_options_keeps_base_values():
    base = SimConfig(seed=7, replications=3)
    config = SimConfig.from_options({"replications": 5}, base)
    assert config.seed == 7
    assert config.replications == 5


@pytest.mark.parametrize(
    "options",
    [
        {"no_such_option": "1"},
        {"nodes": "forty"},
        {"area": "120"},
        {"algorithm": "leach"},
        {"scenario": "meteor-strike"},
        {"loss": "1.5"},
        {"cell_side": "0"},
        {"in_cell_period": "40"},
        {"latency": "2", "query_timeout": "3"},
        {"low_threshold": "0.6"},
    ],
)
def test_from_options_rejects_invalid(options):
    with pytest.raises(InvalidArgumentError):
        SimConfig.from_options(options)


def test_timers_out_cell_must_exceed_in_cell():
    with pytest.raises(InvalidArgumentError):
        Timers(in_cell_period=30, out_cell_period=30)


def test_parse_helpers():
    assert parse_area("120X60") == (120.0, 60.0)
    assert parse_bool("ON") is True
    assert parse_bool("0") is False
    with pytest.raises(ValueError):
        parse_bool("maybe")


def test_load_config_file(tmp_path):
    path = tmp_path / "simulate.conf"
    path.write_text(
        "# sweep settings\n"
        "\n"
        "nodes = 40,50  # two sizes\n"
        "scenario = cluster-head-sudden-death\n"
        "out-cell-period = 40\n"
    )
    options = load_config_file(path)
    assert options == {"nodes": "40,50", "scenario": "cluster-head-sudden-death", "out_cell_period": "40"}

    config = SimConfig.from_options(options)
    assert config.node_counts == (40, 50)
    assert config.timers.out_cell_period == 40


@pytest.mark.parametrize("line", ["just some words\n", "colour = blue\n"])
def test_load_config_file_rejects_bad_lines(tmp_path, line):
    path = tmp_path / "bad.conf"
    path.write_text(f"seed = 1\n{line}")
    with pytest.raises(InvalidArgumentError, match=":2:"):
        load_config_file(path)


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
