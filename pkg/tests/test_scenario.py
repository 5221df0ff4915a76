import pytest

from src.etc import const
from src.models.config import SimConfig
from src.models.errors import InvalidArgumentError, NoCandidateError
from src.models.events import FaultKind, FaultSpec
from src.models.node import Role
from src.models.scenario import eligible_heads, scenario
from src.models.world import build_world
from tests.conftest import HEAD


@pytest.fixture(scope="module")
def world():
    return build_world(SimConfig(), 80, 6)


@pytest.mark.parametrize(
    ("name", "kind", "role"),
    [
        ("common-node-energy-exhaustion", FaultKind.ENERGY_DRAIN, Role.COMMON_NODE),
        ("cluster-head-failure", FaultKind.ENERGY_DRAIN, Role.CELL_MANAGER),
        ("cluster-head-sudden-death", FaultKind.SUDDEN_DEATH, Role.CELL_MANAGER),
        ("group-manager-sudden-death", FaultKind.SUDDEN_DEATH, Role.GROUP_MANAGER),
    ],
)
def test_scenario_targets(world, name, kind, role):
    (fault,) = scenario(name, world, 3)

    assert fault.kind is kind
    assert fault.at == world.config.max_ticks // 2
    assert world.nodes[fault.target].role is role
    if kind is FaultKind.ENERGY_DRAIN:
        assert fault.to_fraction == const.DRAIN_FRACTION
        assert world.config.thresholds.low > const.DRAIN_FRACTION


def test_every_named_scenario_is_known(world):
    for name in const.SCENARIOS:
        assert scenario(name, world, 1)


def test_targets_depend_only_on_the_seed(world):
    for name in const.SCENARIOS:
        assert scenario(name, world, 9) == scenario(name, world, 9)

    targets = {scenario("cluster-head-sudden-death", world, seed)[0].target for seed in range(20)}
    assert len(targets) > 1


def test_eligible_heads_have_a_backed_up_cell(world):
    heads = eligible_heads(world)

    assert heads == sorted(heads)
    for head in heads:
        node = world.nodes[head]
        cell = world.cell(node.cell_id)
        assert node.role is Role.CELL_MANAGER
        assert cell.secondary_id is not None
        assert len(world.active_members(cell.cell_id)) >= 3


def test_line_world_has_one_plain_head(line_world):
    assert eligible_heads(line_world) == [HEAD]
    assert scenario("cluster-head-failure", line_world, 0) == [
        FaultSpec.energy_drain(HEAD, line_world.config.max_ticks // 2, const.DRAIN_FRACTION)
    ]


def test_injection_tick_can_be_chosen(world):
    (fault,) = scenario("cluster-head-sudden-death", world, 3, at=17)

    assert fault.at == 17
    assert fault.target == scenario("cluster-head-sudden-death", world, 3)[0].target


@pytest.mark.parametrize("at", [-1, 400])
def test_injection_tick_outside_the_run(world, at):
    with pytest.raises(InvalidArgumentError):
        scenario("group-manager-sudden-death", world, 0, at=at)


def test_unknown_scenario(world):
    with pytest.raises(InvalidArgumentError):
        scenario("meteor-strike", world, 0)


def test_no_group_manager_to_fail():
    world = build_world(SimConfig(), 1, 0)
    for node in world.nodes.values():
        if node.role is Role.GROUP_MANAGER:
            node.role = Role.CELL_MANAGER

    with pytest.raises(NoCandidateError):
        scenario("group-manager-sudden-death", world, 0)


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
