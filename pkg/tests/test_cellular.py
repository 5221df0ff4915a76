import numpy as np
import pytest

from src.models.actions import ChangeRole, Escalate, RetireCell, Send
from src.models.config import SimConfig
from src.models.energy import EnergyRank
from src.models.events import FaultSpec
from src.models.messaging import (
    DeclareFaulty,
    ElectionLevel,
    EnergyShare,
    MergeDirective,
    MergeRequest,
    NewManagerAnnounce,
    Purpose,
    make_envelope,
)
from src.models.node import ElectionState, NodeStatus, Role
from src.models.scenario import scenario
from src.models.simulation import Simulation
from src.models.world import build_world
from tests.conftest import BACKUP, GROUP_MANAGER, HEAD, SECONDARY

FAULT_AT = 50
FAULT_TICK_STREAM = 99


def role_changes(result) -> list[tuple[int, int, Role, Role, str]]:
    return [(e.tick, e.node, e.old_role, e.new_role, e.cause) for e in result.journal.roles]


def test_cluster_head_failure_hands_over_with_one_message(line_world):
    result = Simulation(line_world, "cellular", [FaultSpec.energy_drain(HEAD, FAULT_AT, 0.19)]).run()

    recovery = result.journal.transmissions(purpose=Purpose.RECOVERY)
    assert [e.kind for e in recovery] == ["low_energy_notice"]
    assert recovery[0].tick == FAULT_AT
    assert result.metrics.recovery_rounds == 1
    assert result.metrics.recovery_latency == line_world.config.latency
    assert result.metrics.detection_latency == 0.0

    changes = role_changes(result)
    assert (FAULT_AT, HEAD, Role.CELL_MANAGER, Role.COMMON_NODE, "low-energy") in changes
    assert (FAULT_AT + 1, SECONDARY, Role.SECONDARY_CELL_MANAGER, Role.CELL_MANAGER, "promoted") in changes
    assert line_world.cell((0, 0)).manager_id == SECONDARY
    assert line_world.nodes[HEAD].status is NodeStatus.ACTIVE


def test_common_node_goes_to_sleep_with_one_notice(line_world):
    result = Simulation(line_world, "cellular", [FaultSpec.energy_drain(4, FAULT_AT, 0.19)]).run()

    assert result.metrics.messages_by_kind["sleep_notice"] == 1
    assert result.journal.transmissions(purpose=Purpose.RECOVERY) == []
    assert result.metrics.detection_latency == 0.0
    assert line_world.nodes[4].status is NodeStatus.SLEEPING
    assert line_world.cell((0, 0)).manager_id == HEAD


def test_cluster_head_sudden_death_is_declared_by_the_group_manager(line_world):
    result = Simulation(line_world, "cellular", [FaultSpec.sudden_death(HEAD, FAULT_AT)]).run()
    timers = line_world.config.timers

    # Reminder after the first missed report, declaration after the second
    declared_at = 3 * timers.out_cell_period + line_world.config.latency
    assert result.metrics.detection_latency == declared_at - FAULT_AT
    assert result.metrics.messages_by_kind["reminder"] == 1

    recovery = result.journal.transmissions(purpose=Purpose.RECOVERY)
    assert [(e.kind, e.sender) for e in recovery] == [("declare_faulty", GROUP_MANAGER)]
    assert line_world.cell((0, 0)).manager_id == SECONDARY


def test_group_manager_sudden_death_activates_the_backup(line_world):
    result = Simulation(line_world, "cellular", [FaultSpec.sudden_death(GROUP_MANAGER, FAULT_AT)]).run()
    config = line_world.config

    # Last report reached the base station at O + 2L, queried once silent for longer than O
    queried_at = config.timers.out_cell_period + 2 * config.latency + config.timers.out_cell_period + 1
    assert result.metrics.detection_latency == queried_at + config.timers.query_timeout - FAULT_AT

    kinds = {e.kind for e in result.journal.transmissions(purpose=Purpose.RECOVERY)}
    assert {"declare_faulty", "backup_activate", "new_manager_announce"} <= kinds
    assert line_world.nodes[BACKUP].role is Role.GROUP_MANAGER
    assert line_world.groups[0].group_manager_id == BACKUP
    assert line_world.cell((1, 0)).manager_id == 8


# Elections and merging, driven directly through the state machine


@pytest.fixture()
def cellular(line_world):
    sim = Simulation(line_world, "cellular")
    sim.scheduler.start()
    return sim.algorithm


def test_cell_election_picks_richest_high_node(cellular, line_world):
    shares = {3: (1500.0, EnergyRank.HIGH), 4: (1700.0, EnergyRank.HIGH), 5: (300.0, EnergyRank.LOW)}

    winner = line_world.nodes[4]
    winner.election = ElectionState(level=ElectionLevel.CELL, started=0, shares=dict(shares))
    actions = cellular.settle_election(winner)
    assert actions[0] == ChangeRole(4, Role.CELL_MANAGER, "elected")
    assert isinstance(actions[1], Send)
    assert actions[1].payload == NewManagerAnnounce(manager=4, level=ElectionLevel.CELL)
    assert GROUP_MANAGER in actions[1].receivers

    loser = line_world.nodes[3]
    loser.election = ElectionState(level=ElectionLevel.CELL, started=0, shares=dict(shares))
    assert cellular.settle_election(loser) == []
    assert loser.peers.manager_id == 4
    assert loser.settled_at == 0


def test_cell_election_without_high_node_requests_a_merge(cellular, line_world):
    shares = {3: (700.0, EnergyRank.MEDIUM), 5: (300.0, EnergyRank.LOW)}

    acting = line_world.nodes[3]
    acting.election = ElectionState(level=ElectionLevel.CELL, started=0, shares=dict(shares))
    actions = cellular.settle_election(acting)
    assert len(actions) == 1
    assert actions[0].payload == MergeRequest()
    assert actions[0].receivers == (GROUP_MANAGER,)

    other = line_world.nodes[5]
    other.election = ElectionState(level=ElectionLevel.CELL, started=0, shares=dict(shares))
    assert cellular.settle_election(other) == []


def test_cell_election_without_group_manager_escalates(cellular, line_world):
    acting = line_world.nodes[3]
    acting.peers.group_manager_id = None
    acting.election = ElectionState(level=ElectionLevel.CELL, started=0, shares={3: (300.0, EnergyRank.LOW)})

    assert cellular.settle_election(acting) == [Escalate((3,), "no group manager to merge into")]


def test_stale_energy_shares_are_ignored(cellular, line_world):
    node = line_world.nodes[3]
    node.settled_at = 10
    stale = make_envelope(line_world.nodes[4], EnergyShare(rank=EnergyRank.HIGH), now=5)

    assert cellular.on_message(node, stale) == []
    assert node.election is None


def test_energy_share_pulls_node_into_the_election(cellular, line_world):
    node = line_world.nodes[3]
    share = make_envelope(line_world.nodes[4], EnergyShare(rank=EnergyRank.HIGH), now=0)

    actions = cellular.on_message(node, share)

    assert node.election is not None
    assert set(node.election.shares) == {3, 4}
    assert isinstance(actions[0].payload, EnergyShare)


def test_merge_moves_members_into_the_nearest_healthy_cell(cellular, line_world):
    manager = line_world.nodes[GROUP_MANAGER]
    cellular._init_ledger(manager)
    cellular._init_group_ledger(manager)

    actions = cellular.merge_cells(manager, (0, 0), Purpose.RECOVERY)

    directives = [a for a in actions if isinstance(a, Send)]
    assert sorted(a.receivers[0] for a in directives) == [1, 2, 3, 4, 5, 6]
    assert {a.payload for a in directives} == {MergeDirective(target_cell=(1, 0), manager=GROUP_MANAGER)}
    assert actions[-1] == RetireCell((0, 0), "merged")
    assert (0, 0) not in manager.group_ledger.cells


def test_merge_without_target_escalates(cellular, line_world):
    manager = line_world.nodes[GROUP_MANAGER]
    cellular._init_group_ledger(manager)
    for state in manager.group_ledger.cells.values():
        state.declared = True

    actions = cellular.merge_cells(manager, (0, 0), Purpose.PROACTIVE)

    assert actions == [RetireCell((0, 0), "merged"), Escalate((1, 2, 3, 4, 5, 6), "no cell of group 0 can take them")]


def test_declared_member_rejoins_its_manager(cellular, line_world):
    member = line_world.nodes[3]
    member.peers.manager_id = HEAD
    declare = make_envelope(line_world.nodes[HEAD], DeclareFaulty(subject=3), now=0)

    actions = cellular.on_message(member, declare)

    assert len(actions) == 1
    assert actions[0].receivers == (HEAD,)
    assert actions[0].payload.kind == "update"


# Bounds over random deployments


@pytest.fixture(scope="module")
def random_config() -> SimConfig:
    return SimConfig(node_counts=(60,), max_ticks=320)


def run_random(config: SimConfig, name: str, seed: int, *, at: int | None = None):
    world = build_world(config, 60, seed)
    return Simulation(world, "cellular", scenario(name, world, seed, at=at)).run()


def random_tick(config: SimConfig, seed: int) -> int:
    """A seeded injection tick that leaves room for two out-cell rounds before the run ends."""
    rng = np.random.default_rng((seed, FAULT_TICK_STREAM))
    return int(rng.integers(2 * config.timers.out_cell_period, config.max_ticks - 3 * config.timers.out_cell_period))


def run_common_node_death(config: SimConfig, seed: int):
    """Kill a seeded common node at a seeded tick.

    Returns the result, the fault tick and the tick of the first update round its manager
    starts at or after the fault.
    """
    world = build_world(config, 60, seed)
    rng = np.random.default_rng((seed, FAULT_TICK_STREAM))
    commons = world.role_holders(Role.COMMON_NODE)
    target = commons[int(rng.integers(len(commons)))]
    manager = world.cell_of(target).manager_id
    at = random_tick(config, seed)

    result = Simulation(world, "cellular", [FaultSpec.sudden_death(target, at)]).run()
    next_round = min(e.tick for e in result.journal.transmissions(kind="get") if e.sender == manager and e.tick >= at)
    return result, at, next_round


@pytest.mark.parametrize("seed", range(12))
def test_cluster_head_failure_needs_one_recovery_message(random_config, seed):
    result = run_random(random_config, "cluster-head-failure", seed)
    assert len(result.journal.transmissions(purpose=Purpose.RECOVERY)) == 1
    assert result.metrics.detection_latency == 0.0


@pytest.mark.parametrize("seed", range(12))
def test_common_node_exhaustion_sends_one_sleep_notice(random_config, seed):
    result = run_random(random_config, "common-node-energy-exhaustion", seed)
    assert result.metrics.messages_by_kind.get("sleep_notice") == 1
    assert result.metrics.recovery_energy == 0.0


@pytest.mark.parametrize("seed", range(12))
def test_cluster_head_death_detection_bound(random_config, seed):
    result = run_random(random_config, "cluster-head-sudden-death", seed)
    timers, latency = random_config.timers, random_config.latency
    assert timers.out_cell_period + latency <= result.metrics.detection_latency <= 2 * timers.out_cell_period + latency


@pytest.mark.parametrize("seed", range(12))
def test_group_manager_death_detection_bound(random_config, seed):
    result = run_random(random_config, "group-manager-sudden-death", seed)
    timers, latency = random_config.timers, random_config.latency
    assert 0 < result.metrics.detection_latency <= timers.out_cell_period + timers.query_timeout + latency


@pytest.mark.parametrize("seed", range(12))
def test_common_node_death_detection_bound(random_config, seed):
    result, at, next_round = run_common_node_death(random_config, seed)
    timers = random_config.timers

    assert at + result.metrics.detection_latency <= next_round + timers.in_cell_period + timers.query_timeout


@pytest.mark.slow()
def test_common_node_detection_bound_holds_for_a_hundred_seeds(random_config):
    timers = random_config.timers
    for seed in range(100):
        result, at, next_round = run_common_node_death(random_config, seed)
        assert at + result.metrics.detection_latency <= next_round + timers.in_cell_period + timers.query_timeout, (
            f"seed {seed}"
        )


@pytest.mark.slow()
@pytest.mark.parametrize("name", ["cluster-head-sudden-death", "group-manager-sudden-death"])
def test_detection_bounds_hold_for_a_hundred_seeds(random_config, name):
    timers, latency = random_config.timers, random_config.latency
    bound = 2 * timers.out_cell_period + latency
    for seed in range(100):
        result = run_random(random_config, name, seed, at=random_tick(random_config, seed))
        assert 0 < result.metrics.detection_latency <= bound, f"seed {seed}"


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
