import math

import attr
import pytest

from src.models.config import SimConfig
from src.models.errors import IllegalStateError, InvalidArgumentError, InvariantViolationError
from src.models.events import FaultSpec, RoleSelector
from src.models.journal import TraceEvent
from src.models.messaging import Purpose
from src.models.node import NodeStatus, Role
from src.models.scenario import scenario
from src.models.simulation import Simulation, run
from src.models.world import build_world, place_world
from tests.conftest import BACKUP, GROUP_MANAGER, HEAD, LINE_ENERGIES, LINE_PLACEMENT, SECONDARY


def run_scenario(config: SimConfig, seed: int, algorithm: str = "cellular"):
    world = build_world(config, config.node_counts[0], seed)
    return Simulation(world, algorithm, scenario(config.scenario, world, seed)).run()


def test_runs_are_reproducible(small_config):
    first = run_scenario(small_config, 4)
    second = run_scenario(small_config, 4)

    assert first.journal.trace_csv() == second.journal.trace_csv()
    assert first.journal.roles_csv() == second.journal.roles_csv()
    assert first.metrics.messages_by_kind == second.metrics.messages_by_kind
    assert first.metrics.energy_total == second.metrics.energy_total


def test_seeds_change_the_run(small_config):
    assert run_scenario(small_config, 4).journal.trace_csv() != run_scenario(small_config, 5).journal.trace_csv()


@pytest.mark.parametrize("algorithm", ["cellular", "venkataraman", "lbc", "aso"])
def test_energy_is_conserved(small_config, algorithm):
    world = build_world(small_config, 40, 8)
    sim = Simulation(world, algorithm, scenario(small_config.scenario, world, 8))
    result = sim.run()

    spent = []
    for node_id in world.sensor_ids:
        node = world.nodes[node_id]
        assert node.battery.initial - node.battery.residual == pytest.approx(math.fsum(sim.charges(node_id)))
        spent.append(node.battery.initial - node.battery.residual)
    assert result.metrics.energy_total == pytest.approx(math.fsum(spent))
    assert sim.charges(0) == []


def test_lossless_runs_lose_nothing(small_config):
    result = run_scenario(small_config, 2)
    assert all(entry.event is not TraceEvent.DROP_LOST for entry in result.journal.trace)


def test_total_loss_delivers_nothing():
    config = SimConfig(node_counts=(30,), loss_probability=1.0, max_ticks=80)
    result = run_scenario(config, 1)

    events = {entry.event for entry in result.journal.trace}
    assert TraceEvent.DELIVER not in events
    assert TraceEvent.DROP_LOST in events
    assert result.metrics.messages_total > 0


def test_drain_to_full_battery_changes_nothing(line_world):
    sim = Simulation(line_world, "cellular")
    sim.inject(FaultSpec.energy_drain(HEAD, 0, 1.0))

    assert sim.charges(HEAD) == []
    assert line_world.nodes[HEAD].battery.residual == LINE_ENERGIES[HEAD]
    assert line_world.nodes[HEAD].role is Role.CELL_MANAGER


def test_faults_on_dead_targets_are_skipped(line_world):
    sim = Simulation(line_world, "cellular")
    sim.scheduler.start()
    sim.inject(FaultSpec.sudden_death(HEAD, 0))
    sim.inject(FaultSpec.energy_drain(HEAD, 0, 0.1))

    assert line_world.nodes[HEAD].status is NodeStatus.DEAD
    assert sim.metrics.faults_by_class == {"node/permanent": 1}


def test_role_selector_picks_lowest_live_holder(line_world):
    sim = Simulation(line_world, "cellular")
    sim.scheduler.start()
    sim.inject(FaultSpec.sudden_death(RoleSelector.CELL_MANAGER, 0))

    assert line_world.nodes[HEAD].status is NodeStatus.DEAD


def test_new_manager_fences_the_old_one(line_world):
    sim = Simulation(line_world, "cellular")
    sim.scheduler.start()
    sim.change_role(SECONDARY, Role.CELL_MANAGER, "elected")

    assert line_world.nodes[HEAD].role is Role.COMMON_NODE
    assert line_world.cell((0, 0)).manager_id == SECONDARY
    assert line_world.cell((0, 0)).secondary_id is None
    causes = [(entry.node, entry.cause) for entry in sim.journal.roles]
    assert causes == [(HEAD, "fenced"), (SECONDARY, "elected")]


def test_two_cell_managers_abort_the_run(line_world):
    line_world.nodes[3].role = Role.CELL_MANAGER

    with pytest.raises(InvariantViolationError) as info:
        Simulation(line_world, "cellular").run()
    assert info.value.tick == 0
    assert info.value.diagnostic == f"cell (0, 0) has managers {[HEAD, 3]}"


def test_two_group_managers_are_caught(line_world):
    line_world.nodes[BACKUP].role = Role.GROUP_MANAGER
    sim = Simulation(line_world, "cellular")
    sim.scheduler.start()

    with pytest.raises(InvariantViolationError) as info:
        sim.check_roles()
    assert info.value.diagnostic == f"group 0 has managers {[GROUP_MANAGER, BACKUP]}"


def test_roles_are_checked_after_every_event(line_world, monkeypatch):
    def corrupt(self, fault):
        self.world.nodes[3].role = Role.CELL_MANAGER

    monkeypatch.setattr(Simulation, "inject", corrupt)
    sim = Simulation(line_world, "cellular", [FaultSpec.sudden_death(3, 5)])

    with pytest.raises(InvariantViolationError) as info:
        sim.run()
    assert info.value.tick == 5


def test_run_only_once(line_world):
    sim = Simulation(line_world, "cellular")
    sim.run()
    with pytest.raises(IllegalStateError):
        sim.run()


def test_unknown_algorithm(line_world):
    with pytest.raises(InvalidArgumentError):
        Simulation(line_world, "no_such_algorithm")


def test_quiet_network_settles_early(line_world):
    result = run(line_world)
    settle_after = line_world.config.quiescence_periods * line_world.config.timers.out_cell_period
    assert settle_after <= result.metrics.ticks < settle_after + line_world.config.timers.out_cell_period
    assert result.metrics.recovery_energy == 0.0
    assert math.isnan(result.metrics.detection_latency)


def test_unicast_gets_cost_one_message_per_member(line_config):
    broadcast = run(place_world(line_config, LINE_PLACEMENT, energies=LINE_ENERGIES))
    unicast_config = attr.evolve(line_config, broadcast_gets=False)
    unicast = run(place_world(unicast_config, LINE_PLACEMENT, energies=LINE_ENERGIES))

    assert unicast.metrics.messages_by_kind["get"] > broadcast.metrics.messages_by_kind["get"]


def test_flooding_forwards_scoped_broadcasts(line_config):
    config = attr.evolve(line_config, flood=True)
    result = run(place_world(config, LINE_PLACEMENT, energies=LINE_ENERGIES))

    forwards = [e for e in result.journal.trace if e.event is TraceEvent.FORWARD]
    assert forwards
    assert all(e.purpose is Purpose.MAINTENANCE for e in forwards)


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
