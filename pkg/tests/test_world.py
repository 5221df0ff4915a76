from src.etc import const
from src.models.config import SimConfig
from src.models.node import CELL_MANAGING_ROLES, NodeStatus, Role
from src.models.world import build_world, deploy
from tests.conftest import BACKUP, GROUP_MANAGER, HEAD, SECONDARY


def test_deploy_is_seeded():
    config = SimConfig()
    assert deploy(config, 30, 5) == deploy(config, 30, 5)
    assert deploy(config, 30, 5) != deploy(config, 30, 6)
    assert [node_id for node_id, _ in deploy(config, 30, 5)] == list(range(1, 31))


def test_build_world_roles_match_directory():
    world = build_world(SimConfig(), 60, 3)

    assert world.base_station.role is Role.BASE_STATION
    assert world.base_station.unlimited
    assert len(world.sensor_ids) == 60

    for cell in world.grid.cells.values():
        managers = [m for m in cell.member_ids if world.nodes[m].role in CELL_MANAGING_ROLES]
        if cell.member_ids:
            assert managers == [cell.manager_id]
        if cell.secondary_id is not None:
            assert world.nodes[cell.secondary_id].role is Role.SECONDARY_CELL_MANAGER

    for group in world.groups.values():
        if group.group_manager_id is None:
            continue
        assert world.nodes[group.group_manager_id].role is Role.GROUP_MANAGER
        assert world.nodes[group.group_manager_id].cell_id in group.cell_ids
        for cell_id in group.cell_ids:
            for member in world.grid.cells[cell_id].member_ids:
                assert world.nodes[member].peers.group_manager_id == group.group_manager_id


def test_sleeping_spares_stay_out_of_elections():
    world = build_world(SimConfig(sleeping_fraction=0.25), 40, 1)
    spares = [n for n in world.nodes.values() if n.status is NodeStatus.SLEEPING]

    assert len(spares) == 10
    assert all(n.role is Role.COMMON_NODE for n in spares)


def test_line_world_layout(line_world):
    assert line_world.cell((0, 0)).manager_id == HEAD
    assert line_world.cell((0, 0)).secondary_id == SECONDARY
    assert line_world.nodes[HEAD].role is Role.CELL_MANAGER
    assert line_world.role_holders(Role.GROUP_MANAGER) == [GROUP_MANAGER]
    assert line_world.role_holders(Role.BACKUP_GROUP_NODE) == [BACKUP]
    assert line_world.nodes[const.BASE_STATION_ID].position.y == 30.0
    assert line_world.neighbor_groups(0) == []


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
