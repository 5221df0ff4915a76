from __future__ import annotations

import logging
import typing as t

import attr
import numpy as np

from src.etc import const
from src.models.energy import Battery
from src.models.node import CELL_MANAGING_ROLES, NodeState, NodeStatus, Peers, Role
from src.models.topology import (
    CellGrid,
    CellId,
    CellRecord,
    GroupId,
    GroupRecord,
    NodeId,
    Position,
    assign_nodes,
    build_grid,
    elect_all,
    form_groups,
)

if t.TYPE_CHECKING:
    from src.models.config import SimConfig

logger = logging.getLogger(__name__)


@attr.define(weakref_slot=False)
class World:
    """Every node of a run, plus the directory of cells and groups the engine keeps consistent."""

    config: SimConfig
    nodes: dict[NodeId, NodeState]
    grid: CellGrid
    groups: dict[GroupId, GroupRecord]
    seed: int = 0

    @property
    def base_station(self) -> NodeState:
        return self.nodes[const.BASE_STATION_ID]

    @property
    def sensor_ids(self) -> list[NodeId]:
        """Every node id except the base station, ascending."""
        return sorted(node_id for node_id in self.nodes if node_id != const.BASE_STATION_ID)

    def cell(self, cell_id: CellId) -> CellRecord:
        return self.grid.cells[cell_id]

    def cell_of(self, node_id: NodeId) -> CellRecord | None:
        cell_id = self.nodes[node_id].cell_id
        return None if cell_id is None else self.grid.cells[cell_id]

    def group_of(self, node_id: NodeId) -> GroupRecord | None:
        group_id = self.nodes[node_id].group_id
        return None if group_id is None else self.groups[group_id]

    def distance(self, a: NodeId, b: NodeId) -> float:
        return self.nodes[a].position.distance_to(self.nodes[b].position)

    def members(self, cell_id: CellId, *statuses: NodeStatus) -> list[NodeId]:
        """Members of a cell, ascending, optionally only those in one of `statuses`."""
        return sorted(
            node_id
            for node_id in self.grid.cells[cell_id].member_ids
            if not statuses or self.nodes[node_id].status in statuses
        )

    def active_members(self, cell_id: CellId) -> list[NodeId]:
        return self.members(cell_id, NodeStatus.ACTIVE)

    def cell_managers(self, group_id: GroupId) -> list[NodeId]:
        """Live nodes managing a cell of the group, ascending."""
        managers: list[NodeId] = []
        for cell_id in self.groups[group_id].cell_ids:
            manager_id = self.grid.cells[cell_id].manager_id
            if manager_id is not None and self.nodes[manager_id].is_alive:
                managers.append(manager_id)
        return sorted(managers)

    def neighbor_groups(self, group_id: GroupId) -> list[GroupId]:
        """Groups whose block of cells shares an edge with this group's block."""
        column, row = self.groups[group_id].block
        adjacent = {(column, row - 1), (column - 1, row), (column + 1, row), (column, row + 1)}
        return sorted(g.group_id for g in self.groups.values() if g.block in adjacent and not g.retired)

    def role_holders(self, role: Role) -> list[NodeId]:
        return sorted(node_id for node_id, node in self.nodes.items() if node.role is role and node.is_alive)


def deploy(config: SimConfig, node_count: int, seed: int) -> list[tuple[NodeId, Position]]:
    """Draw node positions uniformly over the area. Node ids start at 1."""
    rng = np.random.default_rng((seed, const.STREAM_PLACEMENT))
    xs = rng.uniform(0.0, config.area_width, node_count)
    ys = rng.uniform(0.0, config.area_height, node_count)
    return [(i + 1, Position(float(x), float(y))) for i, (x, y) in enumerate(zip(xs, ys))]


def build_world(config: SimConfig, node_count: int, seed: int) -> World:
    """Deploy `node_count` nodes, build cells and groups, and run the initial elections.

    Parameters
    ----------
    config : SimConfig
        The run settings.
    node_count : int
        Number of sensor nodes, the base station comes on top.
    seed : int
        The run seed. Identical seeds give identical worlds.

    Returns
    -------
    World
        The initial world, every node Active except sleeping spares.
    """
    placement = deploy(config, node_count, seed)

    spares: set[NodeId] = set()
    spare_count = round(config.sleeping_fraction * node_count)
    if spare_count:
        rng = np.random.default_rng((seed, const.STREAM_SPARES))
        chosen = rng.choice(node_count, size=spare_count, replace=False)
        spares = {int(i) + 1 for i in chosen}

    return place_world(config, placement, seed, spares=spares)


def place_world(
    config: SimConfig,
    placement: t.Sequence[tuple[NodeId, Position]],
    seed: int = 0,
    *,
    spares: t.Collection[NodeId] = (),
    energies: t.Mapping[NodeId, float] | None = None,
) -> World:
    """Build a world from explicit node positions.

    `energies` overrides the residual energy of single nodes, before the
    initial elections run. Ids in `spares` start Sleeping and stay out of them.
    """
    energies = dict(energies or {})
    node_count = len(placement)
    grid = assign_nodes(build_grid(config.area_width, config.area_height, config.cell_side), placement)
    groups = form_groups(grid, config.group_dim)
    residuals = {node_id: energies.get(node_id, config.initial_energy) for node_id, _ in placement}
    grid, group_list = elect_all(
        grid, groups, {node_id: e for node_id, e in residuals.items() if node_id not in spares}
    )

    nodes: dict[NodeId, NodeState] = {}
    for node_id, position in placement:
        cell_id = grid.cell_index(position)
        nodes[node_id] = NodeState(
            id=node_id,
            position=position,
            role=Role.COMMON_NODE,
            battery=Battery(initial=config.initial_energy, residual=residuals[node_id]),
            cell_id=cell_id,
            group_id=grid.cells[cell_id].group_id,
            status=NodeStatus.SLEEPING if node_id in spares else NodeStatus.ACTIVE,
        )

    for cell in grid.cells.values():
        if cell.manager_id is not None:
            nodes[cell.manager_id].role = Role.CELL_MANAGER
        if cell.secondary_id is not None:
            nodes[cell.secondary_id].role = Role.SECONDARY_CELL_MANAGER
        for member_id in cell.member_ids:
            nodes[member_id].peers = Peers(manager_id=cell.manager_id, secondary_id=cell.secondary_id)

    for group in group_list:
        if group.group_manager_id is not None:
            nodes[group.group_manager_id].role = Role.GROUP_MANAGER
        if group.backup_id is not None:
            nodes[group.backup_id].role = Role.BACKUP_GROUP_NODE
        for cell_id in group.cell_ids:
            for member_id in grid.cells[cell_id].member_ids:
                nodes[member_id].peers.group_manager_id = group.group_manager_id
                nodes[member_id].peers.backup_id = group.backup_id

    nodes[const.BASE_STATION_ID] = NodeState(
        id=const.BASE_STATION_ID,
        position=Position(config.area_width / 2, config.area_height),
        role=Role.BASE_STATION,
        battery=Battery.full(config.initial_energy),
        cell_id=None,
        group_id=None,
        unlimited=True,
    )

    managers = sum(1 for node in nodes.values() if node.role in CELL_MANAGING_ROLES)
    logger.debug(
        f"Built world (seed={seed}): {node_count} nodes, {len(grid.cells)} cells, "
        f"{len(group_list)} groups, {managers} cell managers, {len(spares)} spares"
    )
    return World(
        config=config,
        nodes=dict(sorted(nodes.items())),
        grid=grid,
        groups={group.group_id: group for group in group_list},
        seed=seed,
    )


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
