from __future__ import annotations

import math
import typing as t

import attr

from src.models.energy import HealthStatus
from src.models.errors import InvalidArgumentError, NoCandidateError

NodeId = int
CellId = tuple[int, int]
GroupId = int


@attr.frozen(weakref_slot=False)
class Position:
    """A point in the deployment area, in meters."""

    x: float
    y: float

    def distance_to(self, other: Position) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@attr.define(weakref_slot=False)
class CellRecord:
    """Represents one square cell of the virtual grid."""

    cell_id: CellId
    """The (column, row) index of this cell."""
    member_ids: set[NodeId] = attr.field(factory=set)
    """Nodes currently belonging to this cell."""
    manager_id: NodeId | None = None
    """The cell manager, if any."""
    secondary_id: NodeId | None = None
    """The pre-appointed standby cell manager, if any."""
    health: HealthStatus = HealthStatus.HIGH
    """The last known energy health of the cell."""
    group_id: GroupId | None = None
    """The group this cell was assigned to by form_groups."""
    retired: bool = False
    """Set once the cell was merged away or lost all members."""

    def __attrs_post_init__(self) -> None:
        self.check()

    def check(self) -> None:
        """Validate the manager/secondary invariants of this record."""
        for role, node_id in (("manager", self.manager_id), ("secondary", self.secondary_id)):
            if node_id is not None and node_id not in self.member_ids:
                raise InvalidArgumentError(f"Cell {self.cell_id} {role} {node_id} is not a member.")
        if self.manager_id is not None and self.manager_id == self.secondary_id:
            raise InvalidArgumentError(f"Cell {self.cell_id} has the same node as manager and secondary.")

    def copy(self) -> CellRecord:
        return attr.evolve(self, member_ids=set(self.member_ids))


@attr.define(weakref_slot=False)
class GroupRecord:
    """Represents a contiguous block of cells managed by one group manager."""

    group_id: GroupId
    cell_ids: set[CellId] = attr.field(factory=set)
    group_manager_id: NodeId | None = None
    backup_id: NodeId | None = None
    block: tuple[int, int] = (0, 0)
    """The (column, row) index of this group's block of cells."""
    retired: bool = False

    def copy(self) -> GroupRecord:
        return attr.evolve(self, cell_ids=set(self.cell_ids))


@attr.define(weakref_slot=False)
class CellGrid:
    """The virtual grid partitioning the deployment area."""

    area_width: float
    area_height: float
    cell_side: float
    cells: dict[CellId, CellRecord] = attr.field(factory=dict)

    @property
    def columns(self) -> int:
        return math.ceil(self.area_width / self.cell_side)

    @property
    def rows(self) -> int:
        return math.ceil(self.area_height / self.cell_side)

    def contains(self, position: Position) -> bool:
        return 0 <= position.x <= self.area_width and 0 <= position.y <= self.area_height

    def cell_index(self, position: Position) -> CellId:
        """Get the index of the cell a point falls into. Points on the max edge go to the last row/column."""
        if not self.contains(position):
            raise InvalidArgumentError(f"Position {position} is outside of the deployment area.")
        column = min(math.floor(position.x / self.cell_side), self.columns - 1)
        row = min(math.floor(position.y / self.cell_side), self.rows - 1)
        return (column, row)

    def bounds(self, cell_id: CellId) -> tuple[float, float, float, float]:
        """Get (min_x, min_y, max_x, max_y) of a cell, clipped to the area."""
        column, row = cell_id
        return (
            column * self.cell_side,
            row * self.cell_side,
            min((column + 1) * self.cell_side, self.area_width),
            min((row + 1) * self.cell_side, self.area_height),
        )

    def center(self, cell_id: CellId) -> Position:
        min_x, min_y, max_x, max_y = self.bounds(cell_id)
        return Position((min_x + max_x) / 2, (min_y + max_y) / 2)

    def distance_to_cell(self, position: Position, cell_id: CellId) -> float:
        """Shortest distance from a point to the rectangle of a cell."""
        min_x, min_y, max_x, max_y = self.bounds(cell_id)
        dx = max(min_x - position.x, 0.0, position.x - max_x)
        dy = max(min_y - position.y, 0.0, position.y - max_y)
        return math.hypot(dx, dy)

    def neighbors(self, cell_id: CellId) -> list[CellId]:
        """The 4-neighborhood of a cell, in a stable order."""
        column, row = cell_id
        candidates = [(column, row - 1), (column - 1, row), (column + 1, row), (column, row + 1)]
        return [c for c in candidates if c in self.cells]

    def copy(self) -> CellGrid:
        return attr.evolve(self, cells={cell_id: cell.copy() for cell_id, cell in self.cells.items()})


@attr.frozen(weakref_slot=False)
class Election:
    """The outcome of a manager election."""

    winner: NodeId
    runner_up: NodeId | None = None


def build_grid(area_width: float, area_height: float, cell_side: float) -> CellGrid:
    """Divide the deployment area into a grid of square cells.

    Parameters
    ----------
    area_width : float
        Width of the area in meters.
    area_height : float
        Height of the area in meters.
    cell_side : float
        Side of a cell in meters.

    Returns
    -------
    CellGrid
        A grid of ceil(width/side) x ceil(height/side) empty cells.

    Raises
    ------
    InvalidArgumentError
        Any dimension was not positive.
    """
    if area_width <= 0 or area_height <= 0 or cell_side <= 0:
        raise InvalidArgumentError(
            f"Grid dimensions must be positive, got {area_width}x{area_height} with side {cell_side}."
        )

    grid = CellGrid(area_width=area_width, area_height=area_height, cell_side=cell_side)
    for row in range(grid.rows):
        for column in range(grid.columns):
            grid.cells[(column, row)] = CellRecord(cell_id=(column, row))
    return grid


def assign_nodes(grid: CellGrid, nodes: t.Sequence[tuple[NodeId, Position]]) -> CellGrid:
    """Place nodes into the cells covering their positions. Returns a new grid.

    Raises
    ------
    InvalidArgumentError
        A position was outside of the area or a node id was given twice.
    """
    result = grid.copy()
    seen: set[NodeId] = set()

    for node_id, position in nodes:
        if node_id in seen:
            raise InvalidArgumentError(f"Node {node_id} was given twice.")
        seen.add(node_id)
        result.cells[result.cell_index(position)].member_ids.add(node_id)

    return result


def form_groups(grid: CellGrid, group_dim: int) -> list[GroupRecord]:
    """Partition the grid into group_dim x group_dim blocks of cells.

    Blocks on the last row or column may be smaller. Group ids are assigned
    in row-major block order.

    Raises
    ------
    InvalidArgumentError
        group_dim is smaller than 1.
    """
    if group_dim < 1:
        raise InvalidArgumentError(f"group_dim must be at least 1, got {group_dim}.")

    block_columns = math.ceil(grid.columns / group_dim)
    block_rows = math.ceil(grid.rows / group_dim)
    groups: list[GroupRecord] = []

    for block_row in range(block_rows):
        for block_column in range(block_columns):
            group = GroupRecord(group_id=len(groups), block=(block_column, block_row))
            for row in range(block_row * group_dim, min((block_row + 1) * group_dim, grid.rows)):
                for column in range(block_column * group_dim, min((block_column + 1) * group_dim, grid.columns)):
                    group.cell_ids.add((column, row))
            groups.append(group)

    return groups


def _rank_candidates(candidates: t.Iterable[NodeId], energies: t.Mapping[NodeId, float]) -> list[NodeId]:
    # Highest energy first, lowest id breaks ties
    return sorted(candidates, key=lambda node_id: (-energies[node_id], node_id))


def elect_cell_manager(cell: CellRecord, energies: t.Mapping[NodeId, float]) -> Election:
    """Elect the member with the most residual energy as cell manager, runner-up as secondary.

    Members without an entry in `energies` are not candidates.

    Raises
    ------
    NoCandidateError
        No member of the cell is a candidate.
    """
    ranked = _rank_candidates((m for m in cell.member_ids if m in energies), energies)
    if not ranked:
        raise NoCandidateError(f"Cell {cell.cell_id} has no candidate for cell manager.")
    return Election(winner=ranked[0], runner_up=ranked[1] if len(ranked) > 1 else None)


def elect_group_manager(group: GroupRecord, grid: CellGrid, energies: t.Mapping[NodeId, float]) -> Election:
    """Elect the member-cell manager with the most residual energy as group manager, runner-up as backup.

    Raises
    ------
    NoCandidateError
        None of the group's cells has a manager with a known energy.
    """
    managers = [
        grid.cells[cell_id].manager_id
        for cell_id in group.cell_ids
        if grid.cells[cell_id].manager_id is not None and grid.cells[cell_id].manager_id in energies
    ]
    ranked = _rank_candidates(t.cast(list[NodeId], managers), energies)
    if not ranked:
        raise NoCandidateError(f"Group {group.group_id} has no managed cells.")
    return Election(winner=ranked[0], runner_up=ranked[1] if len(ranked) > 1 else None)


def elect_all(
    grid: CellGrid, groups: t.Sequence[GroupRecord], energies: t.Mapping[NodeId, float]
) -> tuple[CellGrid, list[GroupRecord]]:
    """Run the initial cell and group elections. Returns new records, the inputs are left untouched."""
    grid = grid.copy()
    groups = [group.copy() for group in groups]

    for group in groups:
        for cell_id in group.cell_ids:
            grid.cells[cell_id].group_id = group.group_id

    for cell in grid.cells.values():
        try:
            election = elect_cell_manager(cell, energies)
        except NoCandidateError:
            continue
        cell.manager_id, cell.secondary_id = election.winner, election.runner_up

    for group in groups:
        try:
            election = elect_group_manager(group, grid, energies)
        except NoCandidateError:
            continue
        group.group_manager_id, group.backup_id = election.winner, election.runner_up

    return grid, groups


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
