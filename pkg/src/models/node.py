from __future__ import annotations

import enum
import typing as t

import attr

from src.models.energy import Battery, EnergyRank, HealthStatus, Thresholds, classify_rank
from src.models.messaging import ElectionLevel, SeenSet
from src.models.topology import CellId, GroupId, NodeId, Position


class Role(enum.Enum):
    """The management role a node plays."""

    COMMON_NODE = "CommonNode"
    """A plain member of a cell."""

    SECONDARY_CELL_MANAGER = "SecondaryCellManager"
    """The pre-appointed standby of a cell manager."""

    CELL_MANAGER = "CellManager"

    GROUP_MANAGER = "GroupManager"
    """A cell manager that also oversees the other cells of its group."""

    BACKUP_GROUP_NODE = "BackupGroupNode"
    """A cell manager that stands by to replace its group manager."""

    BASE_STATION = "BaseStation"

    @property
    def manages_cell(self) -> bool:
        """Whether this role carries the duties of a cell manager."""
        return self in CELL_MANAGING_ROLES


CELL_MANAGING_ROLES = frozenset({Role.CELL_MANAGER, Role.GROUP_MANAGER, Role.BACKUP_GROUP_NODE})


class NodeStatus(enum.Enum):
    ACTIVE = "Active"
    SLEEPING = "Sleeping"
    DEAD = "Dead"
    """Terminal."""


@attr.define(weakref_slot=False)
class Peers:
    """Ids a node caches about its own cell and group."""

    manager_id: NodeId | None = None
    secondary_id: NodeId | None = None
    group_manager_id: NodeId | None = None
    backup_id: NodeId | None = None


@attr.define(weakref_slot=False)
class ManagerLedger:
    """What a cell manager tracks about its members during in-cell rounds."""

    expected: set[NodeId] = attr.field(factory=set)
    """Members expected to answer the next Get."""
    responded: set[NodeId] = attr.field(factory=set)
    """Members heard from since the current round started."""
    missed: dict[NodeId, int] = attr.field(factory=dict)
    """Consecutive rounds each member stayed silent."""
    pending_queries: dict[NodeId, int] = attr.field(factory=dict)
    """Member to the deadline of its outstanding status query."""
    energies: dict[NodeId, float] = attr.field(factory=dict)
    """Last residual energy reported by each member."""
    sleeping: set[NodeId] = attr.field(factory=set)
    suspected: set[NodeId] = attr.field(factory=set)
    """Members declared faulty."""
    health: HealthStatus = HealthStatus.HIGH
    """Health computed at the end of the last round."""
    round_started: int | None = None


@attr.define(weakref_slot=False)
class CellReportState:
    """A group manager's view of one cell of its group."""

    manager_id: NodeId | None = None
    reported: bool = False
    """A report arrived since the last out-cell round."""
    missed: int = 0
    """Consecutive out-cell rounds without a report."""
    health: HealthStatus = HealthStatus.HIGH
    energy: float | None = None
    """Residual energy of the cell manager, as stamped on its last report."""
    preferred: bool = True
    """Whether the cell is recommended, only High cells are."""
    rate_directed: bool = False
    declared: bool = False


@attr.define(weakref_slot=False)
class GroupLedger:
    """What a group manager tracks about the cells of its group."""

    cells: dict[CellId, CellReportState] = attr.field(factory=dict)


@attr.define(weakref_slot=False)
class WatchState:
    """What the base station tracks about one group manager."""

    manager_id: NodeId | None
    last_heard: int
    query_deadline: int | None = None


@attr.define(weakref_slot=False)
class ElectionState:
    """An energy election a node takes part in."""

    level: ElectionLevel
    started: int
    shares: dict[NodeId, tuple[float, EnergyRank]] = attr.field(factory=dict)
    """Participant to its (energy, rank), including this node."""

    @property
    def acting_id(self) -> NodeId:
        """The participant that requests a merge or retires the group when nobody wins."""
        return min(self.shares)


@attr.define(weakref_slot=False)
class NodeState:
    """The state of a single sensor node, or of the base station."""

    id: NodeId
    position: Position
    role: Role
    battery: Battery
    cell_id: CellId | None
    group_id: GroupId | None
    status: NodeStatus = NodeStatus.ACTIVE
    peers: Peers = attr.field(factory=Peers)
    last_heard: dict[NodeId, int] = attr.field(factory=dict)
    seen: SeenSet = attr.field(factory=SeenSet)
    timers: set[t.Hashable] = attr.field(factory=set)
    """Keys of this node's pending timers."""

    ledger: ManagerLedger | None = None
    group_ledger: GroupLedger | None = None
    watch: dict[GroupId, WatchState] = attr.field(factory=dict)
    """Only used by the base station."""
    election: ElectionState | None = None
    settled_at: int | None = None
    """When this node last decided an election. Energy shares sent before then are stale."""

    low_reported: bool = False
    """The node already reported its Low battery and stepped down."""
    hold: bool = False
    """Woken to restore cell density, self-monitoring no longer puts it to sleep."""
    period_multiplier: float = 1.0
    """Applied to the in-cell period after a rate directive."""
    unlimited: bool = False
    """Never charged for energy. Only the base station."""

    @property
    def is_alive(self) -> bool:
        return self.status is not NodeStatus.DEAD

    @property
    def is_active(self) -> bool:
        return self.status is NodeStatus.ACTIVE

    def rank(self, thresholds: Thresholds) -> EnergyRank:
        if self.unlimited:
            return EnergyRank.HIGH
        return classify_rank(self.battery, thresholds)


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
