from __future__ import annotations

import enum
import typing as t

import attr

from src.models.energy import EnergyRank, HealthStatus
from src.models.errors import IllegalStateError
from src.models.topology import CellId, GroupId, NodeId, Position

if t.TYPE_CHECKING:
    from src.models.node import NodeState

MessageId = tuple[NodeId, int, str]


class Scope(enum.IntEnum):
    """Which membership checks a receiver applies to a message."""

    CELL = 0
    """Group and cell must both match the receiver's."""

    GROUP = 1
    """Only the group must match. Used for traffic between a cell and its group manager."""

    DIRECT = 2
    """No membership checks. Used for base station, group manager to group manager and baseline traffic."""


class Purpose(enum.Enum):
    """Why a message was sent. Metrics attribute energy and latency by purpose."""

    MAINTENANCE = "maintenance"
    DETECTION = "detection"
    RECOVERY = "recovery"
    PROACTIVE = "proactive"


class ElectionLevel(enum.IntEnum):
    CELL = 0
    GROUP = 1


class FilterDecision(enum.Enum):
    """The outcome of running a message through a node's filter."""

    PROCESS = "process"
    DROP_FOREIGN_GROUP = "drop-foreign-group"
    DROP_FOREIGN_CELL = "drop-foreign-cell"
    DROP_DUPLICATE = "drop-duplicate"


@attr.frozen(weakref_slot=False)
class Payload:
    """Base class of every message body."""

    KIND: t.ClassVar[str] = "payload"

    @property
    def kind(self) -> str:
        """The name of this payload in traces and metrics."""
        return self.KIND


@attr.frozen(weakref_slot=False)
class Get(Payload):
    """A cell manager asking its members for their updates."""

    KIND: t.ClassVar[str] = "get"


@attr.frozen(weakref_slot=False)
class Update(Payload):
    """A member's answer to Get. Id and energy travel in the envelope."""

    KIND: t.ClassVar[str] = "update"

    location: Position


@attr.frozen(weakref_slot=False)
class StatusQuery(Payload):
    """An instant message asking a silent node about its status."""

    KIND: t.ClassVar[str] = "status_query"


@attr.frozen(weakref_slot=False)
class Ack(Payload):
    KIND: t.ClassVar[str] = "ack"


@attr.frozen(weakref_slot=False)
class SleepNotice(Payload):
    """A low-energy common node telling its cell manager it goes to sleep."""

    KIND: t.ClassVar[str] = "sleep_notice"


@attr.frozen(weakref_slot=False)
class LowEnergyNotice(Payload):
    """A manager stepping down because its battery is Low."""

    KIND: t.ClassVar[str] = "low_energy_notice"

    successor: NodeId | None
    """The standby taking over, None if the receivers have to elect one."""
    cell_successor: NodeId | None = None
    """For a stepping-down group manager, the standby taking over its own cell."""


@attr.frozen(weakref_slot=False)
class PromoteSecondary(Payload):
    """Appoints `candidate` as the standby of the sender: secondary cell manager or backup group node."""

    KIND: t.ClassVar[str] = "promote_secondary"

    candidate: NodeId


@attr.frozen(weakref_slot=False)
class DeclareFaulty(Payload):
    KIND: t.ClassVar[str] = "declare_faulty"

    subject: NodeId


@attr.frozen(weakref_slot=False)
class HealthReport(Payload):
    KIND: t.ClassVar[str] = "health_report"

    status: HealthStatus


@attr.frozen(weakref_slot=False)
class Reminder(Payload):
    """A group manager asking a silent cell manager for its overdue health report."""

    KIND: t.ClassVar[str] = "reminder"


@attr.frozen(weakref_slot=False)
class EnergyShare(Payload):
    KIND: t.ClassVar[str] = "energy_share"

    rank: EnergyRank
    level: ElectionLevel = ElectionLevel.CELL


@attr.frozen(weakref_slot=False)
class NewManagerAnnounce(Payload):
    KIND: t.ClassVar[str] = "new_manager_announce"

    manager: NodeId
    level: ElectionLevel = ElectionLevel.CELL


@attr.frozen(weakref_slot=False)
class MergeRequest(Payload):
    """Asks the group manager to merge the sender's cell into its neighbours."""

    KIND: t.ClassVar[str] = "merge_request"


@attr.frozen(weakref_slot=False)
class MergeDirective(Payload):
    KIND: t.ClassVar[str] = "merge_directive"

    target_cell: CellId
    manager: NodeId
    """The manager of the target cell."""


@attr.frozen(weakref_slot=False)
class RateDirective(Payload):
    KIND: t.ClassVar[str] = "rate_directive"

    period_multiplier: float


@attr.frozen(weakref_slot=False)
class BackupActivate(Payload):
    """The base station telling the backup node to act as group manager."""

    KIND: t.ClassVar[str] = "backup_activate"


@attr.frozen(weakref_slot=False)
class BaselineMessage(Payload):
    """A message of one of the comparison algorithms. These never enter the cellular state machines."""

    name: str
    subject: NodeId | None = None

    @property
    def kind(self) -> str:
        return self.name


@attr.frozen(weakref_slot=False)
class Envelope:
    """The attributes every protocol message carries, plus its body."""

    group_id: GroupId | None
    cell_id: CellId | None
    timestamp: int
    """The sender's send time."""
    curr_energy: float
    """The sender's residual energy at send time, in mJ."""
    sender: NodeId
    payload: Payload
    scope: Scope = Scope.CELL

    @property
    def kind(self) -> str:
        return self.payload.kind

    @property
    def msg_id(self) -> MessageId:
        """Key used for duplicate detection."""
        return (self.sender, self.timestamp, self.payload.kind)


@attr.define(weakref_slot=False)
class SeenSet:
    """Message ids a single node has already processed."""

    ids: set[MessageId] = attr.field(factory=set)

    def __contains__(self, msg_id: object) -> bool:
        return msg_id in self.ids

    def __len__(self) -> int:
        return len(self.ids)

    def add(self, msg_id: MessageId) -> None:
        self.ids.add(msg_id)


def make_envelope(sender: NodeState, payload: Payload, now: int, scope: Scope = Scope.CELL) -> Envelope:
    """Stamp a payload with the sender's membership and residual energy.

    Raises
    ------
    IllegalStateError
        The sender is not alive.
    """
    if not sender.is_alive:
        raise IllegalStateError(f"Node {sender.id} is dead and cannot send {payload.kind}.")

    return Envelope(
        group_id=sender.group_id,
        cell_id=sender.cell_id,
        timestamp=now,
        curr_energy=sender.battery.residual,
        sender=sender.id,
        payload=payload,
        scope=scope,
    )


def filter_message(node: NodeState, seen: SeenSet, msg: Envelope) -> FilterDecision:
    """Decide whether a node processes a received message, recording it if so.

    Group membership is checked first, then cell membership for cell-scoped
    messages, then duplicates. Direct messages only go through the duplicate check.
    """
    if msg.scope is not Scope.DIRECT:
        if msg.group_id != node.group_id:
            return FilterDecision.DROP_FOREIGN_GROUP
        if msg.scope is Scope.CELL and msg.cell_id != node.cell_id:
            return FilterDecision.DROP_FOREIGN_CELL

    if msg.msg_id in seen:
        return FilterDecision.DROP_DUPLICATE

    seen.add(msg.msg_id)
    return FilterDecision.PROCESS


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
