"""Actions returned by the algorithm state machines and carried out by the simulation.

Handlers never touch the world directly. They describe what should happen and
the engine applies it, in order, charging energy and checking invariants.
"""

from __future__ import annotations

import typing as t

import attr

from src.models.messaging import Payload, Purpose, Scope
from src.models.node import NodeStatus, Role
from src.models.timer import TimerEvent
from src.models.topology import CellId, GroupId, NodeId


@attr.frozen(weakref_slot=False)
class Action:
    """Base class of all actions."""


@attr.frozen(weakref_slot=False)
class Send(Action):
    """Send a payload to one or more receivers.

    A broadcast is one transmission heard by every receiver, otherwise
    every receiver gets its own unicast copy.
    """

    sender: NodeId
    receivers: tuple[NodeId, ...]
    payload: Payload
    purpose: Purpose
    scope: Scope = Scope.CELL
    broadcast: bool = False


@attr.frozen(weakref_slot=False)
class SetTimer(Action):
    node: NodeId
    event: TimerEvent
    delay: int
    key: t.Hashable = None
    data: t.Any = None


@attr.frozen(weakref_slot=False)
class CancelTimer(Action):
    node: NodeId
    event: TimerEvent
    key: t.Hashable = None


@attr.frozen(weakref_slot=False)
class ChangeRole(Action):
    node: NodeId
    role: Role
    cause: str


@attr.frozen(weakref_slot=False)
class ChangeStatus(Action):
    node: NodeId
    status: NodeStatus
    cause: str


@attr.frozen(weakref_slot=False)
class MoveCell(Action):
    """Move a node into another cell of its group."""

    node: NodeId
    target_cell: CellId


@attr.frozen(weakref_slot=False)
class RetireCell(Action):
    cell_id: CellId
    cause: str


@attr.frozen(weakref_slot=False)
class RetireGroup(Action):
    group_id: GroupId
    cause: str


@attr.frozen(weakref_slot=False)
class Escalate(Action):
    """Report nodes the algorithm could not place anywhere. They are counted as orphaned."""

    nodes: tuple[NodeId, ...]
    reason: str


@attr.frozen(weakref_slot=False)
class MarkDetected(Action):
    """A fault of `subject` was detected, by itself or by a manager."""

    subject: NodeId


@attr.frozen(weakref_slot=False)
class MarkRecovered(Action):
    """A recovery milestone was reached."""

    subject: NodeId | None = None


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
