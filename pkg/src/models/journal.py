from __future__ import annotations

import enum
import os
import typing as t

import attr

from src.etc import const
from src.models.messaging import Purpose
from src.models.topology import CellId, GroupId, NodeId

if t.TYPE_CHECKING:
    from src.models.node import Role


class TraceEvent(enum.Enum):
    """Everything that can happen to a message."""

    SEND = "send"
    FORWARD = "forward"
    """A flooded copy re-broadcast by a receiver."""
    DELIVER = "deliver"
    DROP_FOREIGN_GROUP = "drop-foreign-group"
    DROP_FOREIGN_CELL = "drop-foreign-cell"
    DROP_DUPLICATE = "drop-duplicate"
    DROP_LOST = "drop-lost"
    DROP_DEAD = "drop-dead"
    DROP_ASLEEP = "drop-asleep"

    @property
    def is_transmission(self) -> bool:
        """Whether this line stands for a message put on air."""
        return self in (TraceEvent.SEND, TraceEvent.FORWARD)


def format_cell(cell_id: CellId | None) -> str:
    return "" if cell_id is None else f"{cell_id[0]}:{cell_id[1]}"


@attr.frozen(weakref_slot=False)
class TraceEntry:
    """One line of the message trace."""

    tick: int
    event: TraceEvent
    sender: NodeId
    receiver: NodeId | None
    """None for broadcasts."""
    kind: str
    group: GroupId | None
    cell: CellId | None
    energy: float
    """The sender's residual energy as stamped on the message."""
    purpose: Purpose

    @property
    def display_content(self) -> str:
        """The entry as a CSV line."""
        receiver = const.BROADCAST_RECEIVER if self.receiver is None else str(self.receiver)
        group = "" if self.group is None else str(self.group)
        return (
            f"{self.tick},{self.event.value},{self.sender},{receiver},{self.kind},"
            f"{group},{format_cell(self.cell)},{self.energy:.{const.ENERGY_PRECISION}f}"
        )


@attr.frozen(weakref_slot=False)
class RoleEntry:
    """One line of the role-change log."""

    tick: int
    node: NodeId
    old_role: Role
    new_role: Role
    cause: str

    @property
    def display_content(self) -> str:
        return f"{self.tick},{self.node},{self.old_role.value},{self.new_role.value},{self.cause}"


@attr.define(weakref_slot=False)
class Journal:
    """The machine-readable record of a run: every message event and every role change."""

    trace: list[TraceEntry] = attr.field(factory=list)
    roles: list[RoleEntry] = attr.field(factory=list)

    def record_message(self, entry: TraceEntry) -> None:
        self.trace.append(entry)

    def record_role(self, entry: RoleEntry) -> None:
        self.roles.append(entry)

    def transmissions(self, *, purpose: Purpose | None = None, kind: str | None = None) -> list[TraceEntry]:
        """Get the send and forward lines, optionally filtered."""
        return [
            entry
            for entry in self.trace
            if entry.event.is_transmission
            and (purpose is None or entry.purpose is purpose)
            and (kind is None or entry.kind == kind)
        ]

    def trace_csv(self) -> str:
        lines = [const.TRACE_HEADER, *(entry.display_content for entry in self.trace)]
        return "\n".join(lines) + "\n"

    def roles_csv(self) -> str:
        lines = [const.ROLE_LOG_HEADER, *(entry.display_content for entry in self.roles)]
        return "\n".join(lines) + "\n"

    def write(self, path: str | os.PathLike[str]) -> None:
        """Write the trace to `path` and the role log next to it, with a `.roles.csv` suffix."""
        path = os.fspath(path)
        with open(path, "w", newline="") as trace_file:
            trace_file.write(self.trace_csv())
        with open(roles_path(path), "w", newline="") as roles_file:
            roles_file.write(self.roles_csv())


def roles_path(trace_path: str) -> str:
    root, ext = os.path.splitext(trace_path)
    return f"{root if ext == '.csv' else trace_path}.roles.csv"


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
