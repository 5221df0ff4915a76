from __future__ import annotations

import enum
import typing as t

import attr

from src.models.topology import NodeId


class TimerEvent(enum.Enum):
    """An enum containing all types of timer events."""

    ENERGY_TICK = "energy_tick"
    """Global timer, every node checks its residual energy."""

    IN_CELL_ROUND = "in_cell_round"
    """A cell manager starts a get/update round."""

    UPDATE_COLLECTION = "update_collection"
    """A cell manager closes the collection window of its round."""

    QUERY_DEADLINE = "query_deadline"
    """The answer to a status query is overdue. Keyed by the queried member."""

    HEALTH_REPORT = "health_report"
    """A cell manager reports its cell's health to the group manager."""

    OUT_CELL_ROUND = "out_cell_round"
    """A group manager checks which cells reported."""

    BS_WATCH = "bs_watch"
    """The base station checks when it last heard from each group manager."""

    BS_QUERY_DEADLINE = "bs_query_deadline"
    """A group manager did not answer the base station's query. Keyed by group."""

    ELECTION_SETTLE = "election_settle"
    """Energy shares are in, the election is decided."""

    RECOVERY_STEP = "recovery_step"
    """A comparison algorithm runs the next round of its recovery."""

    @property
    def is_periodic(self) -> bool:
        """Periodic timers do not keep a run from settling."""
        return self in PERIODIC_EVENTS


PERIODIC_EVENTS = frozenset(
    {
        TimerEvent.ENERGY_TICK,
        TimerEvent.IN_CELL_ROUND,
        TimerEvent.UPDATE_COLLECTION,
        TimerEvent.HEALTH_REPORT,
        TimerEvent.OUT_CELL_ROUND,
        TimerEvent.BS_WATCH,
    }
)


@attr.define(weakref_slot=False)
class Timer:
    """Represents a timer object."""

    id: int
    """The ID of this timer."""

    node_id: NodeId
    """The node this timer is bound to."""

    event: TimerEvent
    """The event type of this timer."""

    expires: int
    """The tick at which this timer fires."""

    key: t.Hashable = None
    """Distinguishes several timers of the same event on one node."""

    data: t.Any = None
    """Optional data for this timer, depending on the event type."""

    @property
    def slot(self) -> tuple[NodeId, TimerEvent, t.Hashable]:
        """Setting a timer on an occupied slot replaces the previous one."""
        return (self.node_id, self.event, self.key)


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
