from __future__ import annotations

import heapq
import itertools
import logging
import typing as t

from src.models.errors import IllegalStateError, InvalidArgumentError
from src.models.events import Deliver, InjectFault, SimEvent, TimerFire
from src.models.timer import Timer, TimerEvent

if t.TYPE_CHECKING:
    from src.models.topology import NodeId

logger = logging.getLogger(__name__)


class Scheduler:
    """The event queue of a simulation, including creation, cancellation & dispatching of timers.

    Timers live in slots keyed by (node, event, key). Setting a timer on an occupied
    slot replaces it; replaced and cancelled timers stay in the heap and are skipped
    when they come up.
    """

    def __init__(self) -> None:
        self._queue: list[tuple[tuple[int, int, int], SimEvent]] = []
        self._seq = itertools.count()
        self._timer_ids = itertools.count(1)
        self._timers: dict[tuple[NodeId, TimerEvent, t.Hashable], Timer] = {}
        self._now: int = 0
        self._is_started: bool = False
        self._pending_transient: int = 0

    @property
    def now(self) -> int:
        """The tick of the event being processed."""
        return self._now

    @property
    def is_started(self) -> bool:
        return self._is_started

    @property
    def has_transient_events(self) -> bool:
        """Whether deliveries, faults or one-shot timers are still pending."""
        return self._pending_transient > 0

    def __len__(self) -> int:
        return len(self._queue)

    def start(self) -> None:
        """Start the scheduler."""
        self._is_started = True
        logger.debug("Scheduler startup complete.")

    def stop(self) -> None:
        """Stop the scheduler and drop every pending event."""
        self._is_started = False
        self._queue.clear()
        self._timers.clear()
        self._pending_transient = 0
        logger.debug("Scheduler shutdown complete.")

    def schedule(self, event: SimEvent) -> SimEvent:
        """Put an event in the queue, assigning its sequence number.

        Raises
        ------
        InvalidArgumentError
            The event is due before the current tick.
        """
        if event.fire_at < self._now:
            raise InvalidArgumentError(f"Cannot schedule an event at tick {event.fire_at}, it is already {self._now}.")

        event.seq = next(self._seq)
        heapq.heappush(self._queue, (event.sort_key, event))
        if self._is_transient(event):
            self._pending_transient += 1
        return event

    def create_timer(
        self, node_id: NodeId, event: TimerEvent, expires: int, *, key: t.Hashable = None, data: t.Any = None
    ) -> Timer:
        """Create a new timer and schedule it.

        Parameters
        ----------
        node_id : NodeId
            The node this timer belongs to.
        event : TimerEvent
            The event type to identify this timer by.
        expires : int
            The tick the timer fires at.
        key : Hashable, optional
            Distinguishes several timers of one event on the same node, by default None
        data : Any, optional
            Optional data to include, by default None

        Returns
        -------
        Timer
            The timer object that got created.
        """
        if not self._is_started:
            raise IllegalStateError("The scheduler is not running.")

        timer = Timer(id=next(self._timer_ids), node_id=node_id, event=event, expires=expires, key=key, data=data)
        self._timers[timer.slot] = timer
        self.schedule(TimerFire(fire_at=expires, timer=timer))
        return timer

    def cancel_timer(self, node_id: NodeId, event: TimerEvent, key: t.Hashable = None) -> Timer | None:
        """Cancel a pending timer, returning it if there was one."""
        return self._timers.pop((node_id, event, key), None)

    def cancel_node_timers(self, node_id: NodeId, events: t.Container[TimerEvent] | None = None) -> list[Timer]:
        """Cancel all pending timers of a node, or only those of the given events."""
        slots = [slot for slot in self._timers if slot[0] == node_id and (events is None or slot[1] in events)]
        return [self._timers.pop(slot) for slot in slots]

    def get_timer(self, node_id: NodeId, event: TimerEvent, key: t.Hashable = None) -> Timer | None:
        """Retrieve a currently pending timer, if any."""
        return self._timers.get((node_id, event, key))

    def next_event(self) -> SimEvent | None:
        """Pop the next live event, advancing the clock. Returns None once the queue is exhausted."""
        while self._queue:
            _, event = heapq.heappop(self._queue)
            if self._is_transient(event):
                self._pending_transient -= 1

            if isinstance(event, TimerFire):
                current = self._timers.get(event.timer.slot)
                if current is None or current.id != event.timer.id:
                    continue  # Cancelled or replaced
                del self._timers[event.timer.slot]

            self._now = event.fire_at
            return event

        return None

    def peek_tick(self) -> int | None:
        """The tick of the next queued event, live or not."""
        return self._queue[0][1].fire_at if self._queue else None

    @staticmethod
    def _is_transient(event: SimEvent) -> bool:
        if isinstance(event, (Deliver, InjectFault)):
            return True
        return isinstance(event, TimerFire) and not event.timer.event.is_periodic


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
