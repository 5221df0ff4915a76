from __future__ import annotations

import abc
import importlib
import logging
import typing as t

from src.models.actions import Action, Send, SetTimer
from src.models.errors import InvalidArgumentError
from src.models.messaging import Payload, Purpose, Scope

if t.TYPE_CHECKING:
    from src.models.config import SimConfig
    from src.models.events import FaultSpec
    from src.models.messaging import Envelope
    from src.models.node import NodeState, Role
    from src.models.simulation import Simulation
    from src.models.timer import Timer, TimerEvent
    from src.models.topology import NodeId
    from src.models.world import World

logger = logging.getLogger(__name__)


class Algorithm(abc.ABC):
    """Abstract class for fault-management algorithms driven by the simulation.

    Every hook receives the node that owns the event and returns the actions
    to carry out. Hooks may update the owning node's own bookkeeping, everything
    else goes through actions.
    """

    name: t.ClassVar[str] = "algorithm"

    def __init__(self, sim: Simulation) -> None:
        self.sim = sim

    @property
    def world(self) -> World:
        return self.sim.world

    @property
    def config(self) -> SimConfig:
        return self.sim.config

    @property
    def now(self) -> int:
        return self.sim.now

    @abc.abstractmethod
    def start(self) -> list[Action]:
        """Actions to carry out before the first event, typically the first timers."""

    def on_timer(self, node: NodeState, timer: Timer) -> list[Action]:
        return []

    def on_message(self, node: NodeState, envelope: Envelope) -> list[Action]:
        return []

    def on_energy_tick(self, node: NodeState) -> list[Action]:
        """Called for every active sensor node at each energy check."""
        return []

    def on_role_change(self, node: NodeState, old: Role, new: Role, cause: str) -> list[Action]:
        return []

    def on_fault(self, node: NodeState, fault: FaultSpec) -> list[Action]:
        """Called right after a fault was applied to `node`."""
        return []

    def on_death(self, node: NodeState, cause: str) -> list[Action]:
        """Called when a node dies, whether from an injected fault or an empty battery."""
        return []

    def send(
        self,
        sender: NodeId,
        receivers: t.Iterable[NodeId],
        payload: Payload,
        purpose: Purpose = Purpose.MAINTENANCE,
        *,
        scope: Scope = Scope.CELL,
        broadcast: bool = False,
    ) -> Send:
        return Send(
            sender=sender,
            receivers=tuple(receivers),
            payload=payload,
            purpose=purpose,
            scope=scope,
            broadcast=broadcast,
        )

    def set_timer(
        self, node: NodeId, event: TimerEvent, delay: int, *, key: t.Hashable = None, data: t.Any = None
    ) -> SetTimer:
        return SetTimer(node=node, event=event, delay=delay, key=key, data=data)


class AlgorithmRegistry:
    """Algorithms available to the simulation, by name. Loaded on demand from `src.extensions`."""

    def __init__(self) -> None:
        self._algorithms: dict[str, type[Algorithm]] = {}

    def __contains__(self, name: object) -> bool:
        return name in self._algorithms

    def add(self, algorithm: type[Algorithm]) -> None:
        self._algorithms[algorithm.name] = algorithm

    def remove(self, name: str) -> None:
        self._algorithms.pop(name, None)

    def get(self, name: str) -> type[Algorithm]:
        """Get an algorithm class, loading its extension if needed.

        Raises
        ------
        InvalidArgumentError
            No extension provides an algorithm by that name.
        """
        if name not in self._algorithms:
            try:
                module = importlib.import_module(f"src.extensions.{name}")
            except ModuleNotFoundError as e:
                raise InvalidArgumentError(f"Unknown algorithm '{name}'.") from e
            module.load(self)
            logger.debug(f"Loaded algorithm extension '{name}'")

        if name not in self._algorithms:
            raise InvalidArgumentError(f"Extension '{name}' did not register an algorithm by that name.")
        return self._algorithms[name]


registry = AlgorithmRegistry()


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
