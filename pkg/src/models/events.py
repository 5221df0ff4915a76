from __future__ import annotations

import enum
import typing as t

import attr

from src.models.errors import InvalidArgumentError
from src.models.messaging import Envelope, Purpose
from src.models.topology import NodeId

if t.TYPE_CHECKING:
    import numpy as np

    from src.models.timer import Timer


class FaultLevel(enum.Enum):
    """Where a fault manifests."""

    NODE = "node"
    NETWORK = "network"
    """Cells or groups lose their management, or nodes are cut off."""


class FaultClass(enum.Enum):
    PERMANENT = "permanent"
    """Irreversible, such as sudden death. Only active detection catches it."""

    POTENTIAL = "potential"
    """An impending failure, such as depleted energy, that the node can detect itself."""


class FaultKind(enum.Enum):
    """The faults that can be injected into a run."""

    SUDDEN_DEATH = "sudden_death"
    """The node dies on the spot without sending anything."""

    ENERGY_DRAIN = "energy_drain"
    """The node's residual energy drops to a fraction of its initial energy."""

    @property
    def level(self) -> FaultLevel:
        return FaultLevel.NODE

    @property
    def fault_class(self) -> FaultClass:
        return FaultClass.PERMANENT if self is FaultKind.SUDDEN_DEATH else FaultClass.POTENTIAL


class RoleSelector(enum.Enum):
    """Resolves a fault target by role at injection time. The lowest matching live id is picked."""

    COMMON_NODE = "common_node"
    CELL_MANAGER = "cell_manager"
    GROUP_MANAGER = "group_manager"
    BACKUP_GROUP_NODE = "backup_group_node"


@attr.frozen(weakref_slot=False)
class FaultSpec:
    """A fault to inject into a run."""

    kind: FaultKind
    at: int
    """The tick of the injection."""
    target: NodeId | RoleSelector
    to_fraction: float | None = None
    """Only for ENERGY_DRAIN, the battery fraction left after the drain."""

    def __attrs_post_init__(self) -> None:
        if self.at < 0:
            raise InvalidArgumentError(f"Faults cannot be injected before tick 0, got {self.at}.")
        if self.kind is FaultKind.ENERGY_DRAIN and (self.to_fraction is None or not 0 <= self.to_fraction <= 1):
            raise InvalidArgumentError(f"Energy drain needs a fraction within [0, 1], got {self.to_fraction}.")

    @classmethod
    def sudden_death(cls, target: NodeId | RoleSelector, at: int) -> FaultSpec:
        return cls(kind=FaultKind.SUDDEN_DEATH, at=at, target=target)

    @classmethod
    def energy_drain(cls, target: NodeId | RoleSelector, at: int, to_fraction: float) -> FaultSpec:
        return cls(kind=FaultKind.ENERGY_DRAIN, at=at, target=target, to_fraction=to_fraction)


@attr.frozen(weakref_slot=False)
class DeliveryModel:
    latency: int = 1
    """Ticks per hop."""
    loss_probability: float = 0.0

    def __attrs_post_init__(self) -> None:
        if self.latency < 1:
            raise InvalidArgumentError(f"Latency must be at least one tick, got {self.latency}.")
        if not 0 <= self.loss_probability <= 1:
            raise InvalidArgumentError(f"Loss probability must be within [0, 1], got {self.loss_probability}.")


@attr.define(weakref_slot=False)
class SimEvent:
    """Base class of every entry in the event queue.

    Events are processed by (fire_at, phase, seq): within one tick fault injections
    come first, then deliveries, then timers. `seq` is assigned by the scheduler.
    """

    PHASE: t.ClassVar[int] = 0

    fire_at: int
    seq: int = attr.field(default=-1, kw_only=True)

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return (self.fire_at, self.PHASE, self.seq)


@attr.define(weakref_slot=False)
class InjectFault(SimEvent):
    """Dispatched when a fault is due."""

    PHASE: t.ClassVar[int] = 0

    fault: FaultSpec


@attr.define(weakref_slot=False)
class Deliver(SimEvent):
    """Dispatched when a message reaches one receiver."""

    PHASE: t.ClassVar[int] = 1

    envelope: Envelope
    receiver: NodeId
    purpose: Purpose
    transmitter: NodeId
    """The node that put the message on air, differs from the sender for flooded copies."""
    broadcast: bool = False


@attr.define(weakref_slot=False)
class TimerFire(SimEvent):
    """Dispatched when a scheduled timer has expired."""

    PHASE: t.ClassVar[int] = 2

    timer: Timer


def deliver(
    envelope: Envelope,
    receiver: NodeId,
    model: DeliveryModel,
    rng: np.random.Generator,
    *,
    now: int,
    purpose: Purpose,
    transmitter: NodeId | None = None,
    broadcast: bool = False,
) -> Deliver | None:
    """Decide the fate of one copy of a message.

    The generator is only consumed when the loss probability is positive,
    so lossless runs draw nothing from it.

    Returns
    -------
    Deliver | None
        The delivery event due at now + latency, or None if the copy was lost.
    """
    if model.loss_probability > 0 and rng.random() < model.loss_probability:
        return None

    return Deliver(
        fire_at=now + model.latency,
        envelope=envelope,
        receiver=receiver,
        purpose=purpose,
        transmitter=envelope.sender if transmitter is None else transmitter,
        broadcast=broadcast,
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
