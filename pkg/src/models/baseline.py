"""Shared plumbing of the comparison algorithms.

Baselines keep their own cluster bookkeeping on top of the initial cell
election and never touch the cellular state machines. Their multi-round
recoveries are staged on the base station's clock with RECOVERY_STEP timers.
"""

from __future__ import annotations

import abc
import logging
import typing as t

import attr

from src.etc import const
from src.models.actions import Action, Escalate, MarkDetected, MarkRecovered, Send, SetTimer
from src.models.energy import EnergyRank
from src.models.messaging import BaselineMessage, Purpose, Scope
from src.models.plugin import Algorithm
from src.models.timer import TimerEvent

if t.TYPE_CHECKING:
    from src.models.node import NodeState
    from src.models.simulation import Simulation
    from src.models.timer import Timer
    from src.models.topology import CellId, NodeId

logger = logging.getLogger(__name__)


@attr.frozen(weakref_slot=False)
class RecoveryStep:
    """Data carried by a RECOVERY_STEP timer."""

    stage: str
    failing: NodeId
    """The node whose failure is being recovered from."""
    cluster: CellId
    data: t.Any = None


class BaselineAlgorithm(Algorithm, abc.ABC):
    """Base class of the comparison algorithms.

    Clusters are the initial cells, cluster heads their initially elected managers.
    A node is handled once: when its battery first reads Low at an energy check,
    or when it dies without having been handled before.
    """

    def __init__(self, sim: Simulation) -> None:
        super().__init__(sim)
        self.heads: dict[CellId, NodeId] = {}
        """Cluster to its current head."""
        self.handled: set[NodeId] = set()

    def start(self) -> list[Action]:
        for cell_id, cell in sorted(self.world.grid.cells.items()):
            if cell.manager_id is not None:
                self.heads[cell_id] = cell.manager_id
        self.setup()
        logger.debug(f"{self.name}: {len(self.heads)} clusters formed")
        return []

    def setup(self) -> None:
        """Build algorithm specific structures once the clusters are known."""

    @abc.abstractmethod
    def on_failing(self, node: NodeState, *, alive: bool) -> list[Action]:
        """React to a node failing. `alive` is False for nodes that died without warning."""

    @abc.abstractmethod
    def on_step(self, step: RecoveryStep) -> list[Action]:
        """Run one staged recovery round."""

    # Hooks

    def on_energy_tick(self, node: NodeState) -> list[Action]:
        if node.id in self.handled or node.rank(self.config.thresholds) is not EnergyRank.LOW:
            return []
        self.handled.add(node.id)
        logger.debug(f"Tick {self.now}: {self.name} node {node.id} reads Low")
        return [MarkDetected(node.id), *self.on_failing(node, alive=True)]

    def on_death(self, node: NodeState, cause: str) -> list[Action]:
        if node.id in self.handled or node.unlimited:
            return []
        self.handled.add(node.id)
        # Neighbours notice a silent node at no message cost
        return [MarkDetected(node.id), *self.on_failing(node, alive=False)]

    def on_timer(self, node: NodeState, timer: Timer) -> list[Action]:
        if timer.event is not TimerEvent.RECOVERY_STEP:
            return []
        return self.on_step(t.cast(RecoveryStep, timer.data))

    # Helpers

    def cluster_of(self, node_id: NodeId) -> CellId | None:
        return self.world.nodes[node_id].cell_id

    def is_healthy(self, node_id: NodeId) -> bool:
        """Alive, active, never handled and not Low."""
        node = self.world.nodes[node_id]
        return (
            node.is_active
            and node_id not in self.handled
            and node.rank(self.config.thresholds) is not EnergyRank.LOW
        )

    def is_active(self, node_id: NodeId) -> bool:
        return self.world.nodes[node_id].is_active

    def in_range(self, node_id: NodeId, candidates: t.Iterable[NodeId]) -> list[NodeId]:
        """Candidates within radio range of `node_id`, ascending."""
        return sorted(
            c for c in candidates if c != node_id and self.world.distance(node_id, c) <= self.config.radio_range
        )

    def nearest(self, node_id: NodeId, candidates: t.Iterable[NodeId]) -> NodeId | None:
        """The closest candidate, lowest id on ties."""
        ranked = sorted((self.world.distance(node_id, c), c) for c in candidates if c != node_id)
        return ranked[0][1] if ranked else None

    def notify(
        self,
        sender: NodeId,
        receivers: t.Iterable[NodeId],
        name: str,
        purpose: Purpose,
        *,
        subject: NodeId | None = None,
        broadcast: bool = False,
    ) -> Send:
        payload = BaselineMessage(name=name, subject=subject)
        return self.send(sender, receivers, payload, purpose, scope=Scope.DIRECT, broadcast=broadcast)

    def send_requests(
        self, step: RecoveryStep, pick: t.Callable[[NodeId], NodeId | None], request: str
    ) -> list[Action]:
        """Every orphan in `step.data` asks the host chosen by `pick` to take it in.

        The answers go out one hop later, in a `reply` stage carrying (orphan, host) pairs.
        Orphans without a host are escalated.
        """
        actions: list[Action] = []
        pairs: list[tuple[NodeId, NodeId]] = []
        homeless: list[NodeId] = []
        for orphan in step.data:
            if not self.is_active(orphan):
                continue
            host = pick(orphan)
            if host is None:
                homeless.append(orphan)
                continue
            pairs.append((orphan, host))
            actions.append(self.notify(orphan, [host], request, Purpose.RECOVERY, subject=step.failing))

        if homeless:
            logger.warning(f"Tick {self.now}: {self.name} found no host for {homeless}")
            actions.append(Escalate(tuple(homeless), f"no healthy host after {step.failing} failed"))
        if pairs:
            actions.append(self.schedule(RecoveryStep("reply", step.failing, step.cluster, tuple(pairs))))
        return actions

    def send_replies(
        self, step: RecoveryStep, reply: str, adopt: t.Callable[[NodeId, NodeId], None]
    ) -> list[Action]:
        """Hosts accept the orphans that asked them, `adopt(orphan, host)` records the new link."""
        actions: list[Action] = []
        for orphan, host in step.data:
            if not self.is_active(host):
                actions.append(Escalate((orphan,), f"host {host} failed before answering"))
                continue
            adopt(orphan, host)
            actions.append(self.notify(host, [orphan], reply, Purpose.RECOVERY, subject=orphan))
        actions.append(MarkRecovered(step.failing))
        return actions

    def schedule(self, step: RecoveryStep, hops: int = 1) -> SetTimer:
        """Run `step` after `hops` message latencies."""
        return self.set_timer(
            const.BASE_STATION_ID,
            TimerEvent.RECOVERY_STEP,
            hops * self.config.latency,
            key=(step.failing, step.stage),
            data=step,
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
