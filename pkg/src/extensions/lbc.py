import logging

import attr

from src.models.actions import Action, RetireCell
from src.models.baseline import BaselineAlgorithm, RecoveryStep
from src.models.messaging import Purpose
from src.models.node import NodeState
from src.models.plugin import AlgorithmRegistry
from src.models.topology import CellId, NodeId

logger = logging.getLogger(__name__)


@attr.define(weakref_slot=False)
class GatewayCluster:
    """A gateway and the sensors it serves. Every sensor belongs to exactly one gateway."""

    gateway: NodeId
    members: set[NodeId] = attr.field(factory=set)


class LoadBalancedClustering(BaselineAlgorithm):
    """Gateway clustering where a failed gateway's cluster is dissolved.

    Every member of the dissolved cluster asks a healthy gateway to take it in,
    preferring the least loaded gateway within radio range.
    """

    name = "lbc"

    def setup(self) -> None:
        self.clusters: dict[CellId, GatewayCluster] = {}
        self.assignment: dict[NodeId, CellId] = {}
        for cell_id, gateway in self.heads.items():
            members = {m for m in self.world.active_members(cell_id) if m != gateway}
            self.clusters[cell_id] = GatewayCluster(gateway=gateway, members=members)
            for member in members:
                self.assignment[member] = cell_id

    def gateway_cluster(self, node_id: NodeId) -> CellId | None:
        for cell_id, cluster in self.clusters.items():
            if cluster.gateway == node_id:
                return cell_id
        return None

    def on_failing(self, node: NodeState, *, alive: bool) -> list[Action]:
        cell_id = self.gateway_cluster(node.id)
        if cell_id is not None:
            return self.lbc_recover(node, cell_id, alive=alive)

        home = self.assignment.pop(node.id, None)
        if home is None:
            return []
        cluster = self.clusters[home]
        cluster.members.discard(node.id)
        if alive and self.is_active(cluster.gateway):
            return [self.notify(node.id, [cluster.gateway], "fail_report", Purpose.DETECTION, subject=node.id)]
        return []

    def lbc_recover(self, node: NodeState, cell_id: CellId, *, alive: bool) -> list[Action]:
        """Dissolve the cluster of a failed gateway and hand its members to other gateways."""
        cluster = self.clusters.pop(cell_id)
        orphans = tuple(sorted(m for m in cluster.members if self.is_healthy(m)))
        for member in cluster.members:
            self.assignment.pop(member, None)
        logger.debug(f"Tick {self.now}: gateway {node.id} failed, dissolving cluster {cell_id} of {len(orphans)}")

        actions: list[Action] = [RetireCell(cell_id, "dissolved")]
        if alive and orphans:
            actions.append(
                self.notify(node.id, orphans, "gateway_fail", Purpose.DETECTION, subject=node.id, broadcast=True)
            )
        if orphans:
            actions.append(self.schedule(RecoveryStep("request", node.id, cell_id, orphans)))
        return actions

    def pick_gateway(self, orphan: NodeId) -> NodeId | None:
        healthy = {c.gateway: len(c.members) for c in self.clusters.values() if self.is_healthy(c.gateway)}
        in_range = self.in_range(orphan, healthy)
        if in_range:
            return min(in_range, key=lambda g: (healthy[g], self.world.distance(orphan, g), g))
        return self.nearest(orphan, healthy)

    def adopt(self, orphan: NodeId, gateway: NodeId) -> None:
        cell_id = self.gateway_cluster(gateway)
        if cell_id is None:
            return
        self.clusters[cell_id].members.add(orphan)
        self.assignment[orphan] = cell_id

    def on_step(self, step: RecoveryStep) -> list[Action]:
        match step.stage:
            case "request":
                return self.send_requests(step, self.pick_gateway, "reassign_request")
            case "reply":
                return self.send_replies(step, "reassign_accept", self.adopt)
            case _:
                return []


def load(registry: AlgorithmRegistry) -> None:
    registry.add(LoadBalancedClustering)


def unload(registry: AlgorithmRegistry) -> None:
    registry.remove(LoadBalancedClustering.name)


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
