import logging

import attr

from src.models.actions import Action
from src.models.baseline import BaselineAlgorithm, RecoveryStep
from src.models.messaging import Purpose
from src.models.node import NodeState
from src.models.plugin import AlgorithmRegistry
from src.models.topology import NodeId

logger = logging.getLogger(__name__)


@attr.define(weakref_slot=False)
class HeaderSet:
    """Headers of the self-organised network and the header each sensor joined."""

    headers: set[NodeId] = attr.field(factory=set)
    assignment: dict[NodeId, NodeId] = attr.field(factory=dict)

    def members_of(self, header: NodeId) -> list[NodeId]:
        return sorted(m for m, h in self.assignment.items() if h == header)


class AutonomicSelfOrganization(BaselineAlgorithm):
    """Self-organising headers. Sensors of a failed header join the nearest surviving one."""

    name = "aso"

    def setup(self) -> None:
        self.header_set = HeaderSet(headers=set(self.heads.values()))
        for cell_id, header in self.heads.items():
            for member in self.world.active_members(cell_id):
                if member != header:
                    self.header_set.assignment[member] = header

    def on_failing(self, node: NodeState, *, alive: bool) -> list[Action]:
        if node.id in self.header_set.headers:
            return self.aso_recover(node, alive=alive)

        header = self.header_set.assignment.pop(node.id, None)
        if header is not None and alive and self.is_active(header):
            return [self.notify(node.id, [header], "fail_report", Purpose.DETECTION, subject=node.id)]
        return []

    def aso_recover(self, node: NodeState, *, alive: bool) -> list[Action]:
        """Every sensor of the failed header re-runs the join handshake."""
        self.header_set.headers.discard(node.id)
        orphans = tuple(m for m in self.header_set.members_of(node.id) if self.is_healthy(m))
        for orphan in self.header_set.members_of(node.id):
            del self.header_set.assignment[orphan]

        cluster = self.cluster_of(node.id)
        if not orphans or cluster is None:
            return []
        logger.debug(f"Tick {self.now}: header {node.id} failed, {len(orphans)} sensors rejoin")
        return [self.schedule(RecoveryStep("request", node.id, cluster, orphans))]

    def pick_header(self, orphan: NodeId) -> NodeId | None:
        return self.nearest(orphan, (h for h in self.header_set.headers if self.is_healthy(h)))

    def adopt(self, orphan: NodeId, header: NodeId) -> None:
        self.header_set.assignment[orphan] = header

    def on_step(self, step: RecoveryStep) -> list[Action]:
        match step.stage:
            case "request":
                return self.send_requests(step, self.pick_header, "join_request")
            case "reply":
                return self.send_replies(step, "join_reply", self.adopt)
            case _:
                return []


def load(registry: AlgorithmRegistry) -> None:
    registry.add(AutonomicSelfOrganization)


def unload(registry: AlgorithmRegistry) -> None:
    registry.remove(AutonomicSelfOrganization.name)


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
