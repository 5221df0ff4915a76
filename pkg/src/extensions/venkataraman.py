import enum
import itertools
import logging
import typing as t

import attr
import networkx as nx

from src.models.actions import Action, ChangeRole, Escalate, MarkRecovered, RetireCell
from src.models.baseline import BaselineAlgorithm, RecoveryStep
from src.models.messaging import Purpose
from src.models.node import NodeState, Role
from src.models.plugin import AlgorithmRegistry
from src.models.topology import CellId, NodeId, Position

logger = logging.getLogger(__name__)


class NodeClass(enum.Enum):
    """The position of a node in its cluster tree."""

    BOUNDARY = "Boundary"
    """A leaf."""
    PRE_BOUNDARY = "PreBoundary"
    """Every child is a leaf."""
    INTERNAL = "Internal"
    CLUSTER_HEAD = "ClusterHead"


@attr.define(weakref_slot=False)
class ClusterTree:
    """The intra-cluster routing tree, rooted at the cluster head."""

    head: NodeId
    parent: dict[NodeId, NodeId | None] = attr.field(factory=dict)
    children: dict[NodeId, list[NodeId]] = attr.field(factory=dict)

    @property
    def members(self) -> list[NodeId]:
        return sorted(self.parent)

    def node_class(self, node_id: NodeId) -> NodeClass:
        if node_id == self.head:
            return NodeClass.CLUSTER_HEAD
        children = self.children.get(node_id, [])
        if not children:
            return NodeClass.BOUNDARY
        if all(not self.children.get(child) for child in children):
            return NodeClass.PRE_BOUNDARY
        return NodeClass.INTERNAL

    def path_to_head(self, node_id: NodeId) -> list[NodeId]:
        """The node, its parent and so on up to the head."""
        path = [node_id]
        while (parent := self.parent.get(path[-1])) is not None:
            path.append(parent)
            if parent in path[:-1]:
                break
        return path

    def depth(self, node_id: NodeId) -> int:
        return len(self.path_to_head(node_id)) - 1

    def descendants(self, node_id: NodeId) -> set[NodeId]:
        found: set[NodeId] = set()
        stack = list(self.children.get(node_id, []))
        while stack:
            child = stack.pop()
            found.add(child)
            stack.extend(self.children.get(child, []))
        return found

    def relink(self, node_id: NodeId, parent: NodeId | None) -> None:
        """Move `node_id` and its subtree under `parent`. None detaches it from the tree."""
        old = self.parent.get(node_id)
        if old is not None:
            self.children[old].remove(node_id)
        if parent is None:
            self.parent.pop(node_id, None)
            return
        self.parent[node_id] = parent
        self.children.setdefault(parent, []).append(node_id)
        self.children[parent].sort()

    def detach(self, node_id: NodeId) -> set[NodeId]:
        """Cut a node and its whole subtree out of the tree. Returns the removed ids."""
        removed = {node_id, *self.descendants(node_id)}
        self.relink(node_id, None)
        for removed_id in removed:
            self.parent.pop(removed_id, None)
            self.children.pop(removed_id, None)
        return removed

    def remove(self, node_id: NodeId) -> None:
        """Drop a node whose children were already relinked."""
        self.relink(node_id, None)
        self.children.pop(node_id, None)

    def promote(self, new_head: NodeId) -> None:
        """Make `new_head` the root. The old head and its remaining children follow it."""
        old_head = self.head
        self.relink(new_head, None)
        for child in list(self.children.get(old_head, [])):
            self.relink(child, new_head)
        self.children.pop(old_head, None)
        self.parent.pop(old_head, None)
        self.head = new_head
        self.parent[new_head] = None
        self.children.setdefault(new_head, [])

    def check(self) -> bool:
        """Whether every member reaches the head through parent links without cycles."""
        for node_id in self.parent:
            path = self.path_to_head(node_id)
            if path[-1] != self.head or len(set(path)) != len(path):
                return False
        return True


def build_tree(head: NodeId, positions: t.Mapping[NodeId, Position], radio_range: float) -> ClusterTree:
    """Build the breadth-first tree of a cluster over its radio-range graph.

    Members the head cannot reach through other members hang directly off the head.
    """
    graph = nx.Graph()
    graph.add_nodes_from(sorted(positions))
    ids = sorted(positions)
    for a, b in itertools.combinations(ids, 2):
        if positions[a].distance_to(positions[b]) <= radio_range:
            graph.add_edge(a, b)

    tree = ClusterTree(head=head, parent={head: None}, children={head: []})
    for child, parent in nx.bfs_predecessors(graph, head):
        tree.relink(child, parent)
    for node_id in ids:
        if node_id not in tree.parent:
            tree.relink(node_id, head)
    return tree


class VenkataramanAlgorithm(BaselineAlgorithm):
    """Tree-based cluster failure management.

    A failing node reports to its parent and children, and the report travels up
    to the head. Children of a failing member look for new parents among their
    radio neighbours. Children of a failing head exchange energies, the richest
    takes over and the others attach to it.
    """

    name = "venkataraman"

    def setup(self) -> None:
        self.trees: dict[CellId, ClusterTree] = {}
        for cell_id, head in self.heads.items():
            members = self.world.active_members(cell_id)
            positions = {m: self.world.nodes[m].position for m in members}
            self.trees[cell_id] = build_tree(head, positions, self.config.radio_range)

    def on_failing(self, node: NodeState, *, alive: bool) -> list[Action]:
        cluster = self.cluster_of(node.id)
        tree = self.trees.get(cluster) if cluster is not None else None
        if cluster is None or tree is None or node.id not in tree.parent:
            return []

        actions: list[Action] = []
        if alive:
            actions.extend(self.venk_detect(node.id, tree))
        if node.id == tree.head:
            actions.extend(self.recover_head(node.id, cluster, tree))
        else:
            actions.extend(self.recover_member(node.id, cluster, tree))
        return actions

    def venk_detect(self, failing: NodeId, tree: ClusterTree) -> list[Action]:
        """Report to the parent and every child, then relay the report hop by hop up to the head."""
        neighbours = list(tree.children.get(failing, []))
        parent = tree.parent.get(failing)
        if parent is not None:
            neighbours.insert(0, parent)

        actions: list[Action] = [
            self.notify(failing, [n], "fail_report", Purpose.DETECTION, subject=failing)
            for n in neighbours
            if self.is_active(n)
        ]
        path = tree.path_to_head(failing)
        for sender, receiver in itertools.pairwise(path):
            if self.is_active(sender):
                actions.append(self.notify(sender, [receiver], "fail_relay", Purpose.DETECTION, subject=failing))
        return actions

    def recover_member(self, failing: NodeId, cluster: CellId, tree: ClusterTree) -> list[Action]:
        children = [c for c in tree.children.get(failing, []) if self.is_healthy(c)]
        if not tree.children.get(failing):
            logger.debug(f"Tick {self.now}: boundary node {failing} needs no recovery")
            tree.remove(failing)
            return []
        if not children:
            return []

        return [self.schedule(RecoveryStep("join", failing, cluster, tuple(children)))]

    def recover_head(self, failing: NodeId, cluster: CellId, tree: ClusterTree) -> list[Action]:
        children = [c for c in tree.children.get(failing, []) if self.is_healthy(c)]
        if not children:
            orphans = tuple(m for m in tree.members if m != failing and self.world.nodes[m].is_alive)
            logger.info(f"Tick {self.now}: head {failing} has no healthy child, cluster {cluster} dissolved")
            actions: list[Action] = [RetireCell(cluster, "dissolved")]
            if orphans:
                actions.append(Escalate(orphans, f"cluster {cluster} lost its head"))
            return actions

        return [self.schedule(RecoveryStep("energy", failing, cluster, tuple(children)))]

    def on_step(self, step: RecoveryStep) -> list[Action]:
        tree = self.trees[step.cluster]
        match step.stage:
            case "energy":
                return self._share_energy(step, tree)
            case "final":
                return self._announce_head(step, tree)
            case "attach":
                return self._attach(step, tree)
            case "join":
                return self._request_join(step, tree)
            case "reply":
                return self._reply_join(step, tree)
            case "relink":
                return self._relink(step, tree)
            case "done":
                return [MarkRecovered(step.failing)]
            case _:
                return []

    # Head recovery

    def _share_energy(self, step: RecoveryStep, tree: ClusterTree) -> list[Action]:
        children = [c for c in step.data if self.is_healthy(c)]
        actions: list[Action] = []
        for child in children:
            peers = [
                m
                for m in self.in_range(child, tree.members)
                if m != step.failing and self.is_active(m)
            ]
            receivers = sorted(set(peers) | {c for c in children if c != child})
            actions.append(self.notify(child, receivers, "energy", Purpose.RECOVERY, broadcast=True))
        actions.append(self.schedule(RecoveryStep("final", step.failing, step.cluster, tuple(children))))
        return actions

    def _announce_head(self, step: RecoveryStep, tree: ClusterTree) -> list[Action]:
        children = [c for c in step.data if self.is_healthy(c)]
        if not children:
            return self.recover_head(step.failing, step.cluster, tree)

        winner = min(children, key=lambda c: (-self.world.nodes[c].battery.residual, c))
        members = [m for m in tree.members if m not in (winner, step.failing) and self.is_active(m)]
        self.heads[step.cluster] = winner
        logger.debug(f"Tick {self.now}: child {winner} takes over cluster {step.cluster}")
        return [
            ChangeRole(winner, Role.CELL_MANAGER, "elected"),
            self.notify(winner, members, "final_CH", Purpose.RECOVERY, subject=winner, broadcast=True),
            self.schedule(RecoveryStep("attach", step.failing, step.cluster, (winner, *children))),
        ]

    def _attach(self, step: RecoveryStep, tree: ClusterTree) -> list[Action]:
        winner, *children = step.data
        tree.promote(winner)
        actions: list[Action] = []
        for child in children:
            if child == winner or not self.is_active(child):
                continue
            tree.relink(child, winner)
            actions.append(self.notify(child, [winner], "attach", Purpose.RECOVERY, subject=winner))
        actions.append(self.schedule(RecoveryStep("done", step.failing, step.cluster)))
        return actions

    # Member recovery

    def _request_join(self, step: RecoveryStep, tree: ClusterTree) -> list[Action]:
        actions: list[Action] = []
        requests: list[tuple[NodeId, tuple[NodeId, ...]]] = []
        for child in step.data:
            if not self.is_active(child):
                continue
            neighbours = tuple(m for m in self.in_range(child, tree.members) if self.is_active(m))
            requests.append((child, neighbours))
            actions.append(self.notify(child, neighbours, "join_request", Purpose.RECOVERY, broadcast=True))
        actions.append(self.schedule(RecoveryStep("reply", step.failing, step.cluster, tuple(requests))))
        return actions

    def _is_admissible(self, tree: ClusterTree, failing: NodeId, child: NodeId, candidate: NodeId) -> bool:
        if candidate == failing or not self.is_healthy(candidate):
            return False
        if tree.parent.get(candidate) == failing:
            return False
        return candidate not in tree.descendants(child)

    def _reply_join(self, step: RecoveryStep, tree: ClusterTree) -> list[Action]:
        actions: list[Action] = []
        offers: list[tuple[NodeId, tuple[NodeId, ...]]] = []
        for child, neighbours in step.data:
            accepted: list[NodeId] = []
            for neighbour in neighbours:
                if not self.is_active(neighbour):
                    continue
                admissible = self._is_admissible(tree, step.failing, child, neighbour)
                name = "join_reply" if admissible else "join_reject"
                actions.append(self.notify(neighbour, [child], name, Purpose.RECOVERY, subject=child))
                if admissible:
                    accepted.append(neighbour)
            offers.append((child, tuple(accepted)))
        actions.append(self.schedule(RecoveryStep("relink", step.failing, step.cluster, tuple(offers))))
        return actions

    def _relink(self, step: RecoveryStep, tree: ClusterTree) -> list[Action]:
        actions: list[Action] = []
        orphans: list[NodeId] = []
        for child, accepted in step.data:
            candidates = [a for a in accepted if a in tree.parent and a not in tree.descendants(child)]
            if not candidates:
                orphans.extend(sorted(tree.detach(child)))
                continue
            parent = min(candidates, key=lambda a: (tree.depth(a), self.world.distance(child, a), a))
            tree.relink(child, parent)

        if not tree.children.get(step.failing):
            tree.remove(step.failing)
        if orphans:
            logger.warning(f"Tick {self.now}: no admissible parent for {orphans} in cluster {step.cluster}")
            actions.append(Escalate(tuple(orphans), f"no admissible parent in cluster {step.cluster}"))
        actions.append(MarkRecovered(step.failing))
        return actions


def load(registry: AlgorithmRegistry) -> None:
    registry.add(VenkataramanAlgorithm)


def unload(registry: AlgorithmRegistry) -> None:
    registry.remove(VenkataramanAlgorithm.name)


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
