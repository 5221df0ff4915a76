from __future__ import annotations

import logging
import math
import typing as t

import attr
import numpy as np

from src.etc import const
from src.models.actions import (
    Action,
    CancelTimer,
    ChangeRole,
    ChangeStatus,
    Escalate,
    MarkDetected,
    MarkRecovered,
    MoveCell,
    RetireCell,
    RetireGroup,
    Send,
    SetTimer,
)
from src.models.energy import drain, rx_cost, tx_cost
from src.models.errors import IllegalStateError, InvariantViolationError
from src.models.events import (
    Deliver,
    DeliveryModel,
    FaultClass,
    FaultKind,
    FaultLevel,
    InjectFault,
    RoleSelector,
    TimerFire,
    deliver,
)
from src.models.journal import Journal, RoleEntry, TraceEntry, TraceEvent
from src.models.messaging import Envelope, FilterDecision, Purpose, Scope, filter_message, make_envelope
from src.models.metrics import RunMetrics
from src.models.node import NodeState, NodeStatus, Role
from src.models.plugin import registry
from src.models.timer import TimerEvent
from src.utils.scheduler import Scheduler

if t.TYPE_CHECKING:
    from src.models.config import SimConfig
    from src.models.events import FaultSpec, SimEvent
    from src.models.plugin import Algorithm
    from src.models.topology import CellId, GroupId, NodeId
    from src.models.world import World

logger = logging.getLogger(__name__)

CONSERVATION_TOLERANCE: float = 1e-9

SELECTOR_ROLES: dict[RoleSelector, Role] = {
    RoleSelector.COMMON_NODE: Role.COMMON_NODE,
    RoleSelector.CELL_MANAGER: Role.CELL_MANAGER,
    RoleSelector.GROUP_MANAGER: Role.GROUP_MANAGER,
    RoleSelector.BACKUP_GROUP_NODE: Role.BACKUP_GROUP_NODE,
}

DROP_EVENTS: dict[FilterDecision, TraceEvent] = {
    FilterDecision.DROP_FOREIGN_GROUP: TraceEvent.DROP_FOREIGN_GROUP,
    FilterDecision.DROP_FOREIGN_CELL: TraceEvent.DROP_FOREIGN_CELL,
    FilterDecision.DROP_DUPLICATE: TraceEvent.DROP_DUPLICATE,
}


@attr.frozen(weakref_slot=False)
class RunResult:
    """Everything a finished run produced."""

    journal: Journal
    metrics: RunMetrics
    world: World


class Simulation:
    """A single deterministic run of one algorithm over one world.

    Parameters
    ----------
    world : World
        The initial world, mutated in place by the run.
    algorithm : str
        Name of the algorithm extension to drive, by default "cellular".
    faults : Sequence[FaultSpec]
        Faults to inject.
    """

    __slots__ = (
        "world",
        "config",
        "scheduler",
        "journal",
        "delivery",
        "algorithm",
        "faults",
        "metrics",
        "_rng",
        "_applied",
        "_recovery_energy",
        "_recovery_ticks",
        "_last_milestone",
        "_fault_ticks",
        "_detected",
        "_last_activity",
        "_orphaned",
        "_has_run",
    )

    def __init__(self, world: World, algorithm: str = "cellular", faults: t.Sequence[FaultSpec] = ()) -> None:
        self.world: World = world
        self.config: SimConfig = world.config
        self.scheduler: Scheduler = Scheduler()
        self.journal: Journal = Journal()
        self.delivery: DeliveryModel = DeliveryModel(self.config.latency, self.config.loss_probability)
        self.faults: list[FaultSpec] = list(faults)
        self.metrics: RunMetrics = RunMetrics(algorithm=algorithm, node_count=len(world.sensor_ids), seed=world.seed)
        self._rng: np.random.Generator = np.random.default_rng((world.seed, const.STREAM_DELIVERY))

        self._applied: dict[NodeId, list[float]] = {node_id: [] for node_id in world.nodes}
        self._recovery_energy: list[float] = []
        self._recovery_ticks: list[int] = []
        self._last_milestone: int | None = None
        self._fault_ticks: dict[NodeId, int] = {}
        self._detected: dict[NodeId, int] = {}
        self._last_activity: int = 0
        self._orphaned: set[NodeId] = set()
        self._has_run: bool = False

        self.algorithm: Algorithm = registry.get(algorithm)(self)

    @property
    def now(self) -> int:
        return self.scheduler.now

    def run(self) -> RunResult:
        """Process events until max_ticks or until the network settles.

        Returns
        -------
        RunResult
            The journal, metrics and final world of the run.

        Raises
        ------
        InvariantViolationError
            A global invariant broke. The run is aborted.
        IllegalStateError
            The simulation was already run.
        """
        if self._has_run:
            raise IllegalStateError("A simulation can only be run once.")
        self._has_run = True

        logger.info(
            f"Starting run: algorithm={self.metrics.algorithm} nodes={self.metrics.node_count} "
            f"seed={self.world.seed} faults={len(self.faults)}"
        )
        self.scheduler.start()
        for fault in self.faults:
            self.scheduler.schedule(InjectFault(fire_at=fault.at, fault=fault))
        self.scheduler.create_timer(
            const.BASE_STATION_ID, TimerEvent.ENERGY_TICK, self.config.timers.energy_check_period
        )
        self._execute(self.algorithm.start(), None)
        self.check_roles()

        settle_after = self.config.quiescence_periods * self.config.timers.out_cell_period
        while True:
            upcoming = self.scheduler.peek_tick()
            if upcoming is None or upcoming > self.config.max_ticks:
                break
            event = self.scheduler.next_event()
            if event is None:
                break
            self._dispatch(event)
            self.check_roles()

            if not self.scheduler.has_transient_events and self.now - self._last_activity >= settle_after:
                logger.debug(f"Network settled at tick {self.now}")
                break

        self._finalize()
        self.scheduler.stop()
        logger.info(
            f"Finished run at tick {self.metrics.ticks}: {self.metrics.messages_total} messages, "
            f"recovery energy {self.metrics.recovery_energy:.4f} mJ"
        )
        return RunResult(journal=self.journal, metrics=self.metrics, world=self.world)

    # Event handling

    def _dispatch(self, event: SimEvent) -> None:
        if isinstance(event, InjectFault):
            self.inject(event.fault)
        elif isinstance(event, Deliver):
            self._deliver(event)
        elif isinstance(event, TimerFire):
            timer = event.timer
            if timer.event is TimerEvent.ENERGY_TICK and timer.node_id == const.BASE_STATION_ID:
                self._energy_tick()
                return
            node = self.world.nodes[timer.node_id]
            if not node.is_active:
                return
            node.timers.discard((timer.event, timer.key))
            self._execute(self.algorithm.on_timer(node, timer), node)

    def _energy_tick(self) -> None:
        for node_id in self.world.sensor_ids:
            node = self.world.nodes[node_id]
            if not node.is_active:
                continue
            if self.config.idle_drain > 0:
                self._charge(node, self.config.idle_drain)
                if not node.is_active:
                    continue
            self._execute(self.algorithm.on_energy_tick(node), node)

        self.scheduler.create_timer(
            const.BASE_STATION_ID, TimerEvent.ENERGY_TICK, self.now + self.config.timers.energy_check_period
        )

    def inject(self, fault: FaultSpec) -> None:
        """Apply a fault to its target. Faults on dead or unresolvable targets are logged and skipped."""
        node = self._resolve_target(fault)
        if node is None:
            logger.warning(f"Fault {fault.kind.value} at tick {self.now}: no live target for {fault.target}")
            return
        if not node.is_alive:
            logger.info(f"Fault {fault.kind.value} at tick {self.now}: node {node.id} is already dead")
            return

        self._fault_ticks.setdefault(node.id, self.now)
        self._count_fault(fault.kind.level, fault.kind.fault_class)
        self._last_activity = self.now
        logger.info(f"Injecting {fault.kind.value} into node {node.id} ({node.role.value}) at tick {self.now}")

        if fault.kind is FaultKind.SUDDEN_DEATH:
            self._kill(node, "sudden-death")
        else:
            assert fault.to_fraction is not None
            target = fault.to_fraction * node.battery.initial
            if target < node.battery.residual:
                self._charge(node, node.battery.residual - target)

        self._execute(self.algorithm.on_fault(node, fault), None)

    def _resolve_target(self, fault: FaultSpec) -> NodeState | None:
        if isinstance(fault.target, RoleSelector):
            holders = self.world.role_holders(SELECTOR_ROLES[fault.target])
            return self.world.nodes[holders[0]] if holders else None
        return self.world.nodes.get(fault.target)

    def _deliver(self, event: Deliver) -> None:
        envelope = event.envelope
        receiver = self.world.nodes[event.receiver]

        if not receiver.is_alive:
            self._trace(TraceEvent.DROP_DEAD, envelope, receiver.id, event.purpose)
            return
        if not receiver.is_active:
            self._trace(TraceEvent.DROP_ASLEEP, envelope, receiver.id, event.purpose)
            return

        cost = self._charge(receiver, rx_cost(self.config.radio, self.config.radio.message_bits))
        if event.purpose is Purpose.RECOVERY:
            self._recovery_energy.append(cost)
            self._milestone()
        if not receiver.is_active:
            return

        decision = filter_message(receiver, receiver.seen, envelope)
        if decision is not FilterDecision.PROCESS:
            self._trace(DROP_EVENTS[decision], envelope, receiver.id, event.purpose)
            return

        self._trace(TraceEvent.DELIVER, envelope, receiver.id, event.purpose)
        receiver.last_heard[envelope.sender] = self.now

        if self.config.flood and event.broadcast and envelope.scope is not Scope.DIRECT:
            self._forward(receiver, envelope, event.purpose)

        self._execute(self.algorithm.on_message(receiver, envelope), receiver)

    def _forward(self, forwarder: NodeState, envelope: Envelope, purpose: Purpose) -> None:
        """Re-broadcast a scoped message once to in-scope neighbours within radio range."""
        targets = [
            node.id
            for node in self.world.nodes.values()
            if node.id not in (forwarder.id, envelope.sender)
            and node.is_alive
            and node.group_id == envelope.group_id
            and (envelope.scope is not Scope.CELL or node.cell_id == envelope.cell_id)
            and forwarder.position.distance_to(node.position) <= self.config.radio_range
        ]
        if not targets:
            return
        self._transmit(forwarder, envelope, purpose, targets, broadcast=True, event=TraceEvent.FORWARD)

    # Actions

    def _execute(self, actions: t.Iterable[Action], owner: NodeState | None) -> None:
        owner_was_active = owner is not None and owner.is_active

        for action in actions:
            if isinstance(action, Send):
                sender = self.world.nodes[action.sender]
                if not sender.is_active:
                    if owner_was_active and sender is owner:
                        logger.debug(f"Node {sender.id} went {sender.status.value}, dropping its pending sends")
                        continue
                    raise InvariantViolationError(
                        self.now, f"{sender.status.value} node {sender.id} tried to send {action.payload.kind}"
                    )
                self._send(sender, action)
            elif isinstance(action, SetTimer):
                self.scheduler.create_timer(
                    action.node, action.event, self.now + action.delay, key=action.key, data=action.data
                )
                self.world.nodes[action.node].timers.add((action.event, action.key))
            elif isinstance(action, CancelTimer):
                self.scheduler.cancel_timer(action.node, action.event, action.key)
                self.world.nodes[action.node].timers.discard((action.event, action.key))
            elif isinstance(action, ChangeRole):
                self.change_role(action.node, action.role, action.cause)
            elif isinstance(action, ChangeStatus):
                self._change_status(self.world.nodes[action.node], action.status, action.cause)
            elif isinstance(action, MoveCell):
                self._move_cell(action)
            elif isinstance(action, RetireCell):
                self._retire_cell(action)
            elif isinstance(action, RetireGroup):
                self._retire_group(action)
            elif isinstance(action, Escalate):
                self._escalate(action)
            elif isinstance(action, MarkDetected):
                self._detected.setdefault(action.subject, self.now)
            elif isinstance(action, MarkRecovered):
                self._milestone()
            else:
                raise IllegalStateError(f"Unknown action {action!r}")

    def _send(self, sender: NodeState, action: Send) -> None:
        receivers = [r for r in dict.fromkeys(action.receivers) if r != sender.id]
        if not receivers:
            logger.debug(f"Node {sender.id} has nobody to send {action.payload.kind} to")
            return

        envelope = make_envelope(sender, action.payload, self.now, action.scope)
        if action.purpose is not Purpose.MAINTENANCE:
            self._last_activity = self.now
        if action.purpose is Purpose.RECOVERY:
            self._recovery_ticks.append(self.now)

        self._transmit(sender, envelope, action.purpose, receivers, broadcast=action.broadcast, event=TraceEvent.SEND)

    def _transmit(
        self,
        transmitter: NodeState,
        envelope: Envelope,
        purpose: Purpose,
        receivers: list[NodeId],
        *,
        broadcast: bool,
        event: TraceEvent,
    ) -> None:
        bits = self.config.radio.message_bits
        if broadcast:
            distance = max(self.world.distance(transmitter.id, r) for r in receivers)
            transmissions = [(None, distance)]
        else:
            transmissions = [(r, self.world.distance(transmitter.id, r)) for r in receivers]

        for receiver, distance in transmissions:
            self._trace(event, envelope, receiver, purpose, sender=transmitter.id)
            self.metrics.messages_total += 1
            self.metrics.messages_by_kind[envelope.kind] = self.metrics.messages_by_kind.get(envelope.kind, 0) + 1
            cost = self._charge(transmitter, tx_cost(self.config.radio, bits, distance))
            if purpose is Purpose.RECOVERY:
                self._recovery_energy.append(cost)

        for receiver_id in receivers:
            delivery = deliver(
                envelope,
                receiver_id,
                self.delivery,
                self._rng,
                now=self.now,
                purpose=purpose,
                transmitter=transmitter.id,
                broadcast=broadcast,
            )
            if delivery is None:
                self._trace(TraceEvent.DROP_LOST, envelope, receiver_id, purpose)
            else:
                self.scheduler.schedule(delivery)

    def change_role(self, node_id: NodeId, role: Role, cause: str) -> None:
        """Give a node a new role, demoting any live holder the role would clash with."""
        node = self.world.nodes[node_id]
        if node.role is role:
            return
        if not node.is_alive:
            logger.debug(f"Ignoring role change of dead node {node_id} to {role.value}")
            return

        cell = self.world.cell_of(node_id)
        if role.manages_cell and cell is not None:
            for other_id in sorted(cell.member_ids):
                other = self.world.nodes[other_id]
                if other_id != node_id and other.is_alive and other.role.manages_cell:
                    self._set_role(other, Role.COMMON_NODE, "fenced")

        if role is Role.GROUP_MANAGER and node.group_id is not None:
            for other_id in self.world.role_holders(Role.GROUP_MANAGER):
                other = self.world.nodes[other_id]
                if other_id != node_id and other.group_id == node.group_id:
                    self._set_role(other, Role.CELL_MANAGER, "fenced")

        self._set_role(node, role, cause)

    def _set_role(self, node: NodeState, role: Role, cause: str) -> None:
        old = node.role
        node.role = role
        cell = self.world.cell_of(node.id)
        group = self.world.group_of(node.id)

        if cell is not None:
            if role.manages_cell:
                cell.manager_id = node.id
                if cell.secondary_id == node.id:
                    cell.secondary_id = None
            elif old.manages_cell and cell.manager_id == node.id:
                cell.manager_id = None
            if role is Role.SECONDARY_CELL_MANAGER and cell.manager_id != node.id:
                cell.secondary_id = node.id
            elif old is Role.SECONDARY_CELL_MANAGER and cell.secondary_id == node.id:
                cell.secondary_id = None

        if group is not None:
            if role is Role.GROUP_MANAGER:
                group.group_manager_id = node.id
                if group.backup_id == node.id:
                    group.backup_id = None
            elif old is Role.GROUP_MANAGER and group.group_manager_id == node.id:
                group.group_manager_id = None
            if role is Role.BACKUP_GROUP_NODE:
                group.backup_id = node.id
            elif old is Role.BACKUP_GROUP_NODE and group.backup_id == node.id:
                group.backup_id = None

        self.journal.record_role(RoleEntry(tick=self.now, node=node.id, old_role=old, new_role=role, cause=cause))
        logger.info(f"Tick {self.now}: node {node.id} {old.value} -> {role.value} ({cause})")
        if cause != "appointed":
            self._last_activity = self.now
        if cause in const.RECOVERY_CAUSES:
            self._milestone()

        self._execute(self.algorithm.on_role_change(node, old, role, cause), node)

    def check_roles(self) -> None:
        """Each cell has at most one live manager, each group at most one live group manager.

        Raises
        ------
        InvariantViolationError
            A cell or a group has more than one live manager.
        """
        cell_managers: dict[CellId, list[NodeId]] = {}
        group_managers: dict[GroupId, list[NodeId]] = {}
        for node in self.world.nodes.values():
            if not node.is_alive:
                continue
            if node.role.manages_cell and node.cell_id is not None:
                cell_managers.setdefault(node.cell_id, []).append(node.id)
            if node.role is Role.GROUP_MANAGER and node.group_id is not None:
                group_managers.setdefault(node.group_id, []).append(node.id)

        for cell_id, managers in cell_managers.items():
            if len(managers) > 1:
                raise InvariantViolationError(self.now, f"cell {cell_id} has managers {sorted(managers)}")
        for group_id, managers in group_managers.items():
            if len(managers) > 1:
                raise InvariantViolationError(self.now, f"group {group_id} has managers {sorted(managers)}")

    def _change_status(self, node: NodeState, status: NodeStatus, cause: str) -> None:
        if node.status is status or not node.is_alive:
            return
        if status is NodeStatus.DEAD:
            self._kill(node, cause)
            return

        logger.debug(f"Tick {self.now}: node {node.id} {node.status.value} -> {status.value} ({cause})")
        node.status = status
        self._last_activity = self.now
        if status is NodeStatus.SLEEPING:
            self._clear_timers(node)
        elif cause == "woken":
            node.hold = True

    def _kill(self, node: NodeState, cause: str) -> None:
        if node.unlimited:
            return
        node.status = NodeStatus.DEAD
        self._clear_timers(node)
        self._last_activity = self.now
        if cause == "exhausted":
            self._fault_ticks.setdefault(node.id, self.now)
            self._count_fault(FaultLevel.NODE, FaultClass.PERMANENT)
        logger.info(f"Tick {self.now}: node {node.id} ({node.role.value}) died ({cause})")
        self._execute(self.algorithm.on_death(node, cause), None)

    def _clear_timers(self, node: NodeState) -> None:
        self.scheduler.cancel_node_timers(node.id)
        node.timers.clear()

    def _move_cell(self, action: MoveCell) -> None:
        node = self.world.nodes[action.node]
        source = self.world.cell_of(node.id)
        target = self.world.cell(action.target_cell)
        if source is not None:
            if node.role.manages_cell or node.role is Role.SECONDARY_CELL_MANAGER:
                self._set_role(node, Role.COMMON_NODE, "merged")
            source.member_ids.discard(node.id)

        target.member_ids.add(node.id)
        node.cell_id = target.cell_id
        node.group_id = target.group_id
        self._last_activity = self.now
        self._milestone()
        logger.debug(f"Tick {self.now}: node {node.id} moved into cell {target.cell_id}")

    def _retire_cell(self, action: RetireCell) -> None:
        cell = self.world.cell(action.cell_id)
        if cell.retired:
            return
        cell.retired = True
        cell.manager_id = None
        cell.secondary_id = None
        cell.member_ids = {m for m in cell.member_ids if self.world.nodes[m].is_alive}
        self._count_fault(FaultLevel.NETWORK, FaultClass.PERMANENT)
        self.metrics.network_faults += 1
        self._last_activity = self.now
        logger.warning(f"Tick {self.now}: cell {cell.cell_id} retired ({action.cause})")

    def _retire_group(self, action: RetireGroup) -> None:
        group = self.world.groups[action.group_id]
        if group.retired:
            return
        group.retired = True
        group.group_manager_id = None
        group.backup_id = None
        self._count_fault(FaultLevel.NETWORK, FaultClass.PERMANENT)
        self.metrics.network_faults += 1
        self._last_activity = self.now
        logger.warning(f"Tick {self.now}: group {group.group_id} retired ({action.cause})")

    def _escalate(self, action: Escalate) -> None:
        fresh = set(action.nodes) - self._orphaned
        if not fresh:
            return
        self._orphaned |= fresh
        self._count_fault(FaultLevel.NETWORK, FaultClass.PERMANENT)
        self.metrics.network_faults += 1
        self._last_activity = self.now
        logger.warning(f"Tick {self.now}: escalated to the base station, {sorted(fresh)} orphaned ({action.reason})")

    # Accounting

    def _charge(self, node: NodeState, amount: float) -> float:
        """Take energy out of a node's battery. Returns the amount actually applied."""
        if node.unlimited or amount <= 0:
            return 0.0
        applied = min(amount, node.battery.residual)
        node.battery = drain(node.battery, amount)
        self._applied[node.id].append(applied)
        if node.battery.is_empty and node.is_alive:
            self._kill(node, "exhausted")
        return applied

    def _milestone(self) -> None:
        self._last_milestone = self.now

    def _count_fault(self, level: FaultLevel, fault_class: FaultClass) -> None:
        key = f"{level.value}/{fault_class.value}"
        self.metrics.faults_by_class[key] = self.metrics.faults_by_class.get(key, 0) + 1

    def _trace(
        self,
        event: TraceEvent,
        envelope: Envelope,
        receiver: NodeId | None,
        purpose: Purpose,
        *,
        sender: NodeId | None = None,
    ) -> None:
        self.journal.record_message(
            TraceEntry(
                tick=self.now,
                event=event,
                sender=envelope.sender if sender is None else sender,
                receiver=receiver,
                kind=envelope.kind,
                group=envelope.group_id,
                cell=envelope.cell_id,
                energy=envelope.curr_energy,
                purpose=purpose,
            )
        )

    def _finalize(self) -> None:
        metrics = self.metrics
        metrics.ticks = self.now
        metrics.recovery_energy = math.fsum(self._recovery_energy)

        if self._recovery_ticks:
            first = self._recovery_ticks[0]
            last = max(self._recovery_ticks[-1], self._last_milestone or first)
            metrics.recovery_latency = last - first
            metrics.recovery_rounds = len(set(self._recovery_ticks))

        if self._fault_ticks:
            subject, injected = min(self._fault_ticks.items(), key=lambda item: (item[1], item[0]))
            if subject in self._detected:
                metrics.detection_latency = float(self._detected[subject] - injected)

        metrics.orphaned = len(self._orphaned)

        spent: list[float] = []
        for node_id, node in self.world.nodes.items():
            if node.unlimited:
                continue
            used = node.battery.initial - node.battery.residual
            charged = math.fsum(self._applied[node_id])
            if abs(used - charged) > CONSERVATION_TOLERANCE:
                raise InvariantViolationError(
                    self.now, f"node {node_id} spent {used} mJ but was charged {charged} mJ"
                )
            spent.append(used)
        metrics.energy_total = math.fsum(spent)

    def charges(self, node_id: NodeId) -> list[float]:
        """Every amount taken out of a node's battery, in order."""
        return list(self._applied[node_id])


def run(
    world: World, faults: t.Sequence[FaultSpec] = (), algorithm: str = "cellular"
) -> RunResult:
    """Run one algorithm over a world with the given faults."""
    return Simulation(world, algorithm, faults).run()


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
