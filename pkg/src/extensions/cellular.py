import logging
import math
import typing as t

from src.etc import const
from src.models.actions import (
    Action,
    CancelTimer,
    ChangeRole,
    ChangeStatus,
    Escalate,
    MarkDetected,
    MoveCell,
    RetireCell,
    RetireGroup,
)
from src.models.config import ProactivePolicy
from src.models.energy import Battery, EnergyRank, HealthStatus, cell_health
from src.models.messaging import (
    Ack,
    BackupActivate,
    DeclareFaulty,
    ElectionLevel,
    EnergyShare,
    Envelope,
    Get,
    HealthReport,
    LowEnergyNotice,
    MergeDirective,
    MergeRequest,
    NewManagerAnnounce,
    PromoteSecondary,
    Purpose,
    RateDirective,
    Reminder,
    Scope,
    SleepNotice,
    StatusQuery,
    Update,
)
from src.models.node import (
    CellReportState,
    ElectionState,
    GroupLedger,
    ManagerLedger,
    NodeState,
    NodeStatus,
    Role,
    WatchState,
)
from src.models.plugin import Algorithm, AlgorithmRegistry
from src.models.timer import Timer, TimerEvent
from src.models.topology import CellId, NodeId

logger = logging.getLogger(__name__)


class CellularAlgorithm(Algorithm):
    """Hierarchical cell-based fault management.

    Cell managers poll their members with get/update rounds and report cell health
    to their group manager, which in turn is watched by the base station. Failing
    managers hand over to pre-appointed standbys, falling back to energy elections
    and finally to merging the cell into its neighbours.
    """

    name = "cellular"

    # Setup

    def start(self) -> list[Action]:
        actions: list[Action] = []
        timers = self.config.timers

        for node in self.world.nodes.values():
            if node.unlimited:
                for group in self.world.groups.values():
                    if group.group_manager_id is not None:
                        node.watch[group.group_id] = WatchState(
                            manager_id=group.group_manager_id, last_heard=2 * self.config.latency
                        )
                actions.append(self.set_timer(node.id, TimerEvent.BS_WATCH, self.config.watch_period))
                continue

            if not node.is_active or not node.role.manages_cell:
                continue

            self._init_ledger(node)
            actions.append(self.set_timer(node.id, TimerEvent.IN_CELL_ROUND, 0))
            actions.append(self.set_timer(node.id, TimerEvent.HEALTH_REPORT, timers.out_cell_period))

            if node.role is Role.GROUP_MANAGER:
                self._init_group_ledger(node)
                actions.append(
                    self.set_timer(node.id, TimerEvent.OUT_CELL_ROUND, timers.out_cell_period + self.config.latency)
                )

        logger.debug(f"Cellular protocol armed {len(actions)} timers")
        return actions

    def _init_ledger(self, node: NodeState) -> None:
        assert node.cell_id is not None
        cell = self.world.cell(node.cell_id)
        others = [m for m in cell.member_ids if m != node.id and self.world.nodes[m].is_alive]
        node.ledger = ManagerLedger(
            expected={m for m in others if self.world.nodes[m].is_active},
            sleeping={m for m in others if not self.world.nodes[m].is_active},
        )

    def _init_group_ledger(self, node: NodeState) -> None:
        assert node.group_id is not None
        group = self.world.groups[node.group_id]
        cells: dict[CellId, CellReportState] = {}
        for cell_id in group.cell_ids:
            cell = self.world.cell(cell_id)
            if cell_id == node.cell_id or cell.retired:
                continue
            # A fresh group manager grants every cell one out-cell round of grace
            cells[cell_id] = CellReportState(manager_id=cell.manager_id, reported=True)
        node.group_ledger = GroupLedger(cells=cells)

    # Helpers

    def _delay_to_next(self, period: int, offset: int = 0) -> int:
        """Ticks until the next tick aligned to `period` + `offset`, never zero."""
        return period - ((self.now - offset) % period)

    def _rank_of(self, energy: float) -> EnergyRank:
        return self.config.thresholds.rank(energy / self.config.initial_energy)

    def _should_self_check(self, node: NodeState) -> bool:
        return (
            node.is_active
            and not node.unlimited
            and not node.low_reported
            and not node.hold
            and node.rank(self.config.thresholds) is EnergyRank.LOW
        )

    def _cell_peers(self, node: NodeState) -> list[NodeId]:
        """Active members of the node's cell other than itself."""
        if node.ledger is not None:
            return sorted(node.ledger.expected - node.ledger.suspected - node.ledger.sleeping)
        if node.cell_id is None:
            return []
        return [m for m in self.world.active_members(node.cell_id) if m != node.id]

    def _group_peers(self, node: NodeState) -> list[NodeId]:
        """Managers of the other cells of the node's group."""
        if node.group_id is None:
            return []
        return [m for m in self.world.cell_managers(node.group_id) if m != node.id]

    def _is_viable_member(self, ledger: ManagerLedger, member: NodeId | None) -> bool:
        if member is None or member not in ledger.expected:
            return False
        if member in ledger.suspected or member in ledger.sleeping:
            return False
        energy = ledger.energies.get(member)
        return energy is None or self._rank_of(energy) is not EnergyRank.LOW

    def _cell_health(self, node: NodeState) -> HealthStatus:
        assert node.ledger is not None
        initial = self.config.initial_energy
        batteries = [node.battery]
        for member, energy in node.ledger.energies.items():
            if member in node.ledger.expected and member not in node.ledger.suspected:
                batteries.append(Battery(initial=initial, residual=min(energy, initial)))
        return cell_health(batteries, self.config.thresholds)

    # Hooks

    def on_energy_tick(self, node: NodeState) -> list[Action]:
        if self._should_self_check(node):
            return self.self_check(node)
        return []

    def on_timer(self, node: NodeState, timer: Timer) -> list[Action]:
        match timer.event:
            case TimerEvent.IN_CELL_ROUND:
                return self.in_cell_round(node)
            case TimerEvent.UPDATE_COLLECTION:
                return self.collect_updates(node)
            case TimerEvent.QUERY_DEADLINE:
                return self.handle_missing_member(node, t.cast(NodeId, timer.key))
            case TimerEvent.HEALTH_REPORT:
                return self.report_health(node)
            case TimerEvent.OUT_CELL_ROUND:
                return self.out_cell_round(node)
            case TimerEvent.BS_WATCH:
                return self.base_station_watch(node)
            case TimerEvent.BS_QUERY_DEADLINE:
                return self.declare_group_manager(node, t.cast(int, timer.key))
            case TimerEvent.ELECTION_SETTLE:
                return self.settle_election(node)
            case _:
                return []

    def on_message(self, node: NodeState, envelope: Envelope) -> list[Action]:
        if node.unlimited:
            return self._base_station_message(node, envelope)

        payload = envelope.payload
        if isinstance(payload, (Get, StatusQuery)) and self._should_self_check(node):
            return self.self_check(node)

        match payload:
            case Get():
                node.peers.manager_id = envelope.sender
                return [
                    self.send(node.id, [envelope.sender], Update(location=node.position), Purpose.MAINTENANCE)
                ]
            case Update():
                return self._on_update(node, envelope)
            case StatusQuery():
                return [self.send(node.id, [envelope.sender], Ack(), Purpose.DETECTION, scope=envelope.scope)]
            case Ack():
                return self._on_update(node, envelope)
            case SleepNotice():
                return self._on_sleep_notice(node, envelope)
            case LowEnergyNotice():
                return self._on_low_energy_notice(node, envelope, payload)
            case PromoteSecondary():
                return self._on_promote(node, envelope, payload)
            case DeclareFaulty():
                return self._on_declare_faulty(node, envelope, payload)
            case HealthReport():
                return self._on_health_report(node, envelope, payload)
            case Reminder():
                if node.ledger is None:
                    return []
                node.peers.group_manager_id = envelope.sender
                return [
                    self.send(
                        node.id,
                        [envelope.sender],
                        HealthReport(status=node.ledger.health),
                        Purpose.DETECTION,
                        scope=Scope.GROUP,
                    )
                ]
            case EnergyShare():
                return self._on_energy_share(node, envelope, payload)
            case NewManagerAnnounce():
                return self._on_announce(node, envelope, payload)
            case MergeRequest():
                if node.role is not Role.GROUP_MANAGER or envelope.cell_id is None:
                    return []
                return self.merge_cells(node, envelope.cell_id, Purpose.RECOVERY)
            case MergeDirective():
                return self._on_merge_directive(node, payload)
            case RateDirective():
                node.period_multiplier = payload.period_multiplier
                return []
            case BackupActivate():
                return self._on_backup_activate(node)
            case _:
                return []

    def on_role_change(self, node: NodeState, old: Role, new: Role, cause: str) -> list[Action]:
        actions: list[Action] = []

        if old.manages_cell and not new.manages_cell:
            if node.ledger is not None:
                for member in sorted(node.ledger.pending_queries):
                    actions.append(CancelTimer(node.id, TimerEvent.QUERY_DEADLINE, member))
            node.ledger = None
            for event in (TimerEvent.IN_CELL_ROUND, TimerEvent.UPDATE_COLLECTION, TimerEvent.HEALTH_REPORT):
                actions.append(CancelTimer(node.id, event))

        if old is Role.GROUP_MANAGER and new is not Role.GROUP_MANAGER:
            node.group_ledger = None
            actions.append(CancelTimer(node.id, TimerEvent.OUT_CELL_ROUND))

        if not node.is_active:
            return actions

        timers = self.config.timers
        if new.manages_cell and not old.manages_cell:
            self._init_ledger(node)
            node.peers.manager_id = node.id
            node.peers.secondary_id = None
            actions.append(
                self.set_timer(node.id, TimerEvent.IN_CELL_ROUND, self._delay_to_next(timers.in_cell_period))
            )
            actions.append(
                self.set_timer(node.id, TimerEvent.HEALTH_REPORT, self._delay_to_next(timers.out_cell_period))
            )

        if new is Role.GROUP_MANAGER and old is not Role.GROUP_MANAGER:
            self._init_group_ledger(node)
            node.peers.group_manager_id = node.id
            node.peers.backup_id = None
            actions.append(
                self.set_timer(
                    node.id,
                    TimerEvent.OUT_CELL_ROUND,
                    self._delay_to_next(timers.out_cell_period, self.config.latency),
                )
            )
            if cause in ("backup-activated", "group-elected"):
                actions.extend(self._announce_group_manager(node))

        return actions

    # Self-detection

    def self_check(self, node: NodeState) -> list[Action]:
        """Report a Low battery once and step back from every duty."""
        logger.debug(f"Tick {self.now}: node {node.id} ({node.role.value}) detected its own Low battery")

        if node.role is Role.GROUP_MANAGER:
            return self._step_down_group_manager(node)
        if node.role.manages_cell:
            return self._step_down_cell_manager(node)

        actions: list[Action] = []
        manager = node.peers.manager_id
        if manager is not None and manager != node.id:
            actions.append(self.send(node.id, [manager], SleepNotice(), Purpose.DETECTION))
        actions.append(MarkDetected(node.id))
        node.low_reported = True
        if node.role is Role.SECONDARY_CELL_MANAGER:
            actions.append(ChangeRole(node.id, Role.COMMON_NODE, "asleep"))
        actions.append(ChangeStatus(node.id, NodeStatus.SLEEPING, "low-energy"))
        return actions

    def _step_down_cell_manager(self, node: NodeState) -> list[Action]:
        assert node.ledger is not None
        successor = node.peers.secondary_id if self._is_viable_member(node.ledger, node.peers.secondary_id) else None
        receivers = self._cell_peers(node)
        group_manager = node.peers.group_manager_id
        if group_manager is not None and group_manager != node.id:
            receivers.append(group_manager)

        node.low_reported = True
        actions: list[Action] = [MarkDetected(node.id)]
        actions.append(
            self.send(
                node.id,
                receivers,
                LowEnergyNotice(successor=successor),
                Purpose.RECOVERY,
                scope=Scope.GROUP,
                broadcast=True,
            )
        )
        actions.append(ChangeRole(node.id, Role.COMMON_NODE, "low-energy"))
        node.peers.manager_id = successor
        node.peers.secondary_id = None

        if successor is None:
            actions.extend(self._start_election(node, ElectionLevel.CELL))
        return actions

    def _step_down_group_manager(self, node: NodeState) -> list[Action]:
        assert node.ledger is not None and node.group_ledger is not None
        backup = node.peers.backup_id
        states = {s.manager_id: s for s in node.group_ledger.cells.values() if s.manager_id is not None}
        if backup is not None:
            state = states.get(backup)
            if state is None or state.declared:
                backup = None
            elif state.energy is not None and self._rank_of(state.energy) is EnergyRank.LOW:
                backup = None
        secondary = node.peers.secondary_id
        cell_successor = secondary if self._is_viable_member(node.ledger, secondary) else None

        notice = LowEnergyNotice(successor=backup, cell_successor=cell_successor)
        receivers = self._group_peers(node) + self._cell_peers(node)
        direct = self._neighbor_group_managers(node) + [const.BASE_STATION_ID]

        node.low_reported = True
        actions: list[Action] = [
            MarkDetected(node.id),
            self.send(node.id, receivers, notice, Purpose.RECOVERY, scope=Scope.GROUP, broadcast=True),
            self.send(node.id, direct, notice, Purpose.RECOVERY, scope=Scope.DIRECT),
            ChangeRole(node.id, Role.COMMON_NODE, "low-energy"),
        ]
        node.peers.group_manager_id = backup
        node.peers.backup_id = None
        node.peers.manager_id = cell_successor
        node.peers.secondary_id = None

        if cell_successor is None:
            actions.extend(self._start_election(node, ElectionLevel.CELL))
        return actions

    def _neighbor_group_managers(self, node: NodeState) -> list[NodeId]:
        if node.group_id is None:
            return []
        managers: list[NodeId] = []
        for group_id in self.world.neighbor_groups(node.group_id):
            manager = self.world.groups[group_id].group_manager_id
            if manager is not None:
                managers.append(manager)
        return managers

    # In-cell cycle

    def in_cell_round(self, node: NodeState) -> list[Action]:
        """Ask every expected member for an update."""
        if node.ledger is None:
            return []
        if self._should_self_check(node):
            return self.self_check(node)

        ledger = node.ledger
        ledger.responded = set()
        ledger.round_started = self.now
        period = max(1, math.ceil(self.config.timers.in_cell_period * node.period_multiplier))

        actions: list[Action] = [
            self.set_timer(node.id, TimerEvent.IN_CELL_ROUND, period),
            self.set_timer(node.id, TimerEvent.UPDATE_COLLECTION, 2 * self.config.latency),
        ]
        targets = self._cell_peers(node)
        if not targets:
            return actions

        if self.config.broadcast_gets:
            actions.append(self.send(node.id, targets, Get(), Purpose.MAINTENANCE, broadcast=True))
        else:
            actions.extend(self.send(node.id, [m], Get(), Purpose.MAINTENANCE) for m in targets)
        return actions

    def _on_update(self, node: NodeState, envelope: Envelope) -> list[Action]:
        ledger = node.ledger
        if ledger is None:
            return []
        member = envelope.sender
        ledger.expected.add(member)
        ledger.responded.add(member)
        ledger.sleeping.discard(member)
        ledger.suspected.discard(member)
        ledger.missed[member] = 0
        ledger.energies[member] = envelope.curr_energy

        if ledger.pending_queries.pop(member, None) is not None:
            return [CancelTimer(node.id, TimerEvent.QUERY_DEADLINE, member)]
        return []

    def _on_sleep_notice(self, node: NodeState, envelope: Envelope) -> list[Action]:
        ledger = node.ledger
        if ledger is None:
            return []
        member = envelope.sender
        ledger.expected.discard(member)
        ledger.sleeping.add(member)
        ledger.energies[member] = envelope.curr_energy
        if node.peers.secondary_id == member:
            node.peers.secondary_id = None
        logger.debug(f"Tick {self.now}: cell manager {node.id} marked member {member} asleep")

        if ledger.pending_queries.pop(member, None) is not None:
            return [CancelTimer(node.id, TimerEvent.QUERY_DEADLINE, member)]
        return []

    def collect_updates(self, node: NodeState) -> list[Action]:
        """Close the update window: query silent members, refresh health, keep a standby and the cell density."""
        ledger = node.ledger
        if ledger is None:
            return []

        actions: list[Action] = []
        for member in sorted(ledger.expected - ledger.responded - ledger.suspected - ledger.sleeping):
            if member in ledger.pending_queries:
                continue
            ledger.missed[member] = ledger.missed.get(member, 0) + 1
            ledger.pending_queries[member] = self.now + self.config.timers.query_timeout
            actions.append(self.send(node.id, [member], StatusQuery(), Purpose.DETECTION))
            actions.append(
                self.set_timer(node.id, TimerEvent.QUERY_DEADLINE, self.config.timers.query_timeout, key=member)
            )

        ledger.health = self._cell_health(node)
        actions.extend(self._appoint_secondary(node))
        actions.extend(self.wake_sleeping(node))
        return actions

    def handle_missing_member(self, node: NodeState, member: NodeId) -> list[Action]:
        """The status query to `member` went unanswered, declare it faulty."""
        ledger = node.ledger
        if ledger is None or ledger.pending_queries.pop(member, None) is None:
            return []
        if member in ledger.responded or member in ledger.sleeping:
            return []

        ledger.expected.discard(member)
        ledger.suspected.add(member)
        ledger.energies.pop(member, None)
        if node.peers.secondary_id == member:
            node.peers.secondary_id = None
        logger.debug(f"Tick {self.now}: cell manager {node.id} declared member {member} faulty")

        actions: list[Action] = [MarkDetected(member)]
        receivers = self._cell_peers(node)
        if receivers:
            actions.append(
                self.send(node.id, receivers, DeclareFaulty(subject=member), Purpose.DETECTION, broadcast=True)
            )
        return actions

    def _appoint_secondary(self, node: NodeState) -> list[Action]:
        ledger = node.ledger
        assert ledger is not None
        if self._is_viable_member(ledger, node.peers.secondary_id):
            return []

        candidates = [
            m
            for m in ledger.responded
            if self._is_viable_member(ledger, m) and m in ledger.energies
        ]
        if not candidates:
            node.peers.secondary_id = None
            return []

        best = min(candidates, key=lambda m: (-ledger.energies[m], m))
        node.peers.secondary_id = best
        return [
            self.send(
                node.id, self._cell_peers(node), PromoteSecondary(candidate=best), Purpose.MAINTENANCE, broadcast=True
            )
        ]

    def wake_sleeping(self, node: NodeState) -> list[Action]:
        """Wake sleeping members, highest energy first, while the cell is below its minimum density."""
        ledger = node.ledger
        assert ledger is not None
        needed = self.config.min_cell_density - (len(self._cell_peers(node)) + 1)
        if needed <= 0:
            return []

        initial = self.config.initial_energy
        sleepers = [m for m in ledger.sleeping if ledger.energies.get(m, initial) > 0]
        if not sleepers:
            logger.debug(f"Tick {self.now}: cell {node.cell_id} is below density but has nobody to wake")
            return []

        actions: list[Action] = []
        for member in sorted(sleepers, key=lambda m: (-ledger.energies.get(m, initial), m))[:needed]:
            ledger.sleeping.discard(member)
            ledger.expected.add(member)
            actions.append(ChangeStatus(member, NodeStatus.ACTIVE, "woken"))
        return actions

    # Out-cell cycle

    def report_health(self, node: NodeState) -> list[Action]:
        if node.ledger is None:
            return []
        if self._should_self_check(node):
            return self.self_check(node)

        actions: list[Action] = [self.set_timer(node.id, TimerEvent.HEALTH_REPORT, self.config.timers.out_cell_period)]
        group_manager = node.peers.group_manager_id
        if node.role is not Role.GROUP_MANAGER and group_manager is not None and group_manager != node.id:
            actions.append(
                self.send(
                    node.id,
                    [group_manager],
                    HealthReport(status=node.ledger.health),
                    Purpose.MAINTENANCE,
                    scope=Scope.GROUP,
                )
            )
        return actions

    def _on_health_report(self, node: NodeState, envelope: Envelope, report: HealthReport) -> list[Action]:
        if node.group_ledger is None or envelope.cell_id is None or envelope.group_id != node.group_id:
            return []
        state = node.group_ledger.cells.setdefault(envelope.cell_id, CellReportState())
        state.manager_id = envelope.sender
        state.reported = True
        state.missed = 0
        state.declared = False
        state.health = report.status
        state.energy = envelope.curr_energy
        return []

    def out_cell_round(self, node: NodeState) -> list[Action]:
        """Chase cells that did not report, act on the reports and tell the base station."""
        if node.group_ledger is None:
            return []
        if self._should_self_check(node):
            return self.self_check(node)

        actions: list[Action] = [
            self.set_timer(node.id, TimerEvent.OUT_CELL_ROUND, self.config.timers.out_cell_period)
        ]
        fresh: list[CellId] = []

        for cell_id, state in sorted(node.group_ledger.cells.items()):
            if self.world.cell(cell_id).retired:
                continue
            if state.reported:
                state.reported = False
                state.missed = 0
                fresh.append(cell_id)
                continue
            if state.declared or state.manager_id is None:
                continue

            state.missed += 1
            if state.missed == 1:
                actions.append(
                    self.send(node.id, [state.manager_id], Reminder(), Purpose.DETECTION, scope=Scope.GROUP)
                )
                continue

            actions.extend(self._declare_cell_manager(node, cell_id, state))

        actions.extend(self.gm_proactive(node, fresh))
        actions.extend(self._appoint_backup(node))

        healths = [node.group_ledger.cells[c].health for c in fresh]
        if node.ledger is not None:
            healths.append(node.ledger.health)
        actions.append(
            self.send(
                node.id,
                [const.BASE_STATION_ID],
                HealthReport(status=min(healths, default=HealthStatus.HIGH)),
                Purpose.MAINTENANCE,
                scope=Scope.DIRECT,
            )
        )
        return actions

    def _declare_cell_manager(self, node: NodeState, cell_id: CellId, state: CellReportState) -> list[Action]:
        manager = state.manager_id
        assert manager is not None
        state.declared = True
        state.manager_id = None
        logger.debug(f"Tick {self.now}: group manager {node.id} declared cell manager {manager} faulty")

        receivers = [m for m in self.world.active_members(cell_id) if m != manager]
        actions: list[Action] = [MarkDetected(manager)]
        if not receivers:
            actions.append(RetireCell(cell_id, "empty"))
            return actions
        actions.append(
            self.send(
                node.id,
                receivers,
                DeclareFaulty(subject=manager),
                Purpose.RECOVERY,
                scope=Scope.GROUP,
                broadcast=True,
            )
        )
        return actions

    def gm_proactive(self, node: NodeState, fresh: t.Sequence[CellId]) -> list[Action]:
        """Steer traffic away from freshly reported Low cells, by slowing them down or merging them away."""
        assert node.group_ledger is not None
        actions: list[Action] = []

        for cell_id in fresh:
            state = node.group_ledger.cells[cell_id]
            state.preferred = state.health is HealthStatus.HIGH
            if state.health is not HealthStatus.LOW:
                continue

            logger.debug(f"Tick {self.now}: group manager {node.id} flagged cell {cell_id} Low")
            if self.config.proactive_policy is ProactivePolicy.MERGE:
                actions.extend(self.merge_cells(node, cell_id, Purpose.PROACTIVE))
                continue
            if state.rate_directed:
                continue
            state.rate_directed = True
            actions.append(
                self.send(
                    node.id,
                    self.world.active_members(cell_id),
                    RateDirective(period_multiplier=self.config.rate_multiplier),
                    Purpose.PROACTIVE,
                    scope=Scope.GROUP,
                    broadcast=True,
                )
            )
        return actions

    def _appoint_backup(self, node: NodeState) -> list[Action]:
        assert node.group_ledger is not None
        managers = {
            s.manager_id: s
            for cell_id, s in node.group_ledger.cells.items()
            if s.manager_id is not None and not s.declared and not self.world.cell(cell_id).retired
        }

        current = node.peers.backup_id
        if current is not None and current in managers:
            energy = managers[current].energy
            if energy is None or self._rank_of(energy) is not EnergyRank.LOW:
                return []

        candidates = [
            m for m, s in managers.items() if s.energy is not None and self._rank_of(s.energy) is not EnergyRank.LOW
        ]
        if not candidates:
            node.peers.backup_id = None
            return []

        best = min(candidates, key=lambda m: (-t.cast(float, managers[m].energy), m))
        if best == current:
            return []
        node.peers.backup_id = best
        return [
            self.send(
                node.id,
                self._group_peers(node),
                PromoteSecondary(candidate=best),
                Purpose.MAINTENANCE,
                scope=Scope.GROUP,
                broadcast=True,
            )
        ]

    # Base station

    def base_station_watch(self, node: NodeState) -> list[Action]:
        """Query group managers the base station has not heard from for a whole out-cell period."""
        actions: list[Action] = [self.set_timer(node.id, TimerEvent.BS_WATCH, self.config.watch_period)]
        timeout = self.config.timers.query_timeout

        for group_id, watch in sorted(node.watch.items()):
            if watch.manager_id is None or watch.query_deadline is not None:
                continue
            if self.now - watch.last_heard <= self.config.timers.out_cell_period:
                continue
            watch.query_deadline = self.now + timeout
            actions.append(self.send(node.id, [watch.manager_id], StatusQuery(), Purpose.DETECTION, scope=Scope.DIRECT))
            actions.append(self.set_timer(node.id, TimerEvent.BS_QUERY_DEADLINE, timeout, key=group_id))
        return actions

    def declare_group_manager(self, node: NodeState, group_id: int) -> list[Action]:
        """The group manager did not answer: tell its group and activate the backup."""
        watch = node.watch.get(group_id)
        if watch is None or watch.query_deadline is None or watch.manager_id is None:
            return []
        manager = watch.manager_id
        watch.query_deadline = None
        watch.manager_id = None
        logger.info(f"Tick {self.now}: base station declared group manager {manager} of group {group_id} faulty")

        receivers = [m for m in self.world.cell_managers(group_id) if m != manager]
        cell_id = self.world.nodes[manager].cell_id
        if cell_id is not None:
            receivers += [m for m in self.world.active_members(cell_id) if m != manager and m not in receivers]

        actions: list[Action] = [MarkDetected(manager)]
        if receivers:
            actions.append(
                self.send(
                    node.id,
                    receivers,
                    DeclareFaulty(subject=manager),
                    Purpose.RECOVERY,
                    scope=Scope.DIRECT,
                    broadcast=True,
                )
            )
        backup = self.world.groups[group_id].backup_id
        if backup is not None and backup != manager:
            actions.append(self.send(node.id, [backup], BackupActivate(), Purpose.RECOVERY, scope=Scope.DIRECT))
        return actions

    def _base_station_message(self, node: NodeState, envelope: Envelope) -> list[Action]:
        actions: list[Action] = []
        for group_id, watch in node.watch.items():
            if watch.manager_id == envelope.sender:
                watch.last_heard = self.now
                if watch.query_deadline is not None:
                    watch.query_deadline = None
                    actions.append(CancelTimer(node.id, TimerEvent.BS_QUERY_DEADLINE, group_id))

        payload = envelope.payload
        group_id = envelope.group_id
        if group_id is None:
            return actions

        if isinstance(payload, LowEnergyNotice) and node.watch.get(group_id, None) is not None:
            watch = node.watch[group_id]
            if watch.manager_id == envelope.sender:
                watch.manager_id = payload.successor
                watch.last_heard = self.now
        elif isinstance(payload, NewManagerAnnounce) and payload.level is ElectionLevel.GROUP:
            previous = node.watch.get(group_id)
            if previous is not None and previous.query_deadline is not None:
                actions.append(CancelTimer(node.id, TimerEvent.BS_QUERY_DEADLINE, group_id))
            node.watch[group_id] = WatchState(manager_id=payload.manager, last_heard=self.now)
        return actions

    # Handover

    def _on_low_energy_notice(self, node: NodeState, envelope: Envelope, notice: LowEnergyNotice) -> list[Action]:
        if envelope.group_id != node.group_id:
            return []

        actions: list[Action] = []
        sender = envelope.sender
        if sender == node.peers.group_manager_id:
            actions.extend(self._group_handover(node, notice.successor))
            cell_successor = notice.cell_successor
        else:
            cell_successor = notice.successor

        if envelope.cell_id == node.cell_id and sender == node.peers.manager_id:
            actions.extend(self.promote_secondary(node, cell_successor))
        elif node.group_ledger is not None and envelope.cell_id in node.group_ledger.cells:
            state = node.group_ledger.cells[envelope.cell_id]
            state.manager_id = notice.successor
            state.declared = False
            if node.peers.backup_id == sender:
                node.peers.backup_id = None
        return actions

    def promote_secondary(self, node: NodeState, successor: NodeId | None) -> list[Action]:
        """Re-point a cell member at the standby of its failed manager, promoting the standby itself."""
        node.peers.manager_id = successor
        node.peers.secondary_id = None

        if successor is None:
            return self._start_election(node, ElectionLevel.CELL)
        if successor != node.id:
            return []
        if node.rank(self.config.thresholds) is EnergyRank.LOW:
            logger.debug(f"Tick {self.now}: secondary {node.id} is Low itself and calls an election")
            return self._start_election(node, ElectionLevel.CELL)
        return [ChangeRole(node.id, Role.CELL_MANAGER, "promoted")]

    def _group_handover(self, node: NodeState, successor: NodeId | None) -> list[Action]:
        node.peers.group_manager_id = successor
        node.peers.backup_id = None

        if successor == node.id:
            if node.rank(self.config.thresholds) is not EnergyRank.LOW and node.role.manages_cell:
                return [ChangeRole(node.id, Role.GROUP_MANAGER, "backup-activated")]
            return self._start_election(node, ElectionLevel.GROUP)
        if successor is None and node.role.manages_cell:
            return self._start_election(node, ElectionLevel.GROUP)
        return []

    def _on_promote(self, node: NodeState, envelope: Envelope, promote: PromoteSecondary) -> list[Action]:
        candidate = promote.candidate
        if envelope.scope is Scope.GROUP:
            node.peers.backup_id = candidate
            if candidate == node.id and node.role is Role.CELL_MANAGER:
                return [ChangeRole(node.id, Role.BACKUP_GROUP_NODE, "appointed")]
            if candidate != node.id and node.role is Role.BACKUP_GROUP_NODE:
                return [ChangeRole(node.id, Role.CELL_MANAGER, "replaced")]
            return []

        node.peers.secondary_id = candidate
        if candidate == node.id and node.role is Role.COMMON_NODE:
            return [ChangeRole(node.id, Role.SECONDARY_CELL_MANAGER, "appointed")]
        if candidate != node.id and node.role is Role.SECONDARY_CELL_MANAGER:
            return [ChangeRole(node.id, Role.COMMON_NODE, "replaced")]
        return []

    def _on_declare_faulty(self, node: NodeState, envelope: Envelope, declare: DeclareFaulty) -> list[Action]:
        subject = declare.subject
        if subject == node.id:
            if envelope.sender == node.peers.manager_id:
                # Wrongly declared after a lost answer, rejoin the round
                return [self.send(node.id, [envelope.sender], Update(location=node.position), Purpose.MAINTENANCE)]
            return []

        actions: list[Action] = []
        if subject == node.peers.group_manager_id:
            backup = node.peers.backup_id
            node.peers.group_manager_id = backup
            if backup is None and node.role.manages_cell:
                actions.extend(self._start_election(node, ElectionLevel.GROUP))

        if subject == node.peers.manager_id:
            actions.extend(self.promote_secondary(node, node.peers.secondary_id))
        elif subject == node.peers.secondary_id:
            node.peers.secondary_id = None
        return actions

    def _on_backup_activate(self, node: NodeState) -> list[Action]:
        node.peers.group_manager_id = node.id
        if node.role.manages_cell and node.rank(self.config.thresholds) is not EnergyRank.LOW:
            return [ChangeRole(node.id, Role.GROUP_MANAGER, "backup-activated")]
        logger.debug(f"Tick {self.now}: backup {node.id} cannot take over and calls a group election")
        node.peers.group_manager_id = None
        return self._start_election(node, ElectionLevel.GROUP)

    def _announce_group_manager(self, node: NodeState) -> list[Action]:
        assert node.group_id is not None
        announce = NewManagerAnnounce(manager=node.id, level=ElectionLevel.GROUP)
        members = [
            m
            for cell_id in self.world.groups[node.group_id].cell_ids
            for m in self.world.active_members(cell_id)
            if m != node.id
        ]
        return [
            self.send(node.id, members, announce, Purpose.RECOVERY, scope=Scope.GROUP, broadcast=True),
            self.send(
                node.id,
                self._neighbor_group_managers(node) + [const.BASE_STATION_ID],
                announce,
                Purpose.RECOVERY,
                scope=Scope.DIRECT,
            ),
        ]

    def _on_announce(self, node: NodeState, envelope: Envelope, announce: NewManagerAnnounce) -> list[Action]:
        if envelope.group_id != node.group_id:
            return []

        if announce.level is ElectionLevel.GROUP:
            node.peers.group_manager_id = announce.manager
            node.peers.backup_id = None
            return []

        if envelope.cell_id == node.cell_id:
            node.peers.manager_id = announce.manager
            node.peers.secondary_id = None
        elif node.group_ledger is not None and envelope.cell_id in node.group_ledger.cells:
            state = node.group_ledger.cells[envelope.cell_id]
            state.manager_id = announce.manager
            state.declared = False
            state.reported = True
        return []

    # Elections

    def _start_election(self, node: NodeState, level: ElectionLevel) -> list[Action]:
        if node.election is not None:
            return []

        rank = node.rank(self.config.thresholds)
        node.election = ElectionState(level=level, started=self.now)
        node.election.shares[node.id] = (node.battery.residual, rank)

        if level is ElectionLevel.CELL:
            receivers, scope = self._cell_peers(node), Scope.CELL
        else:
            receivers, scope = self._group_peers(node), Scope.GROUP

        logger.debug(f"Tick {self.now}: node {node.id} joins a {level.name.lower()} election")
        return [
            self.send(
                node.id, receivers, EnergyShare(rank=rank, level=level), Purpose.RECOVERY, scope=scope, broadcast=True
            ),
            self.set_timer(node.id, TimerEvent.ELECTION_SETTLE, 2 * self.config.latency + 1, key=level),
        ]

    def _on_energy_share(self, node: NodeState, envelope: Envelope, share: EnergyShare) -> list[Action]:
        if node.settled_at is not None and envelope.timestamp < node.settled_at:
            return []
        if share.level is ElectionLevel.GROUP and not node.role.manages_cell:
            return []

        actions: list[Action] = []
        if node.election is None:
            actions.extend(self._start_election(node, share.level))
        election = node.election
        assert election is not None
        if election.level is share.level:
            election.shares[envelope.sender] = (envelope.curr_energy, share.rank)
        return actions

    def settle_election(self, node: NodeState) -> list[Action]:
        """Decide an election from the shares collected. Every participant reaches the same result."""
        election = node.election
        node.election = None
        node.settled_at = self.now
        if election is None:
            return []

        shares = election.shares
        if election.level is ElectionLevel.CELL:
            eligible = [m for m, (_, rank) in shares.items() if rank is EnergyRank.HIGH]
        else:
            eligible = [m for m, (_, rank) in shares.items() if rank is not EnergyRank.LOW]
        winner = min(eligible, key=lambda m: (-shares[m][0], m)) if eligible else None

        if election.level is ElectionLevel.CELL:
            return self.elect_new_cm_by_energy(node, election, winner)
        return self.coordinate_gm_election(node, election, winner)

    def elect_new_cm_by_energy(self, node: NodeState, election: ElectionState, winner: NodeId | None) -> list[Action]:
        if winner is None:
            if node.id != election.acting_id:
                return []
            group_manager = node.peers.group_manager_id
            logger.info(f"Tick {self.now}: nobody in cell {node.cell_id} can manage it, requesting a merge")
            if group_manager is None or group_manager == node.id:
                return [Escalate(tuple(sorted(election.shares)), "no group manager to merge into")]
            return [self.send(node.id, [group_manager], MergeRequest(), Purpose.RECOVERY, scope=Scope.GROUP)]

        node.peers.manager_id = winner
        node.peers.secondary_id = None
        if winner != node.id:
            return []

        receivers = self._cell_peers(node)
        group_manager = node.peers.group_manager_id
        if group_manager is not None and group_manager != node.id:
            receivers.append(group_manager)
        return [
            ChangeRole(node.id, Role.CELL_MANAGER, "elected"),
            self.send(
                node.id,
                receivers,
                NewManagerAnnounce(manager=node.id, level=ElectionLevel.CELL),
                Purpose.RECOVERY,
                scope=Scope.GROUP,
                broadcast=True,
            ),
        ]

    def coordinate_gm_election(self, node: NodeState, election: ElectionState, winner: NodeId | None) -> list[Action]:
        if winner is None:
            if node.id != election.acting_id or node.group_id is None:
                return []
            return [RetireGroup(node.group_id, "no viable group manager")]

        node.peers.group_manager_id = winner
        node.peers.backup_id = None
        if winner == node.id:
            return [ChangeRole(node.id, Role.GROUP_MANAGER, "group-elected")]
        return []

    # Merging

    def merge_cells(self, node: NodeState, source: CellId, purpose: Purpose) -> list[Action]:
        """Move every active member of `source` into the best cell of the group and retire `source`."""
        assert node.group_id is not None and node.group_ledger is not None
        grid = self.world.grid
        neighbors = set(grid.neighbors(source))

        candidates: list[tuple[CellId, NodeId, HealthStatus]] = []
        for cell_id, state in node.group_ledger.cells.items():
            if cell_id == source or state.manager_id is None or state.declared or grid.cells[cell_id].retired:
                continue
            if state.health is not HealthStatus.LOW:
                candidates.append((cell_id, state.manager_id, state.health))
        if node.ledger is not None and node.cell_id is not None and node.cell_id != source:
            if node.ledger.health is not HealthStatus.LOW:
                candidates.append((node.cell_id, node.id, node.ledger.health))
        candidates.sort(key=lambda c: (-c[2], c[0]))

        actions: list[Action] = []
        orphans: list[NodeId] = []
        for member in self.world.active_members(source):
            position = self.world.nodes[member].position
            near = grid.cell_side / 2
            tiers = (
                [c for c in candidates if c[0] in neighbors and grid.distance_to_cell(position, c[0]) <= near],
                [c for c in candidates if c[0] in neighbors],
                candidates,
            )
            target = next((tier[0] for tier in tiers if tier), None)
            if target is None:
                orphans.append(member)
                continue
            actions.append(
                self.send(
                    node.id,
                    [member],
                    MergeDirective(target_cell=target[0], manager=target[1]),
                    purpose,
                    scope=Scope.GROUP,
                )
            )

        node.group_ledger.cells.pop(source, None)
        actions.append(RetireCell(source, "merged"))
        if orphans:
            actions.append(Escalate(tuple(orphans), f"no cell of group {node.group_id} can take them"))
        return actions

    def _on_merge_directive(self, node: NodeState, directive: MergeDirective) -> list[Action]:
        node.election = None
        node.peers.manager_id = directive.manager
        node.peers.secondary_id = None
        return [
            MoveCell(node.id, directive.target_cell),
            self.send(node.id, [directive.manager], Update(location=node.position), Purpose.MAINTENANCE),
        ]


def load(registry: AlgorithmRegistry) -> None:
    registry.add(CellularAlgorithm)


def unload(registry: AlgorithmRegistry) -> None:
    registry.remove(CellularAlgorithm.name)


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
