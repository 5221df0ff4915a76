from __future__ import annotations

import math

import attr

METRIC_NAMES: tuple[str, ...] = (
    "recovery_energy",
    "recovery_latency",
    "recovery_rounds",
    "detection_latency",
    "messages_total",
    "energy_total",
    "orphaned",
    "network_faults",
)
"""Metrics every run reports, in output order. Per-kind message counts follow them."""


@attr.define(weakref_slot=False)
class RunMetrics:
    """The outcome of one run."""

    algorithm: str
    node_count: int
    seed: int
    recovery_energy: float = 0.0
    """tx + rx energy of recovery messages, in mJ."""
    recovery_latency: int = 0
    """Ticks from the first recovery send to the last recovery milestone."""
    recovery_rounds: int = 0
    """Distinct ticks carrying a recovery send."""
    detection_latency: float = math.nan
    """Ticks from the first injected fault to its detection, NaN if never detected."""
    messages_total: int = 0
    messages_by_kind: dict[str, int] = attr.field(factory=dict)
    energy_total: float = 0.0
    """Sum over all nodes of initial minus residual energy, in mJ."""
    orphaned: int = 0
    network_faults: int = 0
    """Retired cells, retired groups and orphaning escalations."""
    faults_by_class: dict[str, int] = attr.field(factory=dict)
    """Counts keyed by 'level/class', e.g. 'node/permanent'."""
    ticks: int = 0
    """The tick the run ended at."""

    def values(self) -> dict[str, float]:
        """All numeric metrics by name, per-kind counts as `messages_<kind>`."""
        values = {name: float(getattr(self, name)) for name in METRIC_NAMES}
        for kind in sorted(self.messages_by_kind):
            values[f"messages_{kind}"] = float(self.messages_by_kind[kind])
        return values


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
