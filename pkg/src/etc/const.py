BASE_STATION_ID: int = 0

DEFAULT_AREA: tuple[float, float] = (120.0, 120.0)
DEFAULT_CELL_SIDE: float = 30.0
DEFAULT_GROUP_DIM: int = 2
DEFAULT_INITIAL_ENERGY: float = 2000.0  # mJ
DEFAULT_NODE_COUNTS: tuple[int, ...] = (40, 50, 60, 70, 80)
DEFAULT_REPLICATIONS: int = 30
DEFAULT_MAX_TICKS: int = 400

QUIESCENCE_PERIODS: int = 3
"""Out-cell periods without any non-routine activity after which a run is considered settled."""

ENERGY_PRECISION: int = 6
"""Decimal places of energy values in trace lines."""

# CSV headers
TRACE_HEADER = "tick,event,sender,receiver,kind,group,cell,energy"
ROLE_LOG_HEADER = "tick,node,old_role,new_role,cause"
SWEEP_HEADER = "node_count,algorithm,metric,mean,stdev,replications,seed_base"

BROADCAST_RECEIVER = "*"

# Independent numpy streams derived from one run seed
STREAM_PLACEMENT: int = 0
STREAM_DELIVERY: int = 1
STREAM_SCENARIO: int = 2
STREAM_SPARES: int = 3

SCENARIOS: tuple[str, ...] = (
    "common-node-energy-exhaustion",
    "cluster-head-failure",
    "cluster-head-sudden-death",
    "group-manager-sudden-death",
    "re-clustering",
)
ALGORITHMS: tuple[str, ...] = ("cellular", "venkataraman", "lbc", "aso")

DRAIN_FRACTION: float = 0.19
"""Battery fraction a potential fault leaves the target with, just under the Low threshold."""

RECOVERY_CAUSES: frozenset[str] = frozenset({"promoted", "elected", "backup-activated", "group-elected"})
"""Role-change causes that complete a recovery step."""

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
