from __future__ import annotations

import enum
import logging
import os
import re
import typing as t

import attr

from src.etc import const
from src.models.energy import RadioParams, Thresholds
from src.models.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

CONFIG_LINE_REGEX = re.compile(r"^\s*(?P<identifier>[A-Za-z_][A-Za-z0-9_-]*)\s*=\s*(?P<value>[^#]*?)\s*(#.*)?$")
COMMENT_REGEX = re.compile(r"^\s*(#.*)?$")


class ProactivePolicy(enum.Enum):
    """What a group manager does about a cell reporting Low health."""

    RATE = "rate"
    """Instruct the cell to report less frequently."""

    MERGE = "merge"
    """Merge the cell's members into healthier neighbouring cells."""


def _positive(_: t.Any, attribute: attr.Attribute, value: float) -> None:
    if value <= 0:
        raise InvalidArgumentError(f"'{attribute.name}' must be positive, got {value}.")


def _non_negative(_: t.Any, attribute: attr.Attribute, value: float) -> None:
    if value < 0:
        raise InvalidArgumentError(f"'{attribute.name}' must not be negative, got {value}.")


def _probability(_: t.Any, attribute: attr.Attribute, value: float) -> None:
    if not 0 <= value <= 1:
        raise InvalidArgumentError(f"'{attribute.name}' must be within [0, 1], got {value}.")


@attr.frozen(weakref_slot=False)
class Timers:
    """Protocol periods, all in ticks."""

    in_cell_period: int = attr.field(default=10, validator=_positive)
    """Interval between two get/update rounds of a cell manager."""
    out_cell_period: int = attr.field(default=30, validator=_positive)
    """Interval between two health reports to the group manager. Longer than the in-cell period."""
    query_timeout: int = attr.field(default=2, validator=_positive)
    """Time a manager waits for the answer to a status query."""
    energy_check_period: int = attr.field(default=1, validator=_positive)
    """Interval of residual energy self-monitoring."""

    def __attrs_post_init__(self) -> None:
        if self.out_cell_period <= self.in_cell_period:
            raise InvalidArgumentError(
                f"out_cell_period ({self.out_cell_period}) must be greater than in_cell_period ({self.in_cell_period})."
            )


@attr.frozen(weakref_slot=False)
class SimConfig:
    """Settings of a single run or a whole sweep."""

    node_counts: tuple[int, ...] = const.DEFAULT_NODE_COUNTS
    area_width: float = attr.field(default=const.DEFAULT_AREA[0], validator=_positive)
    area_height: float = attr.field(default=const.DEFAULT_AREA[1], validator=_positive)
    cell_side: float = attr.field(default=const.DEFAULT_CELL_SIDE, validator=_positive)
    group_dim: int = attr.field(default=const.DEFAULT_GROUP_DIM, validator=_positive)
    initial_energy: float = attr.field(default=const.DEFAULT_INITIAL_ENERGY, validator=_positive)
    replications: int = attr.field(default=const.DEFAULT_REPLICATIONS, validator=_positive)
    algorithms: tuple[str, ...] = ("cellular",)
    scenario: str = "cluster-head-failure"
    seed: int = 0
    """Seed of replicate 0. Replicate i uses seed + i."""

    timers: Timers = attr.field(factory=Timers)
    radio: RadioParams = attr.field(factory=RadioParams)
    thresholds: Thresholds = attr.field(factory=Thresholds)

    latency: int = attr.field(default=1, validator=_positive)
    """Ticks between a send and its delivery."""
    loss_probability: float = attr.field(default=0.0, validator=_probability)
    max_ticks: int = attr.field(default=const.DEFAULT_MAX_TICKS, validator=_positive)
    quiescence_periods: int = attr.field(default=const.QUIESCENCE_PERIODS, validator=_positive)

    broadcast_gets: bool = True
    """Send one broadcast Get per in-cell round instead of one unicast per member."""
    flood: bool = False
    """Re-broadcast every scoped broadcast once from each receiver within radio range."""
    radio_range: float = attr.field(default=const.DEFAULT_CELL_SIDE, validator=_positive)
    min_cell_density: int = attr.field(default=1, validator=_non_negative)
    """Active members below which a cell manager wakes sleeping members."""
    sleeping_fraction: float = attr.field(default=0.0, validator=_probability)
    """Share of nodes deployed as sleeping spares."""
    proactive_policy: ProactivePolicy = ProactivePolicy.RATE
    rate_multiplier: float = attr.field(default=2.0, validator=_positive)
    idle_drain: float = attr.field(default=0.0, validator=_non_negative)
    """Energy in mJ every active node spends per energy check."""
    watch_period: int = attr.field(default=1, validator=_positive)
    """Interval of the base station's group manager watch."""
    workers: int = attr.field(default=1, validator=_positive)
    """Processes used to run replications in parallel."""

    out: str | None = None
    trace: str | None = None

    def __attrs_post_init__(self) -> None:
        if not self.node_counts or any(n < 1 for n in self.node_counts):
            raise InvalidArgumentError(f"Node counts must be positive, got {self.node_counts}.")
        for algorithm in self.algorithms:
            if algorithm not in const.ALGORITHMS:
                raise InvalidArgumentError(
                    f"Unknown algorithm '{algorithm}', expected one of: {', '.join(const.ALGORITHMS)}"
                )
        if self.scenario not in const.SCENARIOS:
            raise InvalidArgumentError(
                f"Unknown scenario '{self.scenario}', expected one of: {', '.join(const.SCENARIOS)}"
            )
        if self.timers.query_timeout < 2 * self.latency:
            raise InvalidArgumentError(
                f"query_timeout ({self.timers.query_timeout}) must cover a round trip of {2 * self.latency} ticks."
            )

    @classmethod
    def from_options(cls, options: t.Mapping[str, t.Any], base: SimConfig | None = None) -> SimConfig:
        """Build a config from flat option names, as found in config files and on the command line.

        Parameters
        ----------
        options : Mapping[str, Any]
            Option name to value. Values may be raw strings or already converted.
            Dashes and underscores in names are equivalent.
        base : SimConfig | None, optional
            The config to override, by default the built-in defaults.

        Returns
        -------
        SimConfig
            The resulting config.

        Raises
        ------
        InvalidArgumentError
            An option is unknown or has an invalid value.
        """
        base = base or cls()
        top: dict[str, t.Any] = {}
        nested: dict[str, dict[str, t.Any]] = {"timers": {}, "radio": {}, "thresholds": {}}

        for raw_name, raw_value in options.items():
            name = raw_name.replace("-", "_").lower()
            if name not in OPTIONS:
                raise InvalidArgumentError(f"Unknown option '{raw_name}'.")
            section, field, parser = OPTIONS[name]
            try:
                value = parser(raw_value) if isinstance(raw_value, str) else raw_value
            except ValueError as e:
                raise InvalidArgumentError(f"Invalid value for '{raw_name}': {raw_value!r} ({e})") from e

            if name == "area":
                top["area_width"], top["area_height"] = value
            elif section is None:
                top[field] = value
            else:
                nested[section][field] = value

        for section, values in nested.items():
            if values:
                top[section] = attr.evolve(getattr(base, section), **values)

        return attr.evolve(base, **top)


def parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean")


def parse_int_list(value: str) -> tuple[int, ...]:
    """Parse '40,50,60' into a tuple of ints."""
    return tuple(int(part) for part in value.split(",") if part.strip())


def parse_str_list(value: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in value.split(",") if part.strip())


def parse_area(value: str) -> tuple[float, float]:
    """Parse 'WIDTHxHEIGHT', e.g. '120x120'."""
    width, sep, height = value.lower().partition("x")
    if not sep:
        raise ValueError("expected WIDTHxHEIGHT")
    return float(width), float(height)


def _optional_str(value: str) -> str | None:
    return value or None


OPTIONS: dict[str, tuple[str | None, str, t.Callable[[str], t.Any]]] = {
    "nodes": (None, "node_counts", parse_int_list),
    "area": (None, "area", parse_area),
    "cell_side": (None, "cell_side", float),
    "group_dim": (None, "group_dim", int),
    "initial_energy": (None, "initial_energy", float),
    "replications": (None, "replications", int),
    "algorithm": (None, "algorithms", parse_str_list),
    "scenario": (None, "scenario", str),
    "seed": (None, "seed", int),
    "latency": (None, "latency", int),
    "loss": (None, "loss_probability", float),
    "max_ticks": (None, "max_ticks", int),
    "quiescence_periods": (None, "quiescence_periods", int),
    "broadcast_gets": (None, "broadcast_gets", parse_bool),
    "flood": (None, "flood", parse_bool),
    "radio_range": (None, "radio_range", float),
    "min_cell_density": (None, "min_cell_density", int),
    "sleeping_fraction": (None, "sleeping_fraction", float),
    "proactive_policy": (None, "proactive_policy", ProactivePolicy),
    "rate_multiplier": (None, "rate_multiplier", float),
    "idle_drain": (None, "idle_drain", float),
    "watch_period": (None, "watch_period", int),
    "workers": (None, "workers", int),
    "out": (None, "out", _optional_str),
    "trace": (None, "trace", _optional_str),
    "in_cell_period": ("timers", "in_cell_period", int),
    "out_cell_period": ("timers", "out_cell_period", int),
    "query_timeout": ("timers", "query_timeout", int),
    "energy_check_period": ("timers", "energy_check_period", int),
    "elec_cost": ("radio", "elec_cost", float),
    "amp_cost": ("radio", "amp_cost", float),
    "message_bits": ("radio", "message_bits", int),
    "low_threshold": ("thresholds", "low", float),
    "high_threshold": ("thresholds", "high", float),
}
"""Every option accepted in config files, as (section, field, parser)."""


def load_config_file(path: str | os.PathLike[str]) -> dict[str, str]:
    """Read a flat `key = value` config file.

    Blank lines and `#` comments are ignored. Values are returned as raw strings,
    conversion happens in `SimConfig.from_options`.

    Raises
    ------
    InvalidArgumentError
        A line is malformed or names an unknown option.
    OSError
        The file could not be read.
    """
    options: dict[str, str] = {}

    with open(path) as config_file:
        for lineno, line in enumerate(config_file.readlines(), start=1):
            if COMMENT_REGEX.match(line):
                continue
            match = CONFIG_LINE_REGEX.match(line)
            if not match:
                raise InvalidArgumentError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")

            name = match.group("identifier").replace("-", "_").lower()
            if name not in OPTIONS:
                raise InvalidArgumentError(f"{path}:{lineno}: unknown option '{match.group('identifier')}'")
            options[name] = match.group("value").strip()

    logger.debug(f"Loaded {len(options)} options from {path}")
    return options


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
