from __future__ import annotations

import enum
import math
import typing as t

import attr

from src.models.errors import InvalidArgumentError, NoDataError

NJ_TO_MJ: float = 1e-6
PJ_TO_MJ: float = 1e-9


class EnergyRank(enum.IntEnum):
    """The energy grade of a single node."""

    LOW = 0
    MEDIUM = 1
    HIGH = 2


class HealthStatus(enum.IntEnum):
    """The energy grade of a whole cell, as reported to its group manager.

    Higher values are healthier, so statuses can be compared directly.
    """

    LOW = 0
    MEDIUM = 1
    HIGH = 2


def _positive(_: t.Any, attribute: attr.Attribute, value: float) -> None:
    if value <= 0:
        raise InvalidArgumentError(f"'{attribute.name}' must be positive, got {value}.")


@attr.frozen(weakref_slot=False)
class RadioParams:
    """First-order radio model constants."""

    elec_cost: float = attr.field(default=50.0, validator=_positive)
    """Electronics energy in nJ per bit, paid by both transmitter and receiver."""
    amp_cost: float = attr.field(default=100.0, validator=_positive)
    """Amplifier energy in pJ per bit per square meter, paid by the transmitter."""
    message_bits: int = attr.field(default=2000, validator=_positive)
    """Size of every protocol message in bits."""


@attr.frozen(weakref_slot=False)
class Thresholds:
    """Battery fractions separating the energy ranks. Both bounds are inclusive."""

    low: float = 0.20
    """At or below this fraction a node is Low."""
    high: float = 0.50
    """At or above this fraction a node is High."""

    def __attrs_post_init__(self) -> None:
        if not 0 <= self.low < self.high <= 1:
            raise InvalidArgumentError(f"Thresholds must satisfy 0 <= low < high <= 1, got {self.low}, {self.high}.")

    def rank(self, fraction: float) -> EnergyRank:
        """Map a battery fraction to an energy rank."""
        if fraction <= self.low:
            return EnergyRank.LOW
        if fraction >= self.high:
            return EnergyRank.HIGH
        return EnergyRank.MEDIUM


DEFAULT_THRESHOLDS = Thresholds()


@attr.frozen(weakref_slot=False)
class Battery:
    """The battery of a sensor node, in mJ."""

    initial: float
    """The energy the node was deployed with."""
    residual: float
    """The energy left."""

    def __attrs_post_init__(self) -> None:
        if not 0 <= self.residual <= self.initial:
            raise InvalidArgumentError(f"Battery residual {self.residual} outside of [0, {self.initial}].")

    @classmethod
    def full(cls, initial: float) -> Battery:
        return cls(initial=initial, residual=initial)

    @property
    def fraction(self) -> float:
        """Residual energy as a fraction of the initial energy."""
        if self.initial == 0:
            raise InvalidArgumentError("Battery has zero initial energy.")
        return self.residual / self.initial

    @property
    def is_empty(self) -> bool:
        return self.residual == 0


def tx_cost(params: RadioParams, bits: int, distance: float) -> float:
    """Energy in mJ to transmit `bits` over `distance` meters.

    Parameters
    ----------
    params : RadioParams
        The radio constants to use.
    bits : int
        The message size in bits.
    distance : float
        The distance to the (farthest) receiver in meters.

    Returns
    -------
    float
        elec_cost * bits + amp_cost * bits * distance^2, converted to mJ.

    Raises
    ------
    InvalidArgumentError
        A negative size or distance was passed.
    """
    if bits < 0 or distance < 0:
        raise InvalidArgumentError(f"tx_cost needs non-negative bits and distance, got {bits}, {distance}.")
    return params.elec_cost * bits * NJ_TO_MJ + params.amp_cost * bits * distance * distance * PJ_TO_MJ


def rx_cost(params: RadioParams, bits: int) -> float:
    """Energy in mJ to receive `bits`."""
    if bits < 0:
        raise InvalidArgumentError(f"rx_cost needs non-negative bits, got {bits}.")
    return params.elec_cost * bits * NJ_TO_MJ


def drain(battery: Battery, amount: float) -> Battery:
    """Take `amount` mJ out of a battery, saturating at zero.

    Callers check `Battery.is_empty` on the result to flag the node dead.
    """
    if amount < 0:
        raise InvalidArgumentError(f"Cannot drain a negative amount ({amount}).")
    if amount == 0:
        return battery
    return Battery(initial=battery.initial, residual=max(0.0, battery.residual - amount))


def classify_rank(battery: Battery, thresholds: Thresholds = DEFAULT_THRESHOLDS) -> EnergyRank:
    """Rank a node by its residual battery fraction."""
    return thresholds.rank(battery.fraction)


def cell_health(members: t.Sequence[Battery], thresholds: Thresholds = DEFAULT_THRESHOLDS) -> HealthStatus:
    """Aggregate member batteries into a cell health status.

    The mean member fraction goes through the same thresholds as a single node.

    Raises
    ------
    NoDataError
        The cell has no members.
    """
    if not members:
        raise NoDataError("Cannot compute the health of an empty cell.")

    mean = math.fsum(b.fraction for b in members) / len(members)
    return HealthStatus(thresholds.rank(mean).value)


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
