from __future__ import annotations

import typing as t


class SimulationError(Exception):
    """Base class for every error raised by this application."""


class InvalidArgumentError(SimulationError, ValueError):
    """Raised when an operation receives an argument outside of its domain."""


class NoCandidateError(SimulationError):
    """Raised when an election has nobody to elect."""


class NoDataError(SimulationError):
    """Raised when an aggregate is requested over an empty collection."""


class IllegalStateError(SimulationError):
    """Raised when an operation is attempted by an entity in the wrong state, such as a dead sender."""


class InvariantViolationError(SimulationError):
    """Raised when the engine detects a broken global invariant. Aborts the run."""

    def __init__(self, tick: int, diagnostic: str) -> None:
        super().__init__(f"Invariant violated at tick {tick}: {diagnostic}")
        self.tick: int = tick
        """The tick at which the violation was detected."""
        self.diagnostic: str = diagnostic
        """A human-readable description of the violation."""

    def __reduce__(self) -> tuple[t.Any, ...]:
        return (type(self), (self.tick, self.diagnostic))


class SweepFailedError(SimulationError):
    """Raised when a run inside a sweep aborts."""

    def __init__(self, seed: int, node_count: int, algorithm: str, cause: BaseException) -> None:
        super().__init__(f"Run failed (seed={seed}, nodes={node_count}, algorithm={algorithm}): {cause}")
        self.seed: int = seed
        self.node_count: int = node_count
        self.algorithm: str = algorithm
        self.cause: BaseException = cause

    def __reduce__(self) -> tuple[t.Any, ...]:
        return (type(self), (self.seed, self.node_count, self.algorithm, self.cause))


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
