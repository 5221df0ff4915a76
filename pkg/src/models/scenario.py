from __future__ import annotations

import logging
import typing as t

import numpy as np

from src.etc import const
from src.models.errors import InvalidArgumentError, NoCandidateError
from src.models.events import FaultSpec
from src.models.node import CELL_MANAGING_ROLES, Role

if t.TYPE_CHECKING:
    from src.models.topology import NodeId
    from src.models.world import World

logger = logging.getLogger(__name__)

MIN_HEAD_CELL_SIZE: int = 3


def eligible_heads(world: World) -> list[NodeId]:
    """Plain cell managers whose cell has at least three members and a secondary.

    Falls back to any live cell-managing node when no cell qualifies.

    Raises
    ------
    NoCandidateError
        The world has no cell manager at all.
    """
    heads: list[NodeId] = []
    for cell in world.grid.cells.values():
        manager = cell.manager_id
        if manager is None or world.nodes[manager].role is not Role.CELL_MANAGER:
            continue
        if len(world.active_members(cell.cell_id)) >= MIN_HEAD_CELL_SIZE and cell.secondary_id is not None:
            heads.append(manager)
    if heads:
        return sorted(heads)

    fallback = sorted(n.id for n in world.nodes.values() if n.role in CELL_MANAGING_ROLES and n.is_alive)
    if not fallback:
        raise NoCandidateError("The world has no cell manager to fail.")
    logger.debug(f"No cell qualifies as a plain cluster head, falling back to {len(fallback)} managers")
    return fallback


def _pick(rng: np.random.Generator, candidates: t.Sequence[NodeId], what: str) -> NodeId:
    if not candidates:
        raise NoCandidateError(f"The world has no {what} to fail.")
    return int(candidates[int(rng.integers(len(candidates)))])


def scenario(name: str, world: World, seed: int, *, at: int | None = None) -> list[FaultSpec]:
    """Build the fault script of a named scenario.

    Targets are drawn from a dedicated stream over the initial world, so every
    algorithm run with the same seed fails the same node at the same tick.

    Parameters
    ----------
    name : str
        One of the names in `const.SCENARIOS`.
    world : World
        The initial world of the run.
    seed : int
        The run seed.
    at : int | None
        The injection tick. Defaults to mid-run.

    Returns
    -------
    list[FaultSpec]
        The faults to inject.

    Raises
    ------
    InvalidArgumentError
        The scenario name is unknown, or the injection tick is outside the run.
    NoCandidateError
        The world has no node of the role the scenario fails.
    """
    if at is None:
        at = world.config.max_ticks // 2
    elif not 0 <= at < world.config.max_ticks:
        raise InvalidArgumentError(f"Injection tick {at} is outside the run of {world.config.max_ticks} ticks.")
    rng = np.random.default_rng((seed, const.STREAM_SCENARIO))

    match name:
        case "common-node-energy-exhaustion":
            target = _pick(rng, world.role_holders(Role.COMMON_NODE), "common node")
            return [FaultSpec.energy_drain(target, at, const.DRAIN_FRACTION)]
        case "cluster-head-failure":
            target = _pick(rng, eligible_heads(world), "cluster head")
            return [FaultSpec.energy_drain(target, at, const.DRAIN_FRACTION)]
        case "cluster-head-sudden-death":
            target = _pick(rng, eligible_heads(world), "cluster head")
            return [FaultSpec.sudden_death(target, at)]
        case "group-manager-sudden-death":
            target = _pick(rng, world.role_holders(Role.GROUP_MANAGER), "group manager")
            return [FaultSpec.sudden_death(target, at)]
        case "re-clustering":
            target = _pick(rng, eligible_heads(world), "cluster head")
            return [FaultSpec.sudden_death(target, at)]
        case _:
            raise InvalidArgumentError(f"Unknown scenario '{name}', expected one of: {', '.join(const.SCENARIOS)}")


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
