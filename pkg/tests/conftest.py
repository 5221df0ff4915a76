import pytest

from src.models.config import SimConfig
from src.models.topology import Position
from src.models.world import World, place_world

HEAD = 1
SECONDARY = 2
CHILDREN = (2, 3, 4, 5, 6)
GROUP_MANAGER = 7
BACKUP = 9

# One group of three cells in a row. Cell (0, 0) holds a plain cluster head with
# five members packed around it, the other two cells hold the group manager and its backup.
LINE_PLACEMENT: list[tuple[int, Position]] = [
    (1, Position(15, 15)),
    (2, Position(12, 12)),
    (3, Position(18, 12)),
    (4, Position(12, 18)),
    (5, Position(18, 18)),
    (6, Position(15, 10)),
    (7, Position(45, 15)),
    (8, Position(50, 15)),
    (9, Position(75, 15)),
    (10, Position(80, 15)),
]
LINE_ENERGIES: dict[int, float] = {
    1: 1900.0,
    2: 1800.0,
    **{node_id: 1500.0 for node_id in (3, 4, 5, 6, 8, 10)},
}


@pytest.fixture()
def line_config() -> SimConfig:
    return SimConfig(
        node_counts=(len(LINE_PLACEMENT),),
        area_width=90.0,
        area_height=30.0,
        cell_side=30.0,
        group_dim=3,
        replications=1,
    )


@pytest.fixture()
def line_world(line_config: SimConfig) -> World:
    return place_world(line_config, LINE_PLACEMENT, energies=LINE_ENERGIES)


@pytest.fixture()
def small_config() -> SimConfig:
    return SimConfig(node_counts=(40,), replications=2, max_ticks=200)


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
