import numpy as np
import pytest

from src.models.errors import InvalidArgumentError, NoCandidateError
from src.models.topology import (
    CellRecord,
    Position,
    assign_nodes,
    build_grid,
    elect_all,
    elect_cell_manager,
    form_groups,
)


def test_build_grid_rounds_partial_cells_up():
    grid = build_grid(100.0, 50.0, 30.0)
    assert (grid.columns, grid.rows) == (4, 2)
    assert len(grid.cells) == 8
    assert grid.bounds((3, 1)) == (90.0, 30.0, 100.0, 50.0)


@pytest.mark.parametrize("dims", [(0.0, 10.0, 5.0), (10.0, -1.0, 5.0), (10.0, 10.0, 0.0)])
def test_build_grid_rejects_non_positive(dims):
    with pytest.raises(InvalidArgumentError):
        build_grid(*dims)


def test_cell_index_puts_max_edge_in_last_cell():
    grid = build_grid(90.0, 60.0, 30.0)
    assert grid.cell_index(Position(0, 0)) == (0, 0)
    assert grid.cell_index(Position(30, 29.99)) == (1, 0)
    assert grid.cell_index(Position(90, 60)) == (2, 1)
    with pytest.raises(InvalidArgumentError):
        grid.cell_index(Position(90.01, 10))


def test_assign_nodes_partitions_every_node():
    rng = np.random.default_rng(11)
    grid = build_grid(120.0, 120.0, 30.0)
    nodes = [(i + 1, Position(float(x), float(y))) for i, (x, y) in enumerate(rng.uniform(0, 120, (60, 2)))]

    assigned = assign_nodes(grid, nodes)

    members = [m for cell in assigned.cells.values() for m in cell.member_ids]
    assert sorted(members) == [node_id for node_id, _ in nodes]
    assert all(not cell.member_ids for cell in grid.cells.values())
    for node_id, position in nodes:
        assert node_id in assigned.cells[assigned.cell_index(position)].member_ids


def test_assign_nodes_rejects_duplicate_ids():
    grid = build_grid(60.0, 60.0, 30.0)
    with pytest.raises(InvalidArgumentError):
        assign_nodes(grid, [(1, Position(1, 1)), (1, Position(40, 40))])


def test_form_groups_clips_blocks_at_the_edge():
    grid = build_grid(150.0, 90.0, 30.0)  # 5 x 3 cells
    groups = form_groups(grid, 2)

    assert [g.group_id for g in groups] == list(range(6))
    assert groups[0].cell_ids == {(0, 0), (1, 0), (0, 1), (1, 1)}
    assert groups[2].cell_ids == {(4, 0), (4, 1)}
    assert groups[5].cell_ids == {(4, 2)}
    all_cells = [c for g in groups for c in g.cell_ids]
    assert sorted(all_cells) == sorted(grid.cells)

    with pytest.raises(InvalidArgumentError):
        form_groups(grid, 0)


def test_elect_cell_manager_breaks_ties_by_lowest_id():
    cell = CellRecord(cell_id=(0, 0), member_ids={4, 7, 9})
    election = elect_cell_manager(cell, {4: 10.0, 7: 12.0, 9: 12.0})
    assert election.winner == 7
    assert election.runner_up == 9

    single = elect_cell_manager(cell, {9: 1.0})
    assert (single.winner, single.runner_up) == (9, None)

    with pytest.raises(NoCandidateError):
        elect_cell_manager(cell, {})


def test_cell_record_check():
    with pytest.raises(InvalidArgumentError):
        CellRecord(cell_id=(0, 0), member_ids={1}, manager_id=2)
    with pytest.raises(InvalidArgumentError):
        CellRecord(cell_id=(0, 0), member_ids={1}, manager_id=1, secondary_id=1)


def test_elect_all_leaves_inputs_untouched():
    grid = assign_nodes(
        build_grid(60.0, 30.0, 30.0),
        [(1, Position(5, 5)), (2, Position(10, 5)), (3, Position(40, 5)), (4, Position(50, 5))],
    )
    groups = form_groups(grid, 2)
    energies = {1: 5.0, 2: 9.0, 3: 7.0, 4: 3.0}

    elected, elected_groups = elect_all(grid, groups, energies)

    assert grid.cells[(0, 0)].manager_id is None
    assert groups[0].group_manager_id is None
    assert (elected.cells[(0, 0)].manager_id, elected.cells[(0, 0)].secondary_id) == (2, 1)
    assert (elected.cells[(1, 0)].manager_id, elected.cells[(1, 0)].secondary_id) == (3, 4)
    assert elected_groups[0].group_manager_id == 2
    assert elected_groups[0].backup_id == 3
    assert all(cell.group_id == 0 for cell in elected.cells.values())


def test_distance_and_neighbours():
    grid = build_grid(90.0, 90.0, 30.0)
    assert grid.neighbors((1, 1)) == [(1, 0), (0, 1), (2, 1), (1, 2)]
    assert grid.neighbors((0, 0)) == [(1, 0), (0, 1)]
    assert grid.distance_to_cell(Position(15, 15), (0, 0)) == 0.0
    assert grid.distance_to_cell(Position(15, 15), (1, 0)) == 15.0


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
