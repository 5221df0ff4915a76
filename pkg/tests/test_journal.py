from src.etc import const
from src.models.journal import Journal, RoleEntry, TraceEntry, TraceEvent, roles_path
from src.models.messaging import Purpose
from src.models.node import Role


def make_entry(event: TraceEvent, *, receiver: int | None = 4, purpose: Purpose = Purpose.RECOVERY) -> TraceEntry:
    return TraceEntry(
        tick=12,
        event=event,
        sender=3,
        receiver=receiver,
        kind="low_energy_notice",
        group=1,
        cell=(2, 0),
        energy=379.123456789,
        purpose=purpose,
    )


def test_trace_line_format():
    assert make_entry(TraceEvent.SEND, receiver=None).display_content == (
        "12,send,3,*,low_energy_notice,1,2:0,379.123457"
    )
    assert make_entry(TraceEvent.DROP_FOREIGN_CELL).display_content.startswith("12,drop-foreign-cell,3,4,")


def test_role_line_format():
    entry = RoleEntry(
        tick=5, node=2, old_role=Role.SECONDARY_CELL_MANAGER, new_role=Role.CELL_MANAGER, cause="promoted"
    )
    assert entry.display_content == "5,2,SecondaryCellManager,CellManager,promoted"


def test_transmissions_filter():
    journal = Journal()
    journal.record_message(make_entry(TraceEvent.SEND))
    journal.record_message(make_entry(TraceEvent.DELIVER))
    journal.record_message(make_entry(TraceEvent.FORWARD, purpose=Purpose.MAINTENANCE))
    journal.record_message(make_entry(TraceEvent.DROP_LOST))

    assert len(journal.transmissions()) == 2
    assert len(journal.transmissions(purpose=Purpose.RECOVERY)) == 1
    assert journal.transmissions(kind="get") == []


def test_write_creates_trace_and_role_log(tmp_path):
    journal = Journal()
    journal.record_message(make_entry(TraceEvent.SEND))
    journal.record_role(
        RoleEntry(tick=1, node=2, old_role=Role.COMMON_NODE, new_role=Role.CELL_MANAGER, cause="elected")
    )

    journal.write(tmp_path / "trace.csv")

    trace_lines = (tmp_path / "trace.csv").read_text().splitlines()
    role_lines = (tmp_path / "trace.roles.csv").read_text().splitlines()
    assert trace_lines[0] == const.TRACE_HEADER
    assert len(trace_lines) == 2
    assert role_lines == [const.ROLE_LOG_HEADER, "1,2,CommonNode,CellManager,elected"]


def test_roles_path():
    assert roles_path("out/run.csv") == "out/run.roles.csv"
    assert roles_path("out/run.log") == "out/run.log.roles.csv"


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
