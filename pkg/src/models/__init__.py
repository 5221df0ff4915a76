from .actions import *
from .baseline import *
from .config import *
from .energy import *
from .errors import *
from .events import *
from .journal import *
from .messaging import *
from .metrics import *
from .node import *
from .plugin import *
from .simulation import *
from .timer import *
from .topology import *
from .world import *

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
