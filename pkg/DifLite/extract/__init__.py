# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Grid evaluation and marching cubes."""

from .grid import FieldGrid, evaluate_grid, lattice_points
from .marching_cubes import marching_cubes
