# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""FieldGridData package for DifLite."""

from .FieldGridData import FieldGridData
from .GridH5Format import GridH5Format
