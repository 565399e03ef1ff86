# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""SceneData package for DifLite."""

from .SceneData import SceneData
from .SceneJSONFormat import SceneJSONFormat
