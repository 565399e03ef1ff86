# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""SceneCalculators package for DifLite."""

from .GroundTruthCalculator import GroundTruthCalculator
