# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Top-level package for DifLite."""

__author__ = """DifLite developers"""
__email__ = "diflite@users.noreply.github.com"
__version__ = "0.1.0"

from libpyvinyl.BaseData import DataCollection  # noqa: F401
