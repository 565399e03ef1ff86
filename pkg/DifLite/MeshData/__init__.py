# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""MeshData package for DifLite."""

from .MeshData import MeshData, MESH_FORMATS, read_mesh, write_mesh
from .OBJFormat import OBJFormat
from .PLYFormat import PLYFormat
