# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Mesh Data APIs"""

from libpyvinyl import BaseData

from DifLite.geometry.trimesh import TriMesh
from DifLite.utils.io import format_for_path
from .OBJFormat import OBJFormat
from .PLYFormat import PLYFormat


class MeshData(BaseData):
    """Triangle mesh data mapper"""

    def __init__(
        self,
        key,
        data_dict=None,
        filename=None,
        file_format_class=None,
        file_format_kwargs=None,
    ):
        expected_data = {}

        # Vertex positions in scene units [n, 3]
        expected_data["vertices"] = None
        # 0-based vertex indices of each triangle [m, 3]
        expected_data["triangles"] = None
        # Unit per-vertex normals [n, 3], None when not stored in the file
        expected_data["normals"] = None

        super().__init__(
            key,
            expected_data,
            data_dict,
            filename,
            file_format_class,
            file_format_kwargs,
        )

    @classmethod
    def supported_formats(self):
        format_dict = {}
        self._add_ioformat(format_dict, OBJFormat)
        self._add_ioformat(format_dict, PLYFormat)
        return format_dict

    @classmethod
    def from_file(cls, filename: str, format_class, key: str, **kwargs):
        return cls(
            key,
            filename=filename,
            file_format_class=format_class,
            file_format_kwargs=kwargs,
        )

    @classmethod
    def from_dict(cls, data_dict, key):
        """Create the data class by a python dictionary."""
        return cls(key, data_dict=data_dict)

    @classmethod
    def from_mesh(cls, mesh: TriMesh, key: str):
        return cls.from_dict(
            {"vertices": mesh.vertices, "triangles": mesh.triangles, "normals": mesh.normals}, key
        )

    def to_mesh(self) -> TriMesh:
        data_dict = self.get_data()
        return TriMesh(data_dict["vertices"], data_dict["triangles"], data_dict["normals"])


MESH_FORMATS = {".obj": OBJFormat, ".ply": PLYFormat}


def read_mesh(path) -> TriMesh:
    """Read an OBJ or PLY mesh, the format chosen by extension."""
    format_class = format_for_path(path, MESH_FORMATS)
    return MeshData.from_file(str(path), format_class, "mesh").to_mesh()


def write_mesh(mesh: TriMesh, path, format_class=None) -> MeshData:
    """Write ``mesh``; ``format_class`` defaults to the one matching the extension."""
    if format_class is None:
        format_class = format_for_path(path, MESH_FORMATS)
    return MeshData.from_mesh(mesh, "mesh").write(str(path), format_class)
