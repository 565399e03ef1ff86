# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module OBJFormat: ASCII Wavefront OBJ (v/vn/f records)."""

import numpy as np
from libpyvinyl.BaseFormat import BaseFormat

from DifLite.utils.io import MeshParseError


def _index(token, count, filename, line_no):
    try:
        idx = int(token)
    except ValueError:
        raise MeshParseError(filename, f"bad index '{token}'", line=line_no)
    if idx == 0:
        raise MeshParseError(filename, "OBJ indices are 1-based, got 0", line=line_no)
    # negative indices count back from the last record so far
    return idx - 1 if idx > 0 else count + idx


class OBJFormat(BaseFormat):
    """Class interfacing ASCII OBJ files."""

    def __init__(self) -> None:
        super().__init__()

    @classmethod
    def format_register(self):
        key = "OBJ"
        description = "ASCII Wavefront OBJ mesh"
        file_extension = ".obj"
        read_kwargs = [""]
        write_kwargs = [""]
        return self._create_format_register(
            key, description, file_extension, read_kwargs, write_kwargs
        )

    @staticmethod
    def direct_convert_formats():
        return []

    @classmethod
    def read(cls, filename: str) -> dict:
        """Read vertices, faces and (if one per vertex) normals.

        Polygons are fan-triangulated; texture coordinates are ignored.
        """
        vertices, normals, faces, face_normals = [], [], [], []
        with open(filename, "r") as fh:
            for line_no, line in enumerate(fh, start=1):
                parts = line.split("#", 1)[0].split()
                if not parts:
                    continue
                record, args = parts[0], parts[1:]
                if record in ("v", "vn"):
                    if len(args) < 3:
                        raise MeshParseError(filename, f"'{record}' needs 3 coordinates", line=line_no)
                    try:
                        xyz = [float(a) for a in args[:3]]
                    except ValueError:
                        raise MeshParseError(filename, f"non-numeric '{record}' record", line=line_no)
                    (vertices if record == "v" else normals).append(xyz)
                elif record == "f":
                    if len(args) < 3:
                        raise MeshParseError(filename, "a face needs at least 3 vertices", line=line_no)
                    v_idx, n_idx = [], []
                    for token in args:
                        fields = token.split("/")
                        v_idx.append(_index(fields[0], len(vertices), filename, line_no))
                        if len(fields) == 3 and fields[2]:
                            n_idx.append(_index(fields[2], len(normals), filename, line_no))
                    for i in range(1, len(v_idx) - 1):
                        faces.append([v_idx[0], v_idx[i], v_idx[i + 1]])
                        if len(n_idx) == len(v_idx):
                            face_normals.append([n_idx[0], n_idx[i], n_idx[i + 1]])

        vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise MeshParseError(filename, f"face index out of range for {len(vertices)} vertices")

        data_dict = {"vertices": vertices, "triangles": faces, "normals": None}
        if normals and len(face_normals) == len(faces):
            per_vertex = np.zeros_like(vertices)
            per_vertex[faces.ravel()] = np.asarray(normals, dtype=np.float64)[np.asarray(face_normals).ravel()]
            data_dict["normals"] = per_vertex
        elif len(normals) == len(vertices):
            data_dict["normals"] = np.asarray(normals, dtype=np.float64)
        return data_dict

    @classmethod
    def write(cls, object, filename: str, key: str = None):
        """Save the data with the `filename`."""
        data_dict = object.get_data()
        vertices = np.asarray(data_dict["vertices"], dtype=np.float64)
        triangles = np.asarray(data_dict["triangles"], dtype=np.int64)
        normals = data_dict.get("normals")
        with open(filename, "w") as fh:
            fh.write(f"# DifLite mesh: {len(vertices)} vertices, {len(triangles)} triangles\n")
            for v in vertices:
                fh.write(f"v {v[0]:.12g} {v[1]:.12g} {v[2]:.12g}\n")
            if normals is not None:
                for n in np.asarray(normals, dtype=np.float64):
                    fh.write(f"vn {n[0]:.12g} {n[1]:.12g} {n[2]:.12g}\n")
                for a, b, c in triangles + 1:
                    fh.write(f"f {a}//{a} {b}//{b} {c}//{c}\n")
            else:
                for a, b, c in triangles + 1:
                    fh.write(f"f {a} {b} {c}\n")

        if key is None:
            original_key = object.key
            key = original_key + "_to_OBJFormat"
        return object.from_file(filename, cls, key)
