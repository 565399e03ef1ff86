# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module PLYFormat: Binary little-endian PLY meshes."""

import numpy as np
from libpyvinyl.BaseFormat import BaseFormat

from DifLite.utils.io import MeshParseError

PLY_TYPES = {
    "char": "i1",
    "int8": "i1",
    "uchar": "u1",
    "uint8": "u1",
    "short": "<i2",
    "int16": "<i2",
    "ushort": "<u2",
    "uint16": "<u2",
    "int": "<i4",
    "int32": "<i4",
    "uint": "<u4",
    "uint32": "<u4",
    "float": "<f4",
    "float32": "<f4",
    "double": "<f8",
    "float64": "<f8",
}


def _parse_header(filename, fh):
    """Return (elements, body offset); each element is [name, count, properties]."""
    first = fh.readline()
    if first.strip() != b"ply":
        raise MeshParseError(filename, "missing 'ply' magic", line=1)
    elements = []
    fmt = None
    line_no = 1
    while True:
        raw = fh.readline()
        line_no += 1
        if not raw:
            missing = [name for name in ("vertex", "face") if name not in [e[0] for e in elements]]
            what = f"element {missing[0]}" if missing else "end_header"
            raise MeshParseError(filename, f"truncated header, missing {what}", line=line_no)
        parts = raw.decode("ascii", errors="replace").split()
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "format":
            fmt = parts[1] if len(parts) > 1 else None
        elif parts[0] == "element":
            if len(parts) != 3:
                raise MeshParseError(filename, "malformed element line", line=line_no)
            elements.append([parts[1], int(parts[2]), []])
        elif parts[0] == "property":
            if not elements:
                raise MeshParseError(filename, "property before any element", line=line_no)
            if parts[1] == "list":
                if len(parts) != 5 or parts[2] not in PLY_TYPES or parts[3] not in PLY_TYPES:
                    raise MeshParseError(filename, "malformed list property", line=line_no)
                elements[-1][2].append((parts[4], "list", PLY_TYPES[parts[2]], PLY_TYPES[parts[3]]))
            else:
                if len(parts) != 3 or parts[1] not in PLY_TYPES:
                    raise MeshParseError(filename, f"unknown property type '{parts[1]}'", line=line_no)
                elements[-1][2].append((parts[2], "scalar", PLY_TYPES[parts[1]], None))
        elif parts[0] == "end_header":
            break
        else:
            raise MeshParseError(filename, f"unexpected header keyword '{parts[0]}'", line=line_no)
    if fmt != "binary_little_endian":
        raise MeshParseError(filename, f"only binary_little_endian PLY is supported, got '{fmt}'")
    names = [e[0] for e in elements]
    for required in ("vertex", "face"):
        if required not in names:
            raise MeshParseError(filename, f"header has no element {required}", line=line_no)
    return elements, fh.tell()


def _read_faces(filename, buf, offset, count, props):
    if len(props) != 1 or props[0][1] != "list":
        raise MeshParseError(filename, "face element must hold a single list property", offset=offset)
    _, _, count_type, index_type = props[0]
    tri_dtype = np.dtype([("n", count_type), ("idx", index_type, (3,))])
    end = offset + count * tri_dtype.itemsize
    if end <= len(buf):
        block = np.frombuffer(buf, dtype=tri_dtype, count=count, offset=offset)
        if np.all(block["n"] == 3):
            return block["idx"].astype(np.int64), end
    # general polygons, fan-triangulated
    faces = []
    c_size, i_size = np.dtype(count_type).itemsize, np.dtype(index_type).itemsize
    for _ in range(count):
        if offset + c_size > len(buf):
            raise MeshParseError(filename, "file ends inside the face list", offset=offset)
        n = int(np.frombuffer(buf, dtype=count_type, count=1, offset=offset)[0])
        offset += c_size
        if offset + n * i_size > len(buf):
            raise MeshParseError(filename, "file ends inside the face list", offset=offset)
        idx = np.frombuffer(buf, dtype=index_type, count=n, offset=offset).astype(np.int64)
        offset += n * i_size
        if n < 3:
            raise MeshParseError(filename, f"face with {n} vertices", offset=offset)
        for i in range(1, n - 1):
            faces.append([idx[0], idx[i], idx[i + 1]])
    return np.asarray(faces, dtype=np.int64).reshape(-1, 3), offset


class PLYFormat(BaseFormat):
    """Class interfacing binary little-endian PLY files."""

    def __init__(self) -> None:
        super().__init__()

    @classmethod
    def format_register(self):
        key = "PLY"
        description = "Binary little-endian PLY mesh"
        file_extension = ".ply"
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
        """Read the data from the file with the `filename` to a dictionary."""
        with open(filename, "rb") as fh:
            elements, offset = _parse_header(filename, fh)
            fh.seek(0)
            buf = fh.read()

        data_dict = {"vertices": None, "triangles": None, "normals": None}
        for name, count, props in elements:
            if name == "face":
                data_dict["triangles"], offset = _read_faces(filename, buf, offset, count, props)
                continue
            if any(p[1] == "list" for p in props):
                raise MeshParseError(filename, f"list properties in element {name} are not supported", offset=offset)
            dtype = np.dtype([(p[0], p[2]) for p in props])
            end = offset + count * dtype.itemsize
            if end > len(buf):
                raise MeshParseError(
                    filename, f"file ends inside element {name} ({len(buf)} < {end} bytes)", offset=offset
                )
            if name == "vertex":
                block = np.frombuffer(buf, dtype=dtype, count=count, offset=offset)
                for axis in "xyz":
                    if axis not in dtype.names:
                        raise MeshParseError(filename, f"vertex element lacks property {axis}")
                data_dict["vertices"] = np.column_stack([block[a].astype(np.float64) for a in "xyz"])
                if all(n in dtype.names for n in ("nx", "ny", "nz")):
                    data_dict["normals"] = np.column_stack(
                        [block[n].astype(np.float64) for n in ("nx", "ny", "nz")]
                    )
            offset = end

        triangles = data_dict["triangles"]
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(data_dict["vertices"])):
            raise MeshParseError(filename, "face index out of range")
        return data_dict

    @classmethod
    def write(cls, object, filename: str, key: str = None):
        """Save the data with the `filename`."""
        data_dict = object.get_data()
        vertices = np.asarray(data_dict["vertices"], dtype="<f8").reshape(-1, 3)
        triangles = np.asarray(data_dict["triangles"], dtype="<i4").reshape(-1, 3)
        normals = data_dict.get("normals")

        vertex_fields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
        if normals is not None:
            vertex_fields += [("nx", "<f8"), ("ny", "<f8"), ("nz", "<f8")]
        vertex_block = np.zeros(len(vertices), dtype=vertex_fields)
        for i, axis in enumerate("xyz"):
            vertex_block[axis] = vertices[:, i]
            if normals is not None:
                vertex_block["n" + axis] = np.asarray(normals, dtype="<f8")[:, i]
        face_block = np.zeros(len(triangles), dtype=[("n", "u1"), ("idx", "<i4", (3,))])
        face_block["n"] = 3
        face_block["idx"] = triangles

        header = ["ply", "format binary_little_endian 1.0", "comment DifLite mesh"]
        header.append(f"element vertex {len(vertices)}")
        header += [f"property double {name}" for name, _ in vertex_fields]
        header.append(f"element face {len(triangles)}")
        header.append("property list uchar int vertex_indices")
        header.append("end_header")
        with open(filename, "wb") as fh:
            fh.write(("\n".join(header) + "\n").encode("ascii"))
            fh.write(vertex_block.tobytes())
            fh.write(face_block.tobytes())

        if key is None:
            original_key = object.key
            key = original_key + "_to_PLYFormat"
        return object.from_file(filename, cls, key)
