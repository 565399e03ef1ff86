# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Utils io module"""

import base64
from pathlib import Path

import numpy as np


class UnknownFileTypeError(Exception):
    pass


class MeshParseError(Exception):
    """Malformed mesh file.

    :param filename: The file being parsed.
    :param line: 1-based line number (OBJ and PLY header), optional.
    :param offset: Byte offset (PLY body), optional.
    """

    def __init__(self, filename, message, line=None, offset=None):
        self.filename = str(filename)
        self.line = line
        self.offset = offset
        where = ""
        if line is not None:
            where = f":{line}"
        elif offset is not None:
            where = f"@{offset}"
        super().__init__(f"{self.filename}{where}: {message}")


def encode_array(arr) -> str:
    """Encode an array as base64 little-endian float64."""
    data = np.ascontiguousarray(arr, dtype="<f8").ravel()
    return base64.b64encode(data.tobytes()).decode("ascii")


def decode_array(text: str, shape=None) -> np.ndarray:
    """Decode a base64 little-endian float64 array written by :func:`encode_array`."""
    arr = np.frombuffer(base64.b64decode(text.encode("ascii")), dtype="<f8").astype(
        np.float64
    )
    if shape is not None:
        arr = arr.reshape(shape)
    return arr


def format_for_path(path, formats: dict):
    """Select a format class from the file extension.

    :param formats: Mapping of lower-case extension (with dot) to format class.
    """
    suffix = Path(path).suffix.lower()
    if suffix not in formats:
        raise UnknownFileTypeError(
            f"Unsupported file extension '{suffix}' for {path}, "
            f"expected one of {sorted(formats)}"
        )
    return formats[suffix]


def to_jsonable(obj):
    """Convert numpy containers and scalars to JSON types; NaN becomes None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj
