# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module scene: Build shapes from (and back to) JSON-compatible specs.

A shape spec is a mapping with a ``type`` key, e.g.::

    {"type": "sphere", "center": [0, 0, 0], "radius": 0.5}
    {"type": "union", "members": [{...}, {...}]}
    {"type": "bump_sphere", "center": [0, 0, 0], "radius": 0.5,
     "bumps": [{"direction": [0, 0, 1], "amplitude": 0.08, "width": 0.3}]}
    {"type": "tri_mesh", "path": "mesh.obj"}

Errors are reported as :class:`ConfigError` with the dotted key path.
"""

from pathlib import Path

import numpy as np

from DifLite.geometry.shapes import Box, Bump, BumpSphere, Capsule, Sphere, Torus, TriMeshShape, Union
from DifLite.utils.errors import ConfigError

REQUIRED_KEYS = {
    "sphere": ("center", "radius"),
    "torus": ("center", "major_radius", "minor_radius"),
    "box": ("center", "half_extents"),
    "capsule": ("a", "b", "radius"),
    "union": ("members",),
    "bump_sphere": ("center", "radius"),
    "tri_mesh": ("path",),
}


def _require(spec, key, path):
    if key not in spec:
        raise ConfigError(f"{path}.{key}", "missing required key")
    return spec[key]


def _build(factory, path, **kwargs):
    try:
        return factory(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as err:
        raise ConfigError(path, str(err)) from err


def shape_from_spec(spec, path: str = "shape", base_dir=None):
    """Build a :class:`~DifLite.geometry.shapes.Shape` from its spec.

    :param path: Dotted key path of ``spec`` inside the config, used in error messages.
    :param base_dir: Directory that relative ``tri_mesh`` paths resolve against.
    """
    if not isinstance(spec, dict):
        raise ConfigError(path, f"expected a shape mapping, got {type(spec).__name__}")
    kind = _require(spec, "type", path)
    if kind not in REQUIRED_KEYS:
        raise ConfigError(f"{path}.type", f"unknown shape type '{kind}', expected one of {sorted(REQUIRED_KEYS)}")
    values = {key: _require(spec, key, path) for key in REQUIRED_KEYS[kind]}

    if kind == "sphere":
        return _build(Sphere, path, **values)
    if kind == "torus":
        return _build(Torus, path, **values)
    if kind == "box":
        return _build(Box, path, **values)
    if kind == "capsule":
        return _build(Capsule, path, **values)
    if kind == "union":
        members = values["members"]
        if not isinstance(members, list) or len(members) == 0:
            raise ConfigError(f"{path}.members", "union needs a non-empty list of shapes")
        return Union(
            tuple(
                shape_from_spec(member, f"{path}.members.{i}", base_dir)
                for i, member in enumerate(members)
            )
        )
    if kind == "bump_sphere":
        bumps = []
        for i, bump in enumerate(spec.get("bumps", [])):
            bump_path = f"{path}.bumps.{i}"
            if not isinstance(bump, dict):
                raise ConfigError(bump_path, "expected a bump mapping")
            bumps.append(
                _build(
                    Bump,
                    bump_path,
                    **{key: _require(bump, key, bump_path) for key in ("direction", "amplitude", "width")},
                )
            )
        return _build(BumpSphere, path, bumps=tuple(bumps), **values)

    # tri_mesh
    from DifLite.MeshData import read_mesh

    mesh_path = Path(values["path"])
    if base_dir is not None and not mesh_path.is_absolute():
        mesh_path = Path(base_dir) / mesh_path
    if not mesh_path.is_file():
        raise ConfigError(f"{path}.path", f"mesh file {mesh_path} does not exist")
    return _build(TriMeshShape, path, mesh=read_mesh(mesh_path))


def shape_to_spec(shape) -> dict:
    """Inverse of :func:`shape_from_spec` for analytic shapes."""

    def vec(v):
        return [float(x) for x in np.asarray(v)]

    if isinstance(shape, Sphere):
        return {"type": "sphere", "center": vec(shape.center), "radius": shape.radius}
    if isinstance(shape, Torus):
        return {
            "type": "torus",
            "center": vec(shape.center),
            "major_radius": shape.major_radius,
            "minor_radius": shape.minor_radius,
        }
    if isinstance(shape, Box):
        return {"type": "box", "center": vec(shape.center), "half_extents": vec(shape.half_extents)}
    if isinstance(shape, Capsule):
        return {"type": "capsule", "a": vec(shape.a), "b": vec(shape.b), "radius": shape.radius}
    if isinstance(shape, Union):
        return {"type": "union", "members": [shape_to_spec(m) for m in shape.members]}
    if isinstance(shape, BumpSphere):
        return {
            "type": "bump_sphere",
            "center": vec(shape.center),
            "radius": shape.radius,
            "bumps": [
                {"direction": vec(b.direction), "amplitude": b.amplitude, "width": b.width}
                for b in shape.bumps
            ],
        }
    raise TypeError(f"no spec for shape of type {type(shape).__name__}")


def bbox_from_spec(value, path: str = "scene.bbox") -> np.ndarray:
    try:
        bbox = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as err:
        raise ConfigError(path, f"expected [[xmin, ymin, zmin], [xmax, ymax, zmax]]: {err}") from err
    if bbox.shape != (2, 3):
        raise ConfigError(path, f"expected shape (2, 3), got {bbox.shape}")
    if np.any(bbox[1] <= bbox[0]):
        raise ConfigError(path, "bbox minimum must be below maximum on every axis")
    return bbox
