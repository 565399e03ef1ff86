# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module shapes: Analytic signed-distance shapes.

Sign convention: the signed distance is positive inside, negative outside and
zero on the surface. ``outward`` returns the (unnormalized) negative gradient of
that field, i.e. a vector pointing out of the shape.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import ClassVar, Tuple

import numpy as np

from DifLite.utils import as_points, normalize_rows
from DifLite.utils.errors import DegenerateNormalError, ProjectionError

FD_STEP = 1e-4
DEGENERATE_EPS = 1e-12
PROJECTION_TOL = 1e-6
PROJECTION_MAX_ITER = 50
# Substituted when the gradient vanishes (e.g. the centre of a sphere).
FALLBACK_AXIS = np.array([1.0, 0.0, 0.0])


def _vec3(value, name):
    arr = np.asarray(value, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got {value!r}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return arr


def _positive(value, name):
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


class Shape(ABC):
    """Base class of all scene elements."""

    kind: ClassVar[str] = "shape"

    @abstractmethod
    def sdf(self, points: np.ndarray) -> np.ndarray:
        """Signed distance of (N, 3) points, positive inside."""

    def outward(self, points: np.ndarray) -> np.ndarray:
        """Negative SDF gradient by central differences with step :data:`FD_STEP`."""
        return fd_outward(self, points)

    def sample_surface(self, n: int, rng: np.random.Generator, bbox) -> np.ndarray:
        """Draw ``n`` surface points: rejection in a thin shell around the
        surface, then projection onto it."""
        bbox = np.asarray(bbox, dtype=np.float64)
        extent = bbox[1] - bbox[0]
        band = 0.01 * float(np.linalg.norm(extent))
        kept = []
        n_kept = 0
        for _ in range(1000):
            cand = bbox[0] + rng.random((max(4 * n, 65536), 3)) * extent
            cand = cand[np.abs(self.sdf(cand)) < band]
            kept.append(cand)
            n_kept += len(cand)
            if n_kept >= n:
                break
        else:
            raise RuntimeError(
                f"Could not draw {n} surface samples for {self.kind} inside {bbox.tolist()}"
            )
        cand = np.concatenate(kept)[:n]
        projected, residual, converged = project_to_surface(self, cand)
        if not np.all(converged):
            raise ProjectionError(float(residual[~converged].max()), int((~converged).sum()))
        return projected


def fd_outward(shape: Shape, points: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    points = as_points(points)
    grad = np.empty_like(points)
    for axis in range(3):
        offset = np.zeros(3)
        offset[axis] = h
        grad[:, axis] = (shape.sdf(points + offset) - shape.sdf(points - offset)) / (2 * h)
    return -grad


def _unit_or_zero(v):
    unit, norms = normalize_rows(v, DEGENERATE_EPS)
    unit[norms < DEGENERATE_EPS] = 0.0
    return unit


@dataclass(frozen=True, eq=False)
class Sphere(Shape):
    center: np.ndarray
    radius: float
    kind: ClassVar[str] = "sphere"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        object.__setattr__(self, "radius", _positive(self.radius, "radius"))

    def sdf(self, points):
        points = as_points(points)
        return self.radius - np.linalg.norm(points - self.center, axis=1)

    def outward(self, points):
        return _unit_or_zero(as_points(points) - self.center)

    def sample_surface(self, n, rng, bbox):
        directions, _ = normalize_rows(rng.normal(size=(n, 3)))
        return self.center + self.radius * directions


@dataclass(frozen=True, eq=False)
class Torus(Shape):
    """Torus around the z axis through ``center``."""

    center: np.ndarray
    major_radius: float
    minor_radius: float
    kind: ClassVar[str] = "torus"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        object.__setattr__(self, "major_radius", _positive(self.major_radius, "major_radius"))
        object.__setattr__(self, "minor_radius", _positive(self.minor_radius, "minor_radius"))

    def _q(self, points):
        d = as_points(points) - self.center
        rxy = np.hypot(d[:, 0], d[:, 1])
        qx = rxy - self.major_radius
        return d, rxy, qx, np.hypot(qx, d[:, 2])

    def sdf(self, points):
        _, _, _, lq = self._q(points)
        return self.minor_radius - lq

    def outward(self, points):
        d, rxy, qx, lq = self._q(points)
        out = np.zeros_like(d)
        # The z axis is a ridge of the distance field; treat it as degenerate.
        ok = (lq > DEGENERATE_EPS) & (rxy > DEGENERATE_EPS)
        scale = qx[ok] / lq[ok] / rxy[ok]
        out[ok, 0] = scale * d[ok, 0]
        out[ok, 1] = scale * d[ok, 1]
        out[ok, 2] = d[ok, 2] / lq[ok]
        return out


@dataclass(frozen=True, eq=False)
class Box(Shape):
    center: np.ndarray
    half_extents: np.ndarray
    kind: ClassVar[str] = "box"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        he = _vec3(self.half_extents, "half_extents")
        if np.any(he <= 0):
            raise ValueError(f"half_extents must be > 0, got {he.tolist()}")
        object.__setattr__(self, "half_extents", he)

    def sdf(self, points):
        d = np.abs(as_points(points) - self.center) - self.half_extents
        outside = np.linalg.norm(np.maximum(d, 0.0), axis=1)
        inside = np.minimum(d.max(axis=1), 0.0)
        return -(outside + inside)

    def outward(self, points):
        rel = as_points(points) - self.center
        sign = np.where(rel < 0, -1.0, 1.0)
        d = np.abs(rel) - self.half_extents
        out = np.maximum(d, 0.0) * sign
        inner = ~np.any(d > 0, axis=1)
        axis = np.argmax(d[inner], axis=1)
        face = np.zeros((int(inner.sum()), 3))
        face[np.arange(len(axis)), axis] = sign[inner][np.arange(len(axis)), axis]
        out[inner] = face
        return _unit_or_zero(out)


@dataclass(frozen=True, eq=False)
class Capsule(Shape):
    a: np.ndarray
    b: np.ndarray
    radius: float
    kind: ClassVar[str] = "capsule"

    def __post_init__(self):
        object.__setattr__(self, "a", _vec3(self.a, "a"))
        object.__setattr__(self, "b", _vec3(self.b, "b"))
        object.__setattr__(self, "radius", _positive(self.radius, "radius"))

    def _offset(self, points):
        pa = as_points(points) - self.a
        ba = self.b - self.a
        denom = float(ba @ ba)
        h = np.zeros(len(pa)) if denom == 0 else np.clip(pa @ ba / denom, 0.0, 1.0)
        return pa - h[:, np.newaxis] * ba

    def sdf(self, points):
        return self.radius - np.linalg.norm(self._offset(points), axis=1)

    def outward(self, points):
        return _unit_or_zero(self._offset(points))


@dataclass(frozen=True, eq=False)
class Union(Shape):
    members: Tuple[Shape, ...]
    kind: ClassVar[str] = "union"

    def __post_init__(self):
        members = tuple(self.members)
        if len(members) == 0:
            raise ValueError("union needs at least one member")
        object.__setattr__(self, "members", members)

    def _stack(self, points):
        return np.stack([m.sdf(points) for m in self.members])

    def sdf(self, points):
        return self._stack(as_points(points)).max(axis=0)

    def outward(self, points):
        points = as_points(points)
        winner = np.argmax(self._stack(points), axis=0)
        out = np.zeros_like(points)
        for i, member in enumerate(self.members):
            sel = winner == i
            if np.any(sel):
                out[sel] = member.outward(points[sel])
        return out


@dataclass(frozen=True, eq=False)
class Bump:
    """Gaussian radial bump: height ``amplitude * exp(-(1 - cos t) / width**2)``
    where ``t`` is the angle to ``direction`` (about ``exp(-t**2 / (2 width**2))``)."""

    direction: np.ndarray
    amplitude: float
    width: float

    def __post_init__(self):
        direction = _vec3(self.direction, "direction")
        norm = np.linalg.norm(direction)
        if norm < DEGENERATE_EPS:
            raise ValueError("bump direction must be non-zero")
        object.__setattr__(self, "direction", direction / norm)
        object.__setattr__(self, "amplitude", _positive(self.amplitude, "amplitude"))
        object.__setattr__(self, "width", _positive(self.width, "width"))


@dataclass(frozen=True, eq=False)
class BumpSphere(Shape):
    """Star-shaped sphere with Gaussian radial bumps.

    The implicit function ``f = rho(d) - |p - c|`` is divided by its gradient
    norm, which makes the returned value a first-order distance estimate with
    the exact zero level set.
    """

    center: np.ndarray
    radius: float
    bumps: Tuple[Bump, ...] = field(default_factory=tuple)
    kind: ClassVar[str] = "bump_sphere"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        object.__setattr__(self, "radius", _positive(self.radius, "radius"))
        bumps = tuple(self.bumps)
        for bump in bumps:
            if bump.amplitude >= self.radius:
                raise ValueError(
                    f"bump amplitude {bump.amplitude} must be < base radius {self.radius}"
                )
        object.__setattr__(self, "bumps", bumps)

    def _implicit(self, points):
        d = as_points(points) - self.center
        r = np.linalg.norm(d, axis=1)
        safe_r = np.maximum(r, DEGENERATE_EPS)
        dh = d / safe_r[:, np.newaxis]
        rho = np.full(len(d), self.radius)
        tangential = np.zeros_like(d)
        for bump in self.bumps:
            cos_t = dh @ bump.direction
            e = bump.amplitude * np.exp(-(1.0 - cos_t) / bump.width**2)
            rho += e
            tangential += (e / bump.width**2)[:, np.newaxis] * (
                bump.direction - cos_t[:, np.newaxis] * dh
            )
        grad = tangential / safe_r[:, np.newaxis] - dh
        grad[r < DEGENERATE_EPS] = 0.0
        return rho - r, grad

    def sdf(self, points):
        f, grad = self._implicit(points)
        # The radial component of grad is -1, so the norm is >= 1 off the centre.
        norm = np.maximum(np.linalg.norm(grad, axis=1), 1.0)
        return f / norm

    def outward(self, points):
        _, grad = self._implicit(points)
        return -grad


@dataclass(frozen=True, eq=False)
class TriMeshShape(Shape):
    """Closed triangle mesh; sign from angle-weighted pseudo-normals."""

    mesh: "object"
    kind: ClassVar[str] = "tri_mesh"

    def __post_init__(self):
        from DifLite.geometry.trimesh import MeshIndex

        if self.mesh.is_empty:
            raise ValueError("tri_mesh shape needs a non-empty mesh")
        object.__setattr__(self, "_index", MeshIndex(self.mesh))

    def sdf(self, points):
        return self._index.signed_distance(as_points(points))

    def sample_surface(self, n, rng, bbox):
        points, _, _ = self.mesh.sample(n, rng)
        return points


def _unpack(p):
    arr = np.asarray(p, dtype=np.float64)
    return as_points(arr), arr.ndim == 1


def sdf_eval(shape: Shape, p):
    """Signed distance at one 3-vector (returns float) or at (N, 3) points."""
    points, single = _unpack(p)
    values = shape.sdf(points)
    return float(values[0]) if single else values


def surface_normals(shape: Shape, points):
    """Unit outward normals of (N, 3) points.

    :return: (normals, degenerate) where degenerate rows carry :data:`FALLBACK_AXIS`.
    """
    points = as_points(points)
    unit, norms = normalize_rows(shape.outward(points), DEGENERATE_EPS)
    degenerate = ~(norms >= DEGENERATE_EPS)
    unit[degenerate] = FALLBACK_AXIS
    return unit, degenerate


def surface_normal(shape: Shape, p):
    """Unit outward normal at a single point.

    :raises DegenerateNormalError: when the gradient vanishes; the caller
        substitutes a fixed axis.
    """
    points, _ = _unpack(p)
    if len(points) != 1:
        raise ValueError("surface_normal takes a single 3-vector, use surface_normals")
    normals, degenerate = surface_normals(shape, points)
    if degenerate[0]:
        raise DegenerateNormalError(f"zero SDF gradient of {shape.kind} at {points[0].tolist()}")
    return normals[0]


def project_to_surface(shape: Shape, points, tol=PROJECTION_TOL, max_iter=PROJECTION_MAX_ITER):
    """Project (N, 3) points onto the zero level set by q <- q + sdf(q) * n(q).

    :return: (projected points, final |sdf| residual, converged mask)
    """
    q = as_points(points).copy()
    residual = np.abs(shape.sdf(q))
    converged = residual < tol
    active = np.flatnonzero(~converged)
    for _ in range(max_iter):
        if len(active) == 0:
            break
        qa = q[active]
        normals, _ = surface_normals(shape, qa)
        q[active] = qa + shape.sdf(qa)[:, np.newaxis] * normals
        residual[active] = np.abs(shape.sdf(q[active]))
        done = residual[active] < tol
        converged[active[done]] = True
        active = active[~done]
    return q, residual, converged


def nearest_surface_point(shape: Shape, p):
    """Project one 3-vector onto the surface.

    :raises ProjectionError: after :data:`PROJECTION_MAX_ITER` iterations without
        reaching ``|sdf| < 1e-6``.
    """
    points, single = _unpack(p)
    q, residual, converged = project_to_surface(shape, points)
    if not np.all(converged):
        raise ProjectionError(float(residual[~converged].max()), int((~converged).sum()))
    return q[0] if single else q
