# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Reconstruction metrics and the uncertainty-versus-distance profile.

All distances are in scene units.
"""

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from DifLite.geometry.shapes import Shape, surface_normals
from DifLite.geometry.trimesh import MeshIndex, TriMesh, interpolate_normals
from DifLite.utils.analysis import binned_mean, rank_correlation
from DifLite.utils.errors import EmptyMeshError
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)


@dataclass
class MetricsReport:
    chamfer: float
    p2s: float
    normal_consistency: float
    n_samples: int
    seed: int
    chamfer_prior: Optional[float] = None
    p2s_prior: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SigmaProfile:
    edges: np.ndarray
    mean_sigma: np.ndarray
    counts: np.ndarray
    rho: float
    rho_points: float
    n_points: int
    seed: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def n_populated(self) -> int:
        return int(np.sum(self.counts > 0))

    def to_dict(self) -> dict:
        return {
            "edges": np.asarray(self.edges).tolist(),
            "mean_sigma": [None if not np.isfinite(v) else float(v) for v in self.mean_sigma],
            "counts": np.asarray(self.counts).astype(int).tolist(),
            "rho": self.rho,
            "rho_points": self.rho_points,
            "n_points": self.n_points,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SigmaProfile":
        return cls(
            np.asarray(data["edges"], dtype=np.float64),
            np.array([np.nan if v is None else v for v in data["mean_sigma"]], dtype=np.float64),
            np.asarray(data["counts"], dtype=np.int64),
            float(data["rho"]),
            float(data["rho_points"]),
            int(data["n_points"]),
            int(data["seed"]),
        )


def _require_mesh(mesh: TriMesh, name="mesh"):
    if mesh is None or mesh.is_empty:
        raise EmptyMeshError(f"{name} is empty")


def one_sided_distance(a: TriMesh, b: TriMesh, n: int, rng, index_b: MeshIndex = None) -> float:
    """Mean distance from ``n`` area-weighted samples on ``a`` to surface ``b``."""
    points, _, _ = a.sample(n, rng)
    index_b = MeshIndex(b) if index_b is None else index_b
    return float(np.mean(index_b.distance(points)))


def chamfer(
    a: TriMesh, b: TriMesh, n: int = 100_000, seed: int = 0, index_a: MeshIndex = None, index_b: MeshIndex = None
) -> float:
    """Average of the two one-sided mean closest-point distances.

    Prebuilt ``index_a`` / ``index_b`` of the same meshes may be passed in.
    """
    _require_mesh(a, "first mesh")
    _require_mesh(b, "second mesh")
    rng = np.random.default_rng(seed)
    d_ab = one_sided_distance(a, b, n, rng, index_b)
    d_ba = one_sided_distance(b, a, n, rng, index_a)
    return 0.5 * (d_ab + d_ba)


def p2s(gt_points, mesh: TriMesh, index: MeshIndex = None) -> float:
    """Mean distance from ground-truth surface samples to ``mesh``."""
    _require_mesh(mesh)
    gt_points = np.asarray(gt_points, dtype=np.float64).reshape(-1, 3)
    if len(gt_points) == 0:
        raise ValueError("p2s needs at least one point")
    index = MeshIndex(mesh) if index is None else index
    return float(np.mean(index.distance(gt_points)))


def _one_sided_cosine(a: TriMesh, b: TriMesh, n: int, rng, index_b: MeshIndex) -> float:
    points, normals, _ = a.sample(n, rng)
    result = index_b.query(points)
    other = interpolate_normals(b, result["face"], result["barycentric"])
    return float(np.mean(np.einsum("ij,ij->i", normals, other)))


def normal_consistency(
    a: TriMesh, b: TriMesh, n: int = 100_000, seed: int = 0, index_a: MeshIndex = None, index_b: MeshIndex = None
) -> float:
    """``1 - mean cosine`` between sample normals and closest-point normals, symmetrised.

    0 for identical orientation, 2 for opposite orientation.
    """
    _require_mesh(a, "first mesh")
    _require_mesh(b, "second mesh")
    for mesh, name in ((a, "first"), (b, "second")):
        if np.any(np.linalg.norm(mesh.normals, axis=1) < 0.5):
            raise ValueError(f"{name} mesh is not consistently oriented (zero vertex normals)")
    rng = np.random.default_rng(seed)
    cos_ab = _one_sided_cosine(a, b, n, rng, MeshIndex(b) if index_b is None else index_b)
    cos_ba = _one_sided_cosine(b, a, n, rng, MeshIndex(a) if index_a is None else index_a)
    return float(np.clip(1.0 - 0.5 * (cos_ab + cos_ba), 0.0, 2.0))


def chamfer_to_shape(mesh: TriMesh, shape: Shape, n: int = 100_000, seed: int = 0, bbox=None) -> float:
    """Chamfer distance between a mesh and an analytic shape, using ``|sdf|`` one way."""
    _require_mesh(mesh)
    rng = np.random.default_rng(seed)
    points, _, _ = mesh.sample(n, rng)
    d_mesh = float(np.mean(np.abs(shape.sdf(points))))
    bbox = np.array([[-1.0] * 3, [1.0] * 3]) if bbox is None else bbox
    surface = shape.sample_surface(n, rng, bbox)
    d_shape = float(np.mean(MeshIndex(mesh).distance(surface)))
    return 0.5 * (d_mesh + d_shape)


def evaluate_meshes(
    mesh: TriMesh,
    gt_mesh: TriMesh,
    n: int = 100_000,
    seed: int = 0,
    prior_mesh: TriMesh = None,
) -> MetricsReport:
    """Chamfer, P2S and normal consistency of ``mesh`` against ``gt_mesh`` (and the prior surface)."""
    _require_mesh(mesh, "reconstruction")
    _require_mesh(gt_mesh, "ground-truth mesh")
    index = MeshIndex(mesh)
    index_gt = MeshIndex(gt_mesh)
    gt_points, _, _ = gt_mesh.sample(n, np.random.default_rng([seed, 1]))
    report = MetricsReport(
        chamfer=chamfer(mesh, gt_mesh, n, seed, index, index_gt),
        p2s=p2s(gt_points, mesh, index),
        normal_consistency=normal_consistency(mesh, gt_mesh, n, seed, index, index_gt),
        n_samples=n,
        seed=seed,
    )
    if prior_mesh is not None and not prior_mesh.is_empty:
        prior_points, _, _ = prior_mesh.sample(n, np.random.default_rng([seed, 2]))
        report.chamfer_prior = chamfer(mesh, prior_mesh, n, seed, index)
        report.p2s_prior = p2s(prior_points, mesh, index)
    return report


def stratified_points(shape: Shape, n_points: int, max_dist: float, rng, bbox=None) -> np.ndarray:
    """Points at signed offsets uniform in ``[-max_dist, max_dist]`` along surface normals."""
    bbox = np.array([[-1.0] * 3, [1.0] * 3]) if bbox is None else np.asarray(bbox, dtype=np.float64)
    feet = shape.sample_surface(n_points, rng, bbox)
    normals, _ = surface_normals(shape, feet)
    offsets = rng.uniform(-max_dist, max_dist, size=n_points)
    return feet + offsets[:, np.newaxis] * normals


def sigma_profile(
    model,
    target: Shape,
    prior: Shape,
    n_points: int = 20_000,
    bins: int = 12,
    seed: int = 0,
    max_dist: float = 0.5,
    bbox=None,
) -> SigmaProfile:
    """Predicted sigma against ``|sdf|`` over ``[0, max_dist]``.

    ``model`` provides ``sigma_at(points, target, prior)``. The rank correlation
    ``rho`` is taken over the populated bins (centre against mean sigma);
    ``rho_points`` over the raw points.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    rng = np.random.default_rng(seed)
    points = stratified_points(target, n_points, max_dist, rng, bbox)
    dist = np.abs(target.sdf(points))
    sigma = np.asarray(model.sigma_at(points, target, prior), dtype=np.float64)
    edges = np.linspace(0.0, max_dist, bins + 1)
    means, counts = binned_mean(dist, sigma, edges)
    empty = counts == 0
    if np.any(empty):
        logger.warning(f"{int(empty.sum())} empty sigma-profile bin(s) excluded from rho")
    centers = 0.5 * (edges[1:] + edges[:-1])
    rho = rank_correlation(centers[~empty], means[~empty])
    in_range = dist <= max_dist
    rho_points = rank_correlation(dist[in_range], sigma[in_range])
    return SigmaProfile(edges, means, counts, rho, rho_points, n_points, seed)
