# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module trimesh: Triangle meshes and closest-triangle queries."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from DifLite.utils import as_points, normalize_rows

AREA_EPS = 1e-12
NORMAL_TOL = 1e-6

# Closest-point regions returned by closest_point_on_triangles
REGION_FACE = 0
REGION_VERTEX = (1, 2, 3)
REGION_EDGE = (4, 5, 6)  # AB, BC, CA


@dataclass(eq=False)
class TriMesh:
    """Indexed triangle mesh.

    :param vertices: (V, 3) float64 positions in scene units.
    :param triangles: (F, 3) int64 vertex indices, counter-clockwise seen from outside.
    :param normals: (V, 3) unit per-vertex normals. Angle-weighted face normals when omitted.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.normals is None:
            self.normals = self.vertex_pseudo_normals()
        else:
            self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3)))

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self):
        tri = self.vertices[self.triangles]
        return tri[:, 0], tri[:, 1], tri[:, 2]

    def face_cross(self) -> np.ndarray:
        a, b, c = self.corners()
        return np.cross(b - a, c - a)

    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_cross(), axis=1)

    def face_normals(self) -> np.ndarray:
        unit, _ = normalize_rows(self.face_cross())
        return unit

    def corner_angles(self) -> np.ndarray:
        """(F, 3) interior angle at each triangle corner."""
        a, b, c = self.corners()
        angles = np.empty((self.n_triangles, 3))
        for k, (p, q, r) in enumerate(((a, b, c), (b, c, a), (c, a, b))):
            u, _ = normalize_rows(q - p)
            v, _ = normalize_rows(r - p)
            angles[:, k] = np.arccos(np.clip(np.einsum("ij,ij->i", u, v), -1.0, 1.0))
        return angles

    def vertex_pseudo_normals(self) -> np.ndarray:
        """Angle-weighted sum of incident face normals, normalized."""
        acc = np.zeros((self.n_vertices, 3))
        if not self.is_empty:
            weighted = self.corner_angles()[:, :, np.newaxis] * self.face_normals()[:, np.newaxis, :]
            np.add.at(acc, self.triangles.ravel(), weighted.reshape(-1, 3))
        unit, norms = normalize_rows(acc)
        unit[norms < AREA_EPS] = 0.0
        return unit

    def validate(self):
        """Check index range, triangle areas and normal lengths.

        :raises ValueError: on the first violated invariant.
        """
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= self.n_vertices):
            raise ValueError(
                f"triangle indices must lie in [0, {self.n_vertices}), "
                f"got [{self.triangles.min()}, {self.triangles.max()}]"
            )
        if not np.all(np.isfinite(self.vertices)):
            raise ValueError("vertices must be finite")
        if self.is_empty:
            return
        areas = self.areas()
        if np.any(areas <= AREA_EPS):
            bad = int(np.argmin(areas))
            raise ValueError(f"triangle {bad} is degenerate (area {areas[bad]:.3e})")
        if self.normals.shape != self.vertices.shape:
            raise ValueError(
                f"normals shape {self.normals.shape} does not match vertices {self.vertices.shape}"
            )
        lengths = np.linalg.norm(self.normals, axis=1)
        if np.any(np.abs(lengths - 1.0) > NORMAL_TOL):
            raise ValueError("vertex normals must be unit length")

    def flipped(self) -> "TriMesh":
        """Same surface with the opposite orientation."""
        return TriMesh(self.vertices.copy(), self.triangles[:, ::-1].copy(), -self.normals)

    def transformed(self, rotation=None, translation=None, scale=1.0) -> "TriMesh":
        rotation = np.eye(3) if rotation is None else np.asarray(rotation, dtype=np.float64)
        translation = np.zeros(3) if translation is None else np.asarray(translation, dtype=np.float64)
        vertices = scale * self.vertices @ rotation.T + translation
        return TriMesh(vertices, self.triangles.copy(), self.normals @ rotation.T)

    def sample(self, n: int, rng: np.random.Generator):
        """Area-weighted surface samples.

        :return: (points (n, 3), unit normals (n, 3), face indices (n,))
        """
        if self.is_empty:
            raise ValueError("cannot sample an empty mesh")
        areas = self.areas()
        faces = rng.choice(self.n_triangles, size=n, p=areas / areas.sum())
        r1 = np.sqrt(rng.random(n))
        r2 = rng.random(n)
        bary = np.stack([1.0 - r1, r1 * (1.0 - r2), r1 * r2], axis=1)
        tri = self.triangles[faces]
        points = np.einsum("ij,ijk->ik", bary, self.vertices[tri])
        normals = interpolate_normals(self, faces, bary)
        return points, normals, faces


def interpolate_normals(mesh: TriMesh, faces, bary) -> np.ndarray:
    """Barycentric blend of vertex normals, falling back to the face normal."""
    blended = np.einsum("ij,ijk->ik", bary, mesh.normals[mesh.triangles[faces]])
    unit, norms = normalize_rows(blended)
    bad = norms < 1e-8
    if np.any(bad):
        unit[bad] = mesh.face_normals()[faces[bad]]
    return unit


def closest_point_on_triangles(p, a, b, c):
    """Closest point of triangles (a, b, c) to points p, all (M, 3), row-wise.

    Region classification after Ericson, *Real-Time Collision Detection*, 5.1.5.

    :return: (closest (M, 3), barycentric (M, 3), region (M,))
    """
    ab, ac, ap = b - a, c - a, p - a
    bp, cp = p - b, p - c

    def dot(x, y):
        return np.einsum("ij,ij->i", x, y)

    d1, d2 = dot(ab, ap), dot(ac, ap)
    d3, d4 = dot(ab, bp), dot(ac, bp)
    d5, d6 = dot(ab, cp), dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    m = len(p)
    bary = np.zeros((m, 3))
    region = np.full(m, -1, dtype=np.int64)
    free = np.ones(m, dtype=bool)

    def assign(mask, code, weights):
        sel = free & mask
        bary[sel] = weights[sel] if weights.ndim == 2 else weights
        region[sel] = code
        free[sel] = False

    with np.errstate(divide="ignore", invalid="ignore"):
        assign((d1 <= 0) & (d2 <= 0), REGION_VERTEX[0], np.array([1.0, 0.0, 0.0]))
        assign((d3 >= 0) & (d4 <= d3), REGION_VERTEX[1], np.array([0.0, 1.0, 0.0]))
        v = d1 / (d1 - d3)
        assign((vc <= 0) & (d1 >= 0) & (d3 <= 0), REGION_EDGE[0], np.stack([1 - v, v, 0 * v], axis=1))
        assign((d6 >= 0) & (d5 <= d6), REGION_VERTEX[2], np.array([0.0, 0.0, 1.0]))
        w = d2 / (d2 - d6)
        assign((vb <= 0) & (d2 >= 0) & (d6 <= 0), REGION_EDGE[2], np.stack([1 - w, 0 * w, w], axis=1))
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        assign(
            (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0),
            REGION_EDGE[1],
            np.stack([0 * w, 1 - w, w], axis=1),
        )
        denom = 1.0 / (va + vb + vc)
        v, w = vb * denom, vc * denom
        assign(np.ones(m, dtype=bool), REGION_FACE, np.stack([1 - v - w, v, w], axis=1))

    closest = bary[:, 0:1] * a + bary[:, 1:2] * b + bary[:, 2:3] * c
    return closest, bary, region


class MeshIndex:
    """Closest-triangle queries on a fixed mesh.

    Candidates come from a KD-tree over triangle centroids: any triangle at
    distance ``d`` from a query has its centroid within ``d + r_max`` where
    ``r_max`` is the largest centroid-to-corner radius. The first ``k``
    centroid neighbours give an upper bound on ``d``.
    """

    def __init__(self, mesh: TriMesh, chunk_size: int = 1024, max_pairs: int = 500_000):
        if mesh.is_empty:
            raise ValueError("cannot index an empty mesh")
        self.mesh = mesh
        self.chunk_size = chunk_size
        self.max_pairs = max_pairs
        self._a, self._b, self._c = mesh.corners()
        centroids = (self._a + self._b + self._c) / 3.0
        self._tree = cKDTree(centroids)
        self._r_max = float(
            max(np.linalg.norm(x - centroids, axis=1).max() for x in (self._a, self._b, self._c))
        )
        self._face_normals = mesh.face_normals()
        self._vertex_normals = mesh.vertex_pseudo_normals()
        self._edge_normals, self._face_edges = self._edge_pseudo_normals()

    def _edge_pseudo_normals(self):
        tri = self.mesh.triangles
        # local edges AB, BC, CA
        pairs = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        keys = np.sort(pairs, axis=1)
        _, edge_id = np.unique(keys, axis=0, return_inverse=True)
        edge_id = edge_id.reshape(-1)
        n_edges = int(edge_id.max()) + 1
        acc = np.zeros((n_edges, 3))
        np.add.at(acc, edge_id, np.tile(self._face_normals, (3, 1)))
        unit, _ = normalize_rows(acc)
        face_edges = edge_id.reshape(3, -1).T
        return unit, face_edges

    def _distances(self, points, faces):
        closest, _, _ = closest_point_on_triangles(
            points, self._a[faces], self._b[faces], self._c[faces]
        )
        return np.linalg.norm(points - closest, axis=1)

    def _nearest_faces(self, points):
        n = len(points)
        k = min(8, self.mesh.n_triangles)
        _, knn = self._tree.query(points, k=k)
        knn = knn.reshape(n, k)
        bound = self._distances(np.repeat(points, k, axis=0), knn.ravel()).reshape(n, k).min(axis=1)
        candidates = self._tree.query_ball_point(points, bound + self._r_max + 1e-9)
        counts = np.array([len(c) for c in candidates])
        rows = np.repeat(np.arange(n), counts)
        faces = np.concatenate([np.asarray(c, dtype=np.int64) for c in candidates])

        best_dist = np.full(n, np.inf)
        best_face = np.zeros(n, dtype=np.int64)
        for start in range(0, len(rows), self.max_pairs):
            r = rows[start : start + self.max_pairs]
            f = faces[start : start + self.max_pairs]
            d = self._distances(points[r], f)
            order = np.lexsort((d, r))
            r, f, d = r[order], f[order], d[order]
            first = np.ones(len(r), dtype=bool)
            first[1:] = r[1:] != r[:-1]
            r, f, d = r[first], f[first], d[first]
            better = d < best_dist[r]
            best_dist[r[better]] = d[better]
            best_face[r[better]] = f[better]
        return best_face

    def query(self, points):
        """Closest point on the mesh for each of the (N, 3) points.

        :return: dict with ``distance`` (N,), ``face`` (N,), ``closest`` (N, 3),
            ``barycentric`` (N, 3) and ``region`` (N,)
        """
        points = as_points(points)
        faces = np.empty(len(points), dtype=np.int64)
        for start in range(0, len(points), self.chunk_size):
            faces[start : start + self.chunk_size] = self._nearest_faces(
                points[start : start + self.chunk_size]
            )
        closest, bary, region = closest_point_on_triangles(
            points, self._a[faces], self._b[faces], self._c[faces]
        )
        return {
            "distance": np.linalg.norm(points - closest, axis=1),
            "face": faces,
            "closest": closest,
            "barycentric": bary,
            "region": region,
        }

    def distance(self, points) -> np.ndarray:
        return self.query(points)["distance"]

    def pseudo_normals(self, result) -> np.ndarray:
        """Angle-weighted pseudo-normal of the closest feature (face, edge or vertex)."""
        faces, region = result["face"], result["region"]
        normals = self._face_normals[faces].copy()
        tri = self.mesh.triangles[faces]
        for corner, code in enumerate(REGION_VERTEX):
            sel = region == code
            normals[sel] = self._vertex_normals[tri[sel, corner]]
        for local, code in enumerate(REGION_EDGE):
            sel = region == code
            normals[sel] = self._edge_normals[self._face_edges[faces[sel], local]]
        return normals

    def signed_distance(self, points) -> np.ndarray:
        """Distance to the mesh, positive inside."""
        points = as_points(points)
        result = self.query(points)
        outside = np.einsum("ij,ij->i", points - result["closest"], self.pseudo_normals(result)) > 0
        return np.where(outside, -result["distance"], result["distance"])
