# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module marching_cubes: Isosurface extraction with the 256-case table.

Vertices are welded by lattice edge: the edge starting at node ``(i, j, k)``
along ``axis`` has id ``((i * ny + j) * nz + k) * 3 + axis`` whichever cell
produced it. Triangles point their right-hand normal toward decreasing values.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from DifLite.extract.grid import FieldGrid
from DifLite.extract.tables import CORNER_OFFSETS, EDGE_CORNERS, MC_EDGES, MC_TRIANGLES
from DifLite.geometry.trimesh import AREA_EPS, TriMesh
from DifLite.utils import get_threads
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)

_EDGE_BASE = np.minimum(CORNER_OFFSETS[EDGE_CORNERS[:, 0]], CORNER_OFFSETS[EDGE_CORNERS[:, 1]])
_EDGE_AXIS = np.argmax(np.abs(CORNER_OFFSETS[EDGE_CORNERS[:, 1]] - CORNER_OFFSETS[EDGE_CORNERS[:, 0]]), axis=1)


def _layer_edges(values, iso, lo, hi):
    """Global edge ids, shape (T, 3), of the triangles of cells with x index in [lo, hi)."""
    nx, ny, nz = values.shape
    below = values < iso
    cube = np.zeros((hi - lo, ny - 1, nz - 1), dtype=np.int64)
    for c, (ox, oy, oz) in enumerate(CORNER_OFFSETS):
        cube |= below[lo + ox : hi + ox, oy : ny - 1 + oy, oz : nz - 1 + oz].astype(np.int64) << c
    active = np.nonzero(MC_EDGES[cube] != 0)
    if len(active[0]) == 0:
        return np.zeros((0, 3), dtype=np.int64)
    cells = np.column_stack(active) + np.array([lo, 0, 0])
    rows = MC_TRIANGLES[cube[active]][:, :15].reshape(-1, 5, 3)
    cell_of = np.repeat(np.arange(len(cells)), 5)
    rows = rows.reshape(-1, 3)
    keep = rows[:, 0] >= 0
    rows, cell_of = rows[keep], cell_of[keep]
    node = cells[cell_of][:, np.newaxis, :] + _EDGE_BASE[rows]
    return ((node[..., 0] * ny + node[..., 1]) * nz + node[..., 2]) * 3 + _EDGE_AXIS[rows]


def marching_cubes(grid: FieldGrid, iso: float = 0.5, threads=None) -> TriMesh:
    """Triangulate the ``iso`` level set of ``grid``.

    Returns an empty mesh (``mesh.is_empty``) when no cell edge crosses ``iso``.
    Degenerate triangles (area <= 1e-12) are dropped.
    """
    values = grid.values
    nx, ny, nz = values.shape
    threads = get_threads(threads)
    layer = max(1, int(np.ceil((nx - 1) / (4 * threads))))
    bounds = [(lo, min(lo + layer, nx - 1)) for lo in range(0, nx - 1, layer)]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        parts = list(executor.map(lambda b: _layer_edges(values, iso, *b), bounds))
    edges = np.concatenate(parts) if parts else np.zeros((0, 3), dtype=np.int64)
    if len(edges) == 0:
        logger.warning(f"No cell crosses iso level {iso}, returning an empty mesh")
        return TriMesh.empty()

    unique_ids, inverse = np.unique(edges.ravel(), return_inverse=True)
    triangles = inverse.reshape(-1, 3)

    axis = unique_ids % 3
    node = np.column_stack(np.unravel_index(unique_ids // 3, (nx, ny, nz)))
    step = np.eye(3, dtype=np.int64)[axis]
    v0 = values[node[:, 0], node[:, 1], node[:, 2]]
    far = node + step
    v1 = values[far[:, 0], far[:, 1], far[:, 2]]
    t = (iso - v0) / (v1 - v0)
    vertices = grid.bbox[0] + (node + t[:, np.newaxis] * step) * grid.spacing

    tri = vertices[triangles]
    area = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    triangles = triangles[area > AREA_EPS]
    if len(triangles) == 0:
        logger.warning(f"Only degenerate triangles at iso level {iso}, returning an empty mesh")
        return TriMesh.empty()
    used, remap = np.unique(triangles.ravel(), return_inverse=True)
    return TriMesh(vertices[used], remap.reshape(-1, 3))
