# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module grid: Dense fine-occupancy evaluation on a regular lattice."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from tqdm.autonotebook import tqdm

from DifLite.model import parse_eval_mode
from DifLite.utils import get_threads
from DifLite.utils.errors import NumericFaultError
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)


def resolution_triple(res) -> np.ndarray:
    res = np.broadcast_to(np.asarray(res, dtype=np.int64), (3,)).copy()
    if np.any(res < 2):
        raise ValueError(f"grid resolution must be >= 2 per axis, got {res.tolist()}")
    return res


@dataclass(eq=False)
class FieldGrid:
    """Occupancy values on the nodes of a regular lattice spanning ``bbox``.

    ``values[i, j, k]`` is the value at ``bbox[0] + (i, j, k) * spacing``;
    flattened in C order this is the row-major node list.
    """

    bbox: np.ndarray
    resolution: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.bbox = np.asarray(self.bbox, dtype=np.float64).reshape(2, 3)
        self.resolution = resolution_triple(self.resolution)
        values = np.asarray(self.values, dtype=np.float64)
        if values.size != int(np.prod(self.resolution)):
            raise ValueError(
                f"{values.size} values do not fill a {self.resolution.tolist()} grid"
            )
        self.values = values.reshape(tuple(self.resolution))
        if not np.all(np.isfinite(self.values)):
            raise NumericFaultError("grid values must be finite")
        if self.values.min() < 0 or self.values.max() > 1:
            raise ValueError("grid values must lie in [0, 1]")

    @property
    def spacing(self) -> np.ndarray:
        return (self.bbox[1] - self.bbox[0]) / (self.resolution - 1)

    @property
    def cell_size(self) -> float:
        return float(self.spacing.max())

    def axes(self):
        return [np.linspace(self.bbox[0, a], self.bbox[1, a], self.resolution[a]) for a in range(3)]

    def points(self) -> np.ndarray:
        return lattice_points(self.bbox, self.resolution)


def lattice_points(bbox, res, i_range=None) -> np.ndarray:
    """Node coordinates in C order, optionally for the x-index slab ``i_range``."""
    bbox = np.asarray(bbox, dtype=np.float64).reshape(2, 3)
    res = resolution_triple(res)
    xs, ys, zs = (np.linspace(bbox[0, a], bbox[1, a], res[a]) for a in range(3))
    if i_range is not None:
        xs = xs[i_range[0] : i_range[1]]
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])


def _plane_mode(seed, plane):
    return f"sample:{int(np.random.SeedSequence([seed, plane]).generate_state(1)[0])}"


def evaluate_grid(
    model, target, prior, bbox, res, mode="mean", threads=None, slab_size=None, progress=False
) -> FieldGrid:
    """Evaluate ``model.fine_occupancy`` on every lattice node and clamp to [0, 1].

    Slabs of constant x index run on a thread pool (``threads`` or ``DIF_THREADS``).
    In sample mode every x plane draws from its own seed derived from the mode
    seed, so the grid depends on neither the thread count nor the slab size.
    """
    res = resolution_triple(res)
    threads = get_threads(threads)
    kind, seed = parse_eval_mode(mode)
    if slab_size is None:
        slab_size = max(1, int(np.ceil(res[0] / (4 * threads))))
    slabs = [(i, min(i + slab_size, res[0])) for i in range(0, res[0], slab_size)]

    def work(index):
        lo, hi = slabs[index]
        if kind == "mean":
            pts = lattice_points(bbox, res, (lo, hi))
            return np.asarray(model.fine_occupancy(pts, target, prior, "mean"), dtype=np.float64)
        planes = [
            model.fine_occupancy(lattice_points(bbox, res, (i, i + 1)), target, prior, _plane_mode(seed, i))
            for i in range(lo, hi)
        ]
        return np.concatenate([np.asarray(p, dtype=np.float64) for p in planes])

    logger.info(f"Evaluating {int(np.prod(res))} grid nodes in {len(slabs)} slab(s) on {threads} thread(s)")
    with ThreadPoolExecutor(max_workers=threads) as executor:
        results = list(tqdm(executor.map(work, range(len(slabs))), total=len(slabs), disable=not progress))
    values = np.concatenate(results)
    if not np.all(np.isfinite(values)):
        raise NumericFaultError(f"{int((~np.isfinite(values)).sum())} non-finite grid value(s)")
    return FieldGrid(bbox, res, np.clip(values, 0.0, 1.0))
