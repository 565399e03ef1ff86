# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module sampling: Training point batches with ground-truth fields."""

from dataclasses import dataclass

import numpy as np

from DifLite.field import DesignParams, binary_occupancy, designed_sigma, smooth_occupancy
from DifLite.geometry.shapes import Shape
from DifLite.utils.errors import EmptyBatchError, ShapeMismatchError

FIELDS = ("points", "gt_sdf", "gt_occ", "designed_mu", "designed_sigma")


@dataclass(eq=False)
class SampleBatch:
    points: np.ndarray
    gt_sdf: np.ndarray
    gt_occ: np.ndarray
    designed_mu: np.ndarray
    designed_sigma: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        n = len(self.points)
        for name in FIELDS[1:]:
            value = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
            if len(value) != n:
                raise ShapeMismatchError(f"{name} has {len(value)} entries, points has {n}")
            setattr(self, name, value)

    def __len__(self):
        return len(self.points)

    def subset(self, index) -> "SampleBatch":
        return SampleBatch(*(getattr(self, name)[index] for name in FIELDS))

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in FIELDS}

    @classmethod
    def from_dict(cls, data: dict) -> "SampleBatch":
        return cls(**{name: data[name] for name in FIELDS})


def label_points(
    shape: Shape,
    points,
    alpha: float = 20.0,
    design: DesignParams = DesignParams(),
    binary: bool = False,
) -> SampleBatch:
    """Fill the ground-truth fields for given points."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    gt_sdf = shape.sdf(points)
    gt_occ = binary_occupancy(gt_sdf) if binary else smooth_occupancy(gt_sdf, alpha)
    return SampleBatch(points, gt_sdf, gt_occ, gt_occ.copy(), designed_sigma(gt_occ, design))


def sample_training_points(
    shape: Shape,
    n: int,
    mix: float,
    noise_sd: float,
    bbox,
    rng_seed,
    alpha: float = 20.0,
    design: DesignParams = DesignParams(),
    binary: bool = False,
) -> SampleBatch:
    """Draw a labelled batch: ``round(mix * n)`` points uniform in ``bbox`` and the
    rest on the surface, perturbed by isotropic Gaussian noise of sd ``noise_sd``.

    :param rng_seed: Anything :func:`numpy.random.default_rng` accepts.
    :raises EmptyBatchError: for ``n == 0``.
    """
    if n <= 0:
        raise EmptyBatchError(f"cannot sample an empty batch (n={n})")
    if not 0.0 <= mix <= 1.0:
        raise ValueError(f"mix must lie in [0, 1], got {mix}")
    if not noise_sd > 0:
        raise ValueError(f"noise_sd must be > 0, got {noise_sd}")
    bbox = np.asarray(bbox, dtype=np.float64).reshape(2, 3)
    if np.any(bbox[1] <= bbox[0]):
        raise ValueError(f"bbox must have min < max on every axis, got {bbox.tolist()}")

    rng = np.random.default_rng(rng_seed)
    n_uniform = int(round(mix * n))
    n_surface = n - n_uniform
    uniform = bbox[0] + rng.random((n_uniform, 3)) * (bbox[1] - bbox[0])
    if n_surface:
        surface = shape.sample_surface(n_surface, rng, bbox)
        surface = surface + rng.normal(0.0, noise_sd, size=surface.shape)
    else:
        surface = np.zeros((0, 3))
    points = np.concatenate([uniform, surface])
    return label_points(shape, points, alpha=alpha, design=design, binary=binary)
