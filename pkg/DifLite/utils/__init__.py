# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Basic utility module"""

import os

import numpy as np


def spliterate(buf, chunk):
    for start in range(0, len(buf), chunk):
        yield buf[start : start + chunk]


def as_points(p) -> np.ndarray:
    """Return ``p`` as a float64 array of shape (N, 3)."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"Expected points of shape (N, 3), got {arr.shape}")
    return arr


def normalize_rows(v: np.ndarray, eps: float = 1e-12):
    """Normalize row vectors; returns (unit vectors, norms). Rows with norm < eps are left as is."""
    norms = np.linalg.norm(v, axis=-1)
    safe = np.where(norms < eps, 1.0, norms)
    return v / safe[..., np.newaxis], norms


def get_threads(threads=None) -> int:
    """Worker count from the argument, else the ``DIF_THREADS`` environment variable, else 1.

    ``None`` and 0 both mean unset.
    """
    if not threads:
        threads = os.environ.get("DIF_THREADS", 1)
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads
