# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Utils analysis module"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from scipy.stats import spearmanr  # noqa: E402

from DifLite.utils.Logger import setLogger  # noqa: E402

logger = setLogger(__name__)


def rank_correlation(x, y) -> float:
    """Spearman rho; 0.0 with a warning when it is undefined (e.g. constant input)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) < 2 or np.all(y == y[0]) or np.all(x == x[0]):
        logger.warning("Spearman rho undefined for constant or too short input, reporting 0.0")
        return 0.0
    rho = spearmanr(x, y)[0]
    if not np.isfinite(rho):
        logger.warning("Spearman rho is not finite, reporting 0.0")
        return 0.0
    return float(rho)


def binned_mean(x, y, edges):
    """Mean of ``y`` per bin of ``x``; empty bins hold NaN.

    :return: (means, counts)
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n_bins = len(edges) - 1
    index = np.clip(np.digitize(x, edges) - 1, 0, n_bins - 1)
    inside = (x >= edges[0]) & (x <= edges[-1])
    counts = np.bincount(index[inside], minlength=n_bins)
    sums = np.bincount(index[inside], weights=y[inside], minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return means, counts


def plot_profile(centers, means, counts, fn="sigma_profile.png", xlabel=None, ylabel=None, title=None):
    """Line plot of populated bins, saved to ``fn``."""
    populated = np.asarray(counts) > 0
    fig = plt.figure()
    plt.plot(np.asarray(centers)[populated], np.asarray(means)[populated], "bo-", label="mean")
    if xlabel:
        plt.xlabel(xlabel)
    if ylabel:
        plt.ylabel(ylabel)
    if title:
        plt.title(title)
    plt.legend()
    plt.savefig(fn, dpi=150)
    plt.close(fig)
