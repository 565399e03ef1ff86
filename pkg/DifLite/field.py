# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Smooth occupancy, the designed pseudo ground-truth distribution and the Gaussian KL divergence.

``sigma`` is a standard deviation everywhere in DifLite.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from DifLite.geometry.shapes import Shape, sdf_eval
from DifLite.utils.errors import DomainError

EXPONENT_CLAMP = 60.0
# Stands in for the alpha -> infinity limit (binary occupancy).
BINARY_ALPHA = 1e9


@dataclass(frozen=True)
class SmoothOccParams:
    alpha: float = 20.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True)
class DesignParams:
    k: float = 0.6
    beta: float = 4.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"k must be > 0, got {self.k}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class OccDistribution:
    """Gaussian over the occupancy value. ``mu`` and ``sigma`` may be scalars or equal-length arrays."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if not np.all(np.isfinite(np.asarray(self.mu, dtype=np.float64))):
            raise DomainError("distribution mean must be finite")
        if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
            raise DomainError("distribution sigma must be finite and > 0")

    def __len__(self):
        return np.size(self.mu)


def smooth_occupancy(sdf, alpha):
    """Logistic map ``1 / (1 + exp(-alpha * sdf))`` of a positive-inside SDF.

    The exponent is clamped to +/-60 so large ``|alpha * sdf|`` saturates to 0/1.
    """
    if isinstance(alpha, SmoothOccParams):
        alpha = alpha.alpha
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    x = np.clip(alpha * np.asarray(sdf, dtype=np.float64), -EXPONENT_CLAMP, EXPONENT_CLAMP)
    out = expit(x)
    return float(out) if np.ndim(out) == 0 else out


def binary_occupancy(sdf):
    return smooth_occupancy(sdf, BINARY_ALPHA)


def designed_sigma(mu_gt, params: DesignParams):
    """``sigma_d = k * exp(-beta * (mu_gt - 0.5)**2)``, largest on the surface."""
    mu_gt = np.asarray(mu_gt, dtype=np.float64)
    out = params.k * np.exp(-params.beta * (mu_gt - 0.5) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def designed_distribution(p, shape: Shape, occ: SmoothOccParams, dp: DesignParams) -> OccDistribution:
    """Designed distribution at one point or at (N, 3) points."""
    mu = smooth_occupancy(sdf_eval(shape, p), occ.alpha)
    return OccDistribution(mu, designed_sigma(mu, dp))


def _check_sigma(sigma, name):
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(~(sigma > 0)):
        raise DomainError(f"{name} sigma must be > 0")
    return sigma


def gaussian_kl_terms(mu_p, sigma_p, mu_t, sigma_t):
    """Elementwise ``KL(N(mu_p, sigma_p) || N(mu_t, sigma_t))``.

    :raises DomainError: for a non-positive sigma on either side.
    """
    sigma_p = _check_sigma(sigma_p, "predicted")
    sigma_t = _check_sigma(sigma_t, "target")
    mu_p = np.asarray(mu_p, dtype=np.float64)
    mu_t = np.asarray(mu_t, dtype=np.float64)
    return (
        np.log(sigma_t / sigma_p)
        + (sigma_p**2 + (mu_p - mu_t) ** 2) / (2.0 * sigma_t**2)
        - 0.5
    )


def gaussian_kl_grad(mu_p, sigma_p, mu_t, sigma_t):
    """Partial derivatives of :func:`gaussian_kl_terms` w.r.t. ``mu_p`` and ``sigma_p``."""
    d_mu = (mu_p - mu_t) / sigma_t**2
    d_sigma = -1.0 / sigma_p + sigma_p / sigma_t**2
    return d_mu, d_sigma


def gaussian_kl(pred: OccDistribution, target: OccDistribution):
    terms = gaussian_kl_terms(pred.mu, pred.sigma, target.mu, target.sigma)
    # rounding can leave tiny negatives for identical inputs
    terms = np.maximum(terms, 0.0)
    return float(terms) if np.ndim(terms) == 0 else terms
