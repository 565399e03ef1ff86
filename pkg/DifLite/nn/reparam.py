# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module reparam: Reparameterized Gaussian sampling ``mu + sigma * eps``."""

import numpy as np

from DifLite.utils.errors import DomainError


def draw_epsilon(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n)


def reparam_sample(dist, epsilon):
    """Sample of ``dist`` for a standard-normal draw ``epsilon``.

    :raises DomainError: for non-positive sigma.
    """
    sigma = np.asarray(dist.sigma, dtype=np.float64)
    if np.any(~(sigma > 0)):
        raise DomainError("sigma must be > 0")
    out = np.asarray(dist.mu, dtype=np.float64) + sigma * np.asarray(epsilon, dtype=np.float64)
    return float(out) if np.ndim(out) == 0 else out


def reparam_grad(d_sample, epsilon, detached: bool = False):
    """Pull a sample gradient back to ``(d_mu, d_sigma)``.

    With ``detached`` the sample is treated as a constant and both are zero.
    """
    d_sample = np.asarray(d_sample, dtype=np.float64)
    if detached:
        return np.zeros_like(d_sample), np.zeros_like(d_sample)
    return d_sample, d_sample * np.asarray(epsilon, dtype=np.float64)
