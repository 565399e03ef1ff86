# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module optim: Bias-corrected adaptive-moment (Adam) updates on :class:`MlpParams`."""

from dataclasses import dataclass, replace

import numpy as np

from DifLite.nn.mlp import MlpParams
from DifLite.utils.errors import ShapeMismatchError


@dataclass(frozen=True, eq=False)
class OptState:
    """Flat moment accumulators matching :meth:`MlpParams.flatten` order."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.step < 0:
            raise ValueError(f"step must be >= 0, got {self.step}")
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "m": self.m,
            "v": self.v,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OptState":
        return cls(
            m=np.asarray(data["m"], dtype=np.float64),
            v=np.asarray(data["v"], dtype=np.float64),
            step=int(data["step"]),
            lr=float(data["lr"]),
            beta1=float(data["beta1"]),
            beta2=float(data["beta2"]),
            eps=float(data["eps"]),
        )


def init_opt_state(params: MlpParams, lr: float = 1e-4, beta1=0.9, beta2=0.999, eps=1e-8) -> OptState:
    return OptState(np.zeros(params.size), np.zeros(params.size), 0, lr, beta1, beta2, eps)


def adam_step(state: OptState, params: MlpParams, grads: MlpParams):
    """One update; pure, returns ``(params', state')``."""
    theta = params.flatten()
    g = grads.flatten()
    if g.shape != theta.shape or state.m.shape != theta.shape:
        raise ShapeMismatchError(
            f"params ({theta.size}), grads ({g.size}) and optimizer state ({state.m.size}) differ in size"
        )
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1**step)
    v_hat = v / (1.0 - state.beta2**step)
    theta = theta - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params.with_flat(theta), replace(state, m=m, v=v, step=step)
