# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module mlp: Dense feed-forward stacks with exact reverse-mode gradients."""

from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np
from scipy.special import expit

from DifLite.utils.errors import ShapeMismatchError

ACTIVATIONS = ("relu", "tanh", "identity")


def softplus(x):
    return np.logaddexp(0.0, x)


def softplus_grad(x):
    return expit(x)


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _activate_grad(z, a, kind):
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if kind == "tanh":
        return 1.0 - a**2
    return np.ones_like(z)


@dataclass(eq=False)
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if self.weight.ndim != 2 or self.weight.shape[0] != len(self.bias):
            raise ShapeMismatchError(
                f"weight {self.weight.shape} and bias {self.bias.shape} do not match"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation '{self.activation}', expected one of {ACTIVATIONS}")


class MlpParams:
    """Weights and biases of a dense stack. Layer ``i`` maps ``dims[i] -> dims[i+1]``."""

    def __init__(self, layers: Sequence[Layer]):
        self.layers: List[Layer] = list(layers)
        if not self.layers:
            raise ValueError("an MLP needs at least one layer")
        for prev, layer in zip(self.layers[:-1], self.layers[1:]):
            if layer.weight.shape[1] != prev.weight.shape[0]:
                raise ShapeMismatchError(
                    f"layer dims do not chain: {prev.weight.shape} then {layer.weight.shape}"
                )

    @property
    def dims(self) -> List[int]:
        return [self.layers[0].weight.shape[1]] + [layer.weight.shape[0] for layer in self.layers]

    @property
    def activations(self) -> List[str]:
        return [layer.activation for layer in self.layers]

    @property
    def size(self) -> int:
        return sum(layer.weight.size + layer.bias.size for layer in self.layers)

    def arrays(self):
        """Parameter arrays in flattening order: W0, b0, W1, b1, ..."""
        for layer in self.layers:
            yield layer.weight
            yield layer.bias

    def flatten(self) -> np.ndarray:
        return np.concatenate([arr.ravel() for arr in self.arrays()])

    def with_flat(self, flat) -> "MlpParams":
        """New parameters of this architecture taking values from ``flat``."""
        flat = np.asarray(flat, dtype=np.float64).reshape(-1)
        if flat.size != self.size:
            raise ShapeMismatchError(f"expected {self.size} values, got {flat.size}")
        layers, offset = [], 0
        for layer in self.layers:
            nw, nb = layer.weight.size, layer.bias.size
            w = flat[offset : offset + nw].reshape(layer.weight.shape)
            b = flat[offset + nw : offset + nw + nb]
            layers.append(Layer(w.copy(), b.copy(), layer.activation))
            offset += nw + nb
        return MlpParams(layers)

    def copy(self) -> "MlpParams":
        return self.with_flat(self.flatten())

    def zeros_like(self) -> "MlpParams":
        return self.with_flat(np.zeros(self.size))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(arr)) for arr in self.arrays())

    def architecture(self) -> dict:
        return {"dims": self.dims, "activations": self.activations}


def init_mlp(dims: Sequence[int], activations: Sequence[str], rng: np.random.Generator, zero_last=False) -> MlpParams:
    """Uniform fan-in initialisation, zero biases.

    The bound is ``sqrt(6 / fan_in)`` for relu layers and ``sqrt(3 / fan_in)`` otherwise.
    ``zero_last`` zeroes the final layer (residual heads start as the identity).
    """
    if len(activations) != len(dims) - 1:
        raise ValueError(f"{len(dims) - 1} layers need as many activations, got {len(activations)}")
    layers = []
    for i, (fan_in, fan_out, act) in enumerate(zip(dims[:-1], dims[1:], activations)):
        if zero_last and i == len(dims) - 2:
            weight = np.zeros((fan_out, fan_in))
        else:
            bound = np.sqrt((6.0 if act == "relu" else 3.0) / fan_in)
            weight = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(Layer(weight, np.zeros(fan_out), act))
    return MlpParams(layers)


def mlp_from_architecture(architecture: dict, flat=None) -> MlpParams:
    dims, activations = architecture["dims"], architecture["activations"]
    skeleton = MlpParams(
        [Layer(np.zeros((o, i)), np.zeros(o), a) for i, o, a in zip(dims[:-1], dims[1:], activations)]
    )
    return skeleton if flat is None else skeleton.with_flat(flat)


def mlp_forward(params: MlpParams, x):
    """Forward pass for one input vector (in,) or a batch (B, in).

    :return: (y, cache); the cache keeps each layer's input and pre-activation.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = x[np.newaxis, :] if single else x
    if a.ndim != 2 or a.shape[1] != params.dims[0]:
        raise ShapeMismatchError(f"input of shape {x.shape} does not match input dim {params.dims[0]}")
    cache = {"single": single, "dims": params.dims, "inputs": [], "pre": [], "post": []}
    for layer in params.layers:
        cache["inputs"].append(a)
        z = a @ layer.weight.T + layer.bias
        a = _activate(z, layer.activation)
        cache["pre"].append(z)
        cache["post"].append(a)
    return (a[0] if single else a), cache


def mlp_backward(params: MlpParams, cache: dict, dy):
    """Reverse-mode gradients of ``sum(y * dy)``.

    :return: (parameter gradients as :class:`MlpParams`, dx shaped like the input)
    """
    if cache["dims"] != params.dims:
        raise ShapeMismatchError(f"cache for dims {cache['dims']} used with params {params.dims}")
    da = np.asarray(dy, dtype=np.float64)
    if cache["single"]:
        da = da[np.newaxis, :]
    if da.shape != cache["post"][-1].shape:
        raise ShapeMismatchError(f"dy of shape {np.shape(dy)} does not match output {cache['post'][-1].shape}")
    grads = []
    for i in reversed(range(len(params.layers))):
        layer = params.layers[i]
        dz = da * _activate_grad(cache["pre"][i], cache["post"][i], layer.activation)
        grads.append(Layer(dz.T @ cache["inputs"][i], dz.sum(axis=0), layer.activation))
        da = dz @ layer.weight
    dx = da[0] if cache["single"] else da
    return MlpParams(grads[::-1]), dx


@dataclass
class GradCheckReport:
    max_rel_err: float
    worst_coordinate: tuple
    passed: bool
    n_checked: int
    n_skipped: int

    def __str__(self):
        status = "passed" if self.passed else "FAILED"
        return (
            f"gradient check {status}: max rel err {self.max_rel_err:.3e} at {self.worst_coordinate} "
            f"({self.n_checked} checked, {self.n_skipped} skipped at relu kinks)"
        )


def grad_check(
    params: MlpParams,
    x,
    tol: float = 1e-4,
    dy=None,
    h: float = 1e-4,
    backward: Callable = mlp_backward,
    abs_floor: float = 1e-6,
) -> GradCheckReport:
    """Compare ``backward`` against central differences over every parameter.

    The objective is ``sum(y * dy)``; ``dy`` defaults to a fixed pseudo-random
    direction. Coordinates whose perturbation flips a relu unit are skipped,
    the finite difference is not a derivative there.

    :param tol: Largest accepted ``|analytic - fd| / max(|analytic|, |fd|, abs_floor)``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    y, cache = mlp_forward(params, x)
    if dy is None:
        dy = np.random.default_rng(0).normal(size=np.shape(y))
    dy = np.asarray(dy, dtype=np.float64)
    grads, _ = backward(params, cache, dy)
    analytic = grads.flatten()
    relu_layers = [i for i, act in enumerate(params.activations) if act == "relu"]
    base_masks = [cache["pre"][i] > 0 for i in relu_layers]

    work = params.copy()

    def objective():
        out, c = mlp_forward(work, x)
        masks = [c["pre"][i] > 0 for i in relu_layers]
        return float(np.sum(out * dy)), masks

    worst, worst_at, n_checked, n_skipped = 0.0, None, 0, 0
    j = 0
    for li, layer in enumerate(work.layers):
        for name, arr in (("weight", layer.weight), ("bias", layer.bias)):
            for idx in np.ndindex(arr.shape):
                original = arr[idx]
                arr[idx] = original + h
                f_plus, m_plus = objective()
                arr[idx] = original - h
                f_minus, m_minus = objective()
                arr[idx] = original
                a = analytic[j]
                j += 1
                kinked = any(
                    not (np.array_equal(p, b) and np.array_equal(b, m))
                    for p, b, m in zip(m_plus, base_masks, m_minus)
                )
                if kinked:
                    n_skipped += 1
                    continue
                numeric = (f_plus - f_minus) / (2 * h)
                rel = abs(a - numeric) / max(abs(a), abs(numeric), abs_floor)
                n_checked += 1
                if worst_at is None or rel > worst:
                    worst, worst_at = rel, (li, name, idx)
    return GradCheckReport(worst, worst_at, bool(worst < tol), n_checked, n_skipped)
