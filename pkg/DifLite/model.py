# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Distribution-guided implicit field: features, distribution predictor,
coarse sampling, occupancy rectifier, and the deterministic baseline.

Every occupancy source used by grid evaluation and metrics provides
``fine_occupancy(points, target, prior, mode)``; sources with an uncertainty
estimate also provide ``sigma_at(points, target, prior)``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from DifLite.field import DesignParams, OccDistribution, SmoothOccParams, designed_sigma, smooth_occupancy
from DifLite.geometry.shapes import Shape, project_to_surface, surface_normals
from DifLite.nn.mlp import (
    MlpParams,
    init_mlp,
    mlp_backward,
    mlp_forward,
    mlp_from_architecture,
    softplus,
    softplus_grad,
)
from DifLite.nn.reparam import draw_epsilon, reparam_grad, reparam_sample
from DifLite.utils import as_points, normalize_rows, spliterate
from DifLite.utils.errors import NumericFaultError, ProjectionError
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)

FEATURE_DIM = 7
RECTIFIER_INPUT_DIM = FEATURE_DIM + 3
SIGMA_FLOOR = 1e-4
SIGMA_INIT = 0.05
EVAL_CHUNK = 16384

PREDICTOR_DIMS = [FEATURE_DIM, 128, 128, 128, 2]
RECTIFIER_DIMS = [RECTIFIER_INPUT_DIM, 64, 64, 1]
BASELINE_DIMS = [FEATURE_DIM, 128, 128, 128, 1]


def _relu_stack(dims):
    return ["relu"] * (len(dims) - 2) + ["identity"]


@dataclass(frozen=True)
class FeatureVec7:
    """Prior normal, noisy target normal and prior SDF at one query point."""

    prior_normal: np.ndarray
    target_normal_noisy: np.ndarray
    prior_sdf: float

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.prior_normal, self.target_normal_noisy, [self.prior_sdf]])

    @classmethod
    def from_array(cls, row) -> "FeatureVec7":
        row = np.asarray(row, dtype=np.float64)
        return cls(row[0:3].copy(), row[3:6].copy(), float(row[6]))


def _foot_normals(shape: Shape, points, name):
    feet, residual, converged = project_to_surface(shape, points)
    if not np.all(converged):
        raise ProjectionError(float(residual[~converged].max()), int((~converged).sum()))
    normals, degenerate = surface_normals(shape, feet)
    if np.any(degenerate):
        logger.warning(f"{int(degenerate.sum())} degenerate {name} normal(s) replaced by the fallback axis")
    return normals


def extract_feature_batch(target: Shape, prior: Shape, points, noise_sd: float = 0.0, rng=None) -> np.ndarray:
    """Features of (N, 3) points as an (N, 7) array.

    :param noise_sd: Standard deviation of the Gaussian noise added to the target
        normal before renormalising (0 disables noise).
    :raises ProjectionError: when a foot point cannot be found.
    """
    points = as_points(points)
    prior_normal = _foot_normals(prior, points, "prior")
    target_normal = _foot_normals(target, points, "target")
    if noise_sd > 0:
        if rng is None:
            raise ValueError("feature noise needs an rng")
        noisy, norms = normalize_rows(target_normal + rng.normal(0.0, noise_sd, size=target_normal.shape))
        keep = norms < 1e-12
        noisy[keep] = target_normal[keep]
        target_normal = noisy
    return np.column_stack([prior_normal, target_normal, prior.sdf(points)])


def extract_features(target: Shape, prior: Shape, p, noise_sd: float = 0.0, rng=None) -> FeatureVec7:
    """:class:`FeatureVec7` of a single 3-vector."""
    return FeatureVec7.from_array(extract_feature_batch(target, prior, p, noise_sd, rng)[0])


def _feature_matrix(features) -> np.ndarray:
    if isinstance(features, FeatureVec7):
        return features.as_array()[np.newaxis, :]
    arr = np.asarray(features, dtype=np.float64)
    return arr[np.newaxis, :] if arr.ndim == 1 else arr


def parse_eval_mode(mode):
    """``"mean"`` -> (``"mean"``, None); ``"sample:SEED"`` or (``"sample"``, SEED) -> (``"sample"``, SEED)."""
    if isinstance(mode, (tuple, list)) and len(mode) == 2 and mode[0] == "sample":
        return "sample", int(mode[1])
    if mode == "mean":
        return "mean", None
    if isinstance(mode, str) and mode.startswith("sample:"):
        try:
            return "sample", int(mode.split(":", 1)[1])
        except ValueError:
            pass
    raise ValueError(f"evaluation mode must be 'mean' or 'sample:SEED', got {mode!r}")


def _chunked(fn, *arrays):
    """Apply ``fn`` to aligned chunks of ``arrays`` of EVAL_CHUNK rows."""
    out = np.empty(len(arrays[0]))
    start = 0
    for chunks in zip(*(spliterate(a, EVAL_CHUNK) for a in arrays)):
        out[start : start + len(chunks[0])] = fn(*chunks)
        start += len(chunks[0])
    return out


def _epsilon_for(mode, n):
    kind, seed = parse_eval_mode(mode)
    if kind == "mean":
        return np.zeros(n)
    return draw_epsilon(np.random.default_rng(seed), n)


@dataclass(eq=False)
class DifModel:
    """Distribution predictor (7 -> 2) plus optional occupancy rectifier (10 -> 1).

    ``rectifier`` is ``None`` for the rectifier-free ablation; the fine
    occupancy is then the coarse sample itself.
    """

    predictor: MlpParams
    rectifier: Optional[MlpParams]
    occ: SmoothOccParams = SmoothOccParams()
    design: DesignParams = DesignParams()
    feature_noise_sd: float = 0.1

    def __post_init__(self):
        if self.predictor.dims[0] != FEATURE_DIM or self.predictor.dims[-1] != 2:
            raise ValueError(f"predictor must map {FEATURE_DIM} -> 2, got {self.predictor.dims}")
        if self.rectifier is not None and (
            self.rectifier.dims[0] != RECTIFIER_INPUT_DIM or self.rectifier.dims[-1] != 1
        ):
            raise ValueError(f"rectifier must map {RECTIFIER_INPUT_DIM} -> 1, got {self.rectifier.dims}")

    @classmethod
    def initialize(cls, rng, occ=SmoothOccParams(), design=DesignParams(), feature_noise_sd=0.1, use_rectifier=True):
        """Fresh networks. The sigma head starts flat at :data:`SIGMA_INIT`."""
        predictor = init_mlp(PREDICTOR_DIMS, _relu_stack(PREDICTOR_DIMS), rng)
        head = predictor.layers[-1]
        head.weight[1] = 0.0
        head.bias[1] = np.log(np.expm1(SIGMA_INIT - SIGMA_FLOOR))
        rectifier = None
        if use_rectifier:
            rectifier = init_mlp(RECTIFIER_DIMS, _relu_stack(RECTIFIER_DIMS), rng, zero_last=True)
        return cls(predictor, rectifier, occ, design, feature_noise_sd)

    @property
    def networks(self) -> dict:
        nets = {"predictor": self.predictor}
        if self.rectifier is not None:
            nets["rectifier"] = self.rectifier
        return nets

    def fine_occupancy(self, points, target, prior, mode="mean"):
        points = as_points(points)
        epsilon = _epsilon_for(mode, len(points))
        return _chunked(
            lambda pts, eps: dif_forward(self, extract_feature_batch(target, prior, pts), eps)["fine"], points, epsilon
        )

    def sigma_at(self, points, target, prior):
        points = as_points(points)
        return _chunked(lambda pts: predict_distribution(self, extract_feature_batch(target, prior, pts)).sigma, points)


@dataclass(eq=False)
class BaselineModel:
    """Deterministic value regression 7 -> 1."""

    params: MlpParams
    occ: SmoothOccParams = SmoothOccParams()
    feature_noise_sd: float = 0.1

    def __post_init__(self):
        if self.params.dims[0] != FEATURE_DIM or self.params.dims[-1] != 1:
            raise ValueError(f"baseline must map {FEATURE_DIM} -> 1, got {self.params.dims}")

    @classmethod
    def initialize(cls, rng, occ=SmoothOccParams(), feature_noise_sd=0.1):
        return cls(init_mlp(BASELINE_DIMS, _relu_stack(BASELINE_DIMS), rng), occ, feature_noise_sd)

    @property
    def networks(self) -> dict:
        return {"baseline": self.params}

    def fine_occupancy(self, points, target, prior, mode="mean"):
        points = as_points(points)
        return _chunked(lambda pts: baseline_forward(self.params, extract_feature_batch(target, prior, pts)), points)


def _check_finite(values, what):
    if not np.all(np.isfinite(values)):
        raise NumericFaultError(f"non-finite {what}")


def predict_distribution(model: DifModel, features) -> OccDistribution:
    """``(mu, sigma)`` with ``sigma = softplus(raw) + 1e-4``.

    :raises NumericFaultError: for non-finite network output.
    """
    raw, _ = mlp_forward(model.predictor, _feature_matrix(features))
    _check_finite(raw, "predictor output")
    mu, sigma = raw[:, 0], softplus(raw[:, 1]) + SIGMA_FLOOR
    if isinstance(features, FeatureVec7) or np.ndim(features) == 1:
        return OccDistribution(float(mu[0]), float(sigma[0]))
    return OccDistribution(mu, sigma)


def coarse_occupancy(model: DifModel, features, epsilon):
    """``O_s = mu + sigma * epsilon``; returns ``(O_s, dist)``."""
    dist = predict_distribution(model, features)
    return reparam_sample(dist, epsilon), dist


def rectify(model: DifModel, o_s, dist: OccDistribution, features):
    """Fine occupancy ``O_s + R([O_s, mu, sigma, F7])``. Not clamped."""
    if model.rectifier is None:
        return o_s
    feats = _feature_matrix(features)
    r_in = np.column_stack(
        [np.atleast_1d(o_s), np.atleast_1d(dist.mu), np.atleast_1d(dist.sigma), feats]
    )
    delta, _ = mlp_forward(model.rectifier, r_in)
    fine = np.atleast_1d(o_s) + delta[:, 0]
    return float(fine[0]) if np.ndim(o_s) == 0 else fine


def evaluate_field(model, target: Shape, prior: Shape, p, mode="mean"):
    """Fine occupancy at one point or (N, 3) points, without feature noise.

    :param mode: ``"mean"`` (epsilon = 0) or ``"sample:SEED"``.
    """
    values = model.fine_occupancy(p, target, prior, mode)
    return float(values[0]) if np.ndim(p) == 1 else values


def baseline_forward(baseline_params: MlpParams, features):
    out, _ = mlp_forward(baseline_params, _feature_matrix(features))
    _check_finite(out, "baseline output")
    if isinstance(features, FeatureVec7) or np.ndim(features) == 1:
        return float(out[0, 0])
    return out[:, 0]


def dif_forward(model: DifModel, features: np.ndarray, epsilon) -> dict:
    """Batched forward pass keeping everything :func:`dif_backward` needs."""
    raw, pred_cache = mlp_forward(model.predictor, features)
    _check_finite(raw, "predictor output")
    mu, s_raw = raw[:, 0], raw[:, 1]
    sigma = softplus(s_raw) + SIGMA_FLOOR
    epsilon = np.broadcast_to(np.asarray(epsilon, dtype=np.float64), mu.shape)
    o_s = mu + sigma * epsilon
    fwd = {
        "features": features,
        "epsilon": epsilon,
        "mu": mu,
        "sigma": sigma,
        "s_raw": s_raw,
        "o_s": o_s,
        "pred_cache": pred_cache,
        "rect_cache": None,
        "fine": o_s,
    }
    if model.rectifier is not None:
        r_in = np.column_stack([o_s, mu, sigma, features])
        delta, fwd["rect_cache"] = mlp_forward(model.rectifier, r_in)
        fwd["fine"] = o_s + delta[:, 0]
    return fwd


def dif_backward(model: DifModel, fwd: dict, d_fine, d_mu=None, d_sigma=None, detached: bool = False) -> dict:
    """Gradients of a loss given ``d loss / d fine`` and optional direct terms on ``mu`` and ``sigma``.

    With ``detached`` the coarse sample passes no gradient to the predictor;
    ``mu`` and ``sigma`` still reach it through the rectifier input.

    :return: ``{"predictor": MlpParams, "rectifier": MlpParams}`` (no rectifier key without one)
    """
    n = len(fwd["mu"])
    d_fine = np.asarray(d_fine, dtype=np.float64)
    d_mu = np.zeros(n) if d_mu is None else np.array(d_mu, dtype=np.float64)
    d_sigma = np.zeros(n) if d_sigma is None else np.array(d_sigma, dtype=np.float64)
    d_os = d_fine.copy()
    grads = {}
    if model.rectifier is not None:
        grads["rectifier"], d_rin = mlp_backward(model.rectifier, fwd["rect_cache"], d_fine[:, np.newaxis])
        d_os += d_rin[:, 0]
        d_mu += d_rin[:, 1]
        d_sigma += d_rin[:, 2]
    dm, ds = reparam_grad(d_os, fwd["epsilon"], detached)
    d_mu += dm
    d_sigma += ds
    d_raw = np.column_stack([d_mu, d_sigma * softplus_grad(fwd["s_raw"])])
    grads["predictor"], _ = mlp_backward(model.predictor, fwd["pred_cache"], d_raw)
    return grads


def baseline_forward_cached(params: MlpParams, features):
    out, cache = mlp_forward(params, features)
    _check_finite(out, "baseline output")
    return out[:, 0], cache


class SmoothOccupancyOracle:
    """Analytic smooth occupancy of the target, standing in for a trained model."""

    def __init__(self, alpha: float = 20.0):
        self.alpha = alpha

    def fine_occupancy(self, points, target, prior, mode="mean"):
        return smooth_occupancy(target.sdf(as_points(points)), self.alpha)


class DesignedDistributionSource(SmoothOccupancyOracle):
    """Designed distribution: mean is the smooth occupancy, sigma the designed sigma."""

    def __init__(self, occ: SmoothOccParams = SmoothOccParams(), design: DesignParams = DesignParams()):
        super().__init__(occ.alpha)
        self.design = design

    def sigma_at(self, points, target, prior):
        return designed_sigma(self.fine_occupancy(points, target, prior), self.design)


class ConstantSigmaSource(SmoothOccupancyOracle):
    def __init__(self, value: float = 0.6, alpha: float = 20.0):
        super().__init__(alpha)
        self.value = value

    def sigma_at(self, points, target, prior):
        return np.full(len(as_points(points)), float(self.value))


def model_to_dict(model) -> dict:
    """Architectures and flat weights of a :class:`DifModel` or :class:`BaselineModel`."""
    return {
        "kind": "baseline" if isinstance(model, BaselineModel) else "dif",
        "alpha": model.occ.alpha,
        "design": {"k": model.design.k, "beta": model.design.beta} if isinstance(model, DifModel) else None,
        "feature_noise_sd": model.feature_noise_sd,
        "architectures": {name: net.architecture() for name, net in model.networks.items()},
        "weights": {name: net.flatten() for name, net in model.networks.items()},
    }


def model_from_dict(data: dict):
    nets = {
        name: mlp_from_architecture(arch, data["weights"][name])
        for name, arch in data["architectures"].items()
    }
    occ = SmoothOccParams(float(data["alpha"]))
    noise = float(data.get("feature_noise_sd", 0.0))
    if data.get("kind", "dif") == "baseline":
        return BaselineModel(nets["baseline"], occ, noise)
    design = data.get("design") or {}
    return DifModel(
        nets["predictor"],
        nets.get("rectifier"),
        occ,
        DesignParams(float(design.get("k", 0.6)), float(design.get("beta", 4.0))),
        noise,
    )
