# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Loss functions, the two-phase training schedule and checkpoints.

Schedules per mode:

* ``dif`` / ``dif_no_rectifier`` / ``dif_l2_mu`` / ``dif_constant_sigma``:
  phase ``rec`` (``alpha2 * L_rec`` through the sample -> rectify path) for
  ``epochs_phase1`` epochs, then phase ``un`` (``alpha1 * L_dis + alpha2 * L_rec``)
  for ``epochs_phase2`` epochs.
* ``baseline``: one ``baseline`` phase of ``L_rec`` for both epoch counts combined.
* ``bayes_diagnostic``: one ``bayes`` phase training the predictor alone with the
  data-dependent Bayesian loss on its mean, against binary occupancy labels.
"""

import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from tqdm.autonotebook import tqdm

from DifLite.field import (
    DesignParams,
    OccDistribution,
    SmoothOccParams,
    binary_occupancy,
    gaussian_kl,
    gaussian_kl_grad,
)
from DifLite.geometry.sampling import SampleBatch, sample_training_points
from DifLite.geometry.shapes import Shape
from DifLite.model import (
    BaselineModel,
    DifModel,
    baseline_forward_cached,
    dif_backward,
    dif_forward,
    extract_feature_batch,
    model_from_dict,
    model_to_dict,
)
from DifLite.nn.mlp import GradCheckReport, mlp_backward, mlp_forward
from DifLite.nn.optim import OptState, adam_step, init_opt_state
from DifLite.nn.reparam import draw_epsilon
from DifLite.utils.errors import DivergenceError, DomainError, EmptyBatchError, NumericFaultError
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1
MODES = ("dif", "dif_no_rectifier", "baseline", "bayes_diagnostic", "dif_l2_mu", "dif_constant_sigma")
LOG_COLUMNS = ("epoch", "l_rec", "l_dis", "l_un", "sigma_near", "sigma_far", "seconds", "phase", "l_bayes")


@dataclass
class TrainConfig:
    alpha1: float = 1.0
    alpha2: float = 0.55
    k: float = 0.6
    beta: float = 4.0
    alpha: float = 20.0
    lr: float = 1e-4
    batch_size: int = 512
    epochs_phase1: int = 10
    epochs_phase2: int = 5
    samples_per_epoch: int = 65536
    mix: float = 0.5
    noise_sd: float = 0.05
    feature_noise_sd: float = 0.1
    seed: int = 0
    mode: str = "dif"
    detached: bool = False
    phase1_train_predictor: bool = True
    binary_occupancy: bool = False
    near_band: float = 0.05
    far_band: float = 0.2
    bbox: list = field(default_factory=lambda: [[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]])

    def __post_init__(self):
        for name in ("alpha1", "alpha2"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("epochs_phase1", "epochs_phase2"):
            if int(getattr(self, name)) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("lr", "k", "beta", "alpha", "noise_sd"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if int(self.batch_size) < 1 or int(self.samples_per_epoch) < 1:
            raise ValueError("batch_size and samples_per_epoch must be >= 1")
        if not 0.0 <= self.mix <= 1.0:
            raise ValueError("mix must lie in [0, 1]")
        if not self.feature_noise_sd >= 0:
            raise ValueError("feature_noise_sd must be >= 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got '{self.mode}'")

    @property
    def occ(self) -> SmoothOccParams:
        return SmoothOccParams(self.alpha)

    @property
    def design(self) -> DesignParams:
        return DesignParams(self.k, self.beta)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown train option(s) {sorted(unknown)}")
        return cls(**data)


class TrainLog:
    """Per-epoch rows; columns not computed in a phase hold NaN."""

    def __init__(self, rows=None):
        self.rows: List[dict] = []
        for row in rows or []:
            self.append(row)

    def append(self, row: dict):
        if self.rows and row["epoch"] <= self.rows[-1]["epoch"]:
            raise ValueError("train log epochs must increase")
        self.rows.append({col: row.get(col, np.nan) for col in LOG_COLUMNS})

    def column(self, name) -> np.ndarray:
        if name == "phase":
            return np.array([row["phase"] for row in self.rows])
        return np.array([row[name] for row in self.rows], dtype=np.float64)

    def __len__(self):
        return len(self.rows)

    def to_dict(self) -> dict:
        return {col: [row[col] for row in self.rows] for col in LOG_COLUMNS}

    @classmethod
    def from_dict(cls, data: dict) -> "TrainLog":
        n = len(data["epoch"])
        return cls([{col: data[col][i] for col in LOG_COLUMNS if col in data} for i in range(n)])


def _check_batch(*arrays):
    if any(np.size(a) == 0 for a in arrays):
        raise EmptyBatchError("loss of an empty batch")


def loss_rec(fine, gt) -> float:
    """Mean squared error."""
    _check_batch(fine, gt)
    return float(np.mean((np.asarray(fine, dtype=np.float64) - np.asarray(gt, dtype=np.float64)) ** 2))


def loss_dis(pred: OccDistribution, designed: OccDistribution) -> float:
    """Batch mean of the Gaussian KL divergence ``KL(pred || designed)``."""
    _check_batch(pred.mu, designed.mu)
    return float(np.mean(gaussian_kl(pred, designed)))


def loss_bayes(samples, gts, sigmas) -> float:
    """``1/(2N) * sum(r**2 / sigma**2 + log sigma)`` with ``r = sample - gt``."""
    sigmas = np.asarray(sigmas, dtype=np.float64)
    _check_batch(samples, gts, sigmas)
    if np.any(~(sigmas > 0)):
        raise DomainError("sigma must be > 0")
    r = np.asarray(samples, dtype=np.float64) - np.asarray(gts, dtype=np.float64)
    return float(np.sum(r**2 / sigmas**2 + np.log(sigmas)) / (2 * np.size(r)))


def total_loss(l_dis, l_rec, alpha1=1.0, alpha2=0.55) -> float:
    return alpha1 * l_dis + alpha2 * l_rec


def schedule(config: TrainConfig):
    """List of (phase, epochs)."""
    if config.mode == "baseline":
        return [("baseline", config.epochs_phase1 + config.epochs_phase2)]
    if config.mode == "bayes_diagnostic":
        return [("bayes", config.epochs_phase1 + config.epochs_phase2)]
    return [("rec", config.epochs_phase1), ("un", config.epochs_phase2)]


def init_model(config: TrainConfig):
    rng = np.random.default_rng(config.seed)
    if config.mode == "baseline":
        return BaselineModel.initialize(rng, config.occ, config.feature_noise_sd)
    use_rectifier = config.mode not in ("dif_no_rectifier", "bayes_diagnostic")
    return DifModel.initialize(rng, config.occ, config.design, config.feature_noise_sd, use_rectifier)


def batch_objective(model, config: TrainConfig, phase: str, batch: SampleBatch, features, epsilon, want_grads=True):
    """Loss terms of one minibatch and, with ``want_grads``, the gradient of the optimised loss.

    :return: (terms, grads, sigma) where ``terms["loss"]`` is the optimised value,
        ``grads`` maps network name to :class:`MlpParams` and ``sigma`` is the
        predicted sigma (None for the baseline).
    """
    n = len(batch)
    gt = batch.gt_occ
    terms = {"l_rec": np.nan, "l_dis": np.nan, "l_un": np.nan, "l_bayes": np.nan}

    if phase == "baseline":
        out, cache = baseline_forward_cached(model.params, features)
        terms["l_rec"] = terms["loss"] = loss_rec(out, gt)
        grads = None
        if want_grads:
            grads = {"baseline": mlp_backward(model.params, cache, (2.0 * (out - gt) / n)[:, np.newaxis])[0]}
        return terms, grads, None

    fwd = dif_forward(model, features, np.zeros(n) if phase == "bayes" else epsilon)
    mu, sigma = fwd["mu"], fwd["sigma"]

    if phase == "bayes":
        # value regression of the classical occupancy; label ambiguity sits on the surface
        labels = binary_occupancy(batch.gt_sdf)
        r = mu - labels
        terms["l_rec"] = loss_rec(mu, labels)
        terms["l_bayes"] = terms["loss"] = loss_bayes(mu, labels, sigma)
        grads = None
        if want_grads:
            d_mu = r / sigma**2 / n
            d_sigma = (-2.0 * r**2 / sigma**3 + 1.0 / sigma) / (2 * n)
            grads = dif_backward(model, fwd, np.zeros(n), d_mu, d_sigma)
        return terms, grads, sigma

    fine = fwd["fine"]
    terms["l_rec"] = loss_rec(fine, gt)
    d_fine = config.alpha2 * 2.0 * (fine - gt) / n
    d_mu = d_sigma = None
    if phase == "rec":
        terms["loss"] = config.alpha2 * terms["l_rec"]
    else:
        if config.mode == "dif_l2_mu":
            terms["l_dis"] = loss_rec(mu, batch.designed_mu)
            d_mu = config.alpha1 * 2.0 * (mu - batch.designed_mu) / n
        else:
            target_sigma = batch.designed_sigma
            if config.mode == "dif_constant_sigma":
                target_sigma = np.full(n, config.k)
            terms["l_dis"] = loss_dis(OccDistribution(mu, sigma), OccDistribution(batch.designed_mu, target_sigma))
            g_mu, g_sigma = gaussian_kl_grad(mu, sigma, batch.designed_mu, target_sigma)
            d_mu = config.alpha1 * g_mu / n
            d_sigma = config.alpha1 * g_sigma / n
        terms["l_un"] = terms["loss"] = total_loss(terms["l_dis"], terms["l_rec"], config.alpha1, config.alpha2)
    grads = None
    if want_grads:
        grads = dif_backward(model, fwd, d_fine, d_mu, d_sigma, detached=config.detached)
        if phase == "rec" and not config.phase1_train_predictor:
            grads.pop("predictor")
    return terms, grads, sigma


def _replace_networks(model, params: dict):
    if isinstance(model, BaselineModel):
        return BaselineModel(params.get("baseline", model.params), model.occ, model.feature_noise_sd)
    return DifModel(
        params.get("predictor", model.predictor),
        params.get("rectifier", model.rectifier),
        model.occ,
        model.design,
        model.feature_noise_sd,
    )


def _dump_batch(out_dir, batch, features, epsilon) -> Optional[Path]:
    if out_dir is None:
        return None
    path = Path(out_dir) / "divergence_batch.npz"
    np.savez(path, features=features, epsilon=epsilon, **batch.to_dict())
    return path


@dataclass
class FitResult:
    model: object
    log: TrainLog
    opt_states: Dict[str, OptState]
    checkpoints: List[Path] = field(default_factory=list)
    checkpoint: dict = None


def make_checkpoint(model, opt_states: dict, config: TrainConfig, epoch: int, phase: str) -> dict:
    ckpt = {"format_version": CHECKPOINT_FORMAT_VERSION, "mode": config.mode}
    ckpt.update(model_to_dict(model))
    ckpt["optimizer"] = {name: state.to_dict() for name, state in opt_states.items()}
    ckpt["seed"] = config.seed
    ckpt["epoch"] = epoch
    ckpt["phase"] = phase
    ckpt["train"] = config.to_dict()
    return ckpt


def load_checkpoint(ckpt: dict):
    """Rebuild ``(model, optimizer states, TrainConfig)`` from a checkpoint dictionary."""
    version = ckpt.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format_version {version!r}")
    model = model_from_dict(ckpt)
    states = {name: OptState.from_dict(s) for name, s in ckpt.get("optimizer", {}).items()}
    config = TrainConfig.from_dict(ckpt["train"]) if "train" in ckpt else TrainConfig(mode=ckpt["mode"])
    return model, states, config


def _write_checkpoint(ckpt: dict, path: Path) -> Path:
    from DifLite.CheckpointData import CheckpointData, CheckpointJSONFormat

    CheckpointData.from_dict(ckpt, "checkpoint").write(str(path), CheckpointJSONFormat)
    return path


def _epoch_batch(config: TrainConfig, epoch: int, target: Shape, prior: Shape):
    seed = config.seed
    batch = sample_training_points(
        target,
        config.samples_per_epoch,
        config.mix,
        config.noise_sd,
        config.bbox,
        [seed, epoch],
        alpha=config.alpha,
        design=config.design,
        binary=config.binary_occupancy,
    )
    features = extract_feature_batch(
        target, prior, batch.points, config.feature_noise_sd, np.random.default_rng([seed, epoch, 1])
    )
    return batch, features


def evaluate_losses(model, config: TrainConfig, phase: str, target: Shape, prior: Shape, epoch: int = 1) -> dict:
    """Loss terms of ``model`` over the whole batch of ``epoch``, without updating it.

    Points, features and epsilon come from the seeds :func:`fit` uses for that epoch.
    """
    batch, features = _epoch_batch(config, epoch, target, prior)
    epsilon = draw_epsilon(np.random.default_rng([config.seed, epoch, 2]), len(batch))
    terms, _, _ = batch_objective(model, config, phase, batch, features, epsilon, want_grads=False)
    return terms


def _run_epoch(model, opt_states, config, phase, epoch, target, prior, out_dir):
    start = time.perf_counter()
    seed = config.seed
    batch, features = _epoch_batch(config, epoch, target, prior)
    eps_rng = np.random.default_rng([seed, epoch, 2])
    order = np.random.default_rng([seed, epoch, 3]).permutation(len(batch))
    near = np.abs(batch.gt_sdf) < config.near_band
    far = np.abs(batch.gt_sdf) > config.far_band

    sums = {"l_rec": 0.0, "l_dis": 0.0, "l_un": 0.0, "l_bayes": 0.0}
    sigma_all = np.full(len(batch), np.nan)
    for start_idx in range(0, len(batch), config.batch_size):
        idx = order[start_idx : start_idx + config.batch_size]
        mini = batch.subset(idx)
        feats = features[idx]
        epsilon = draw_epsilon(eps_rng, len(idx))
        try:
            terms, grads, sigma = batch_objective(model, config, phase, mini, feats, epsilon)
        except NumericFaultError as err:
            raise DivergenceError(
                f"epoch {epoch} ({phase}): {err}", _dump_batch(out_dir, mini, feats, epsilon)
            ) from err
        flat_grads = [g.flatten() for g in grads.values()]
        if not np.isfinite(terms["loss"]) or not all(np.all(np.isfinite(g)) for g in flat_grads):
            raise DivergenceError(
                f"non-finite loss {terms['loss']} at epoch {epoch} ({phase})",
                _dump_batch(out_dir, mini, feats, epsilon),
            )
        updated = {}
        for name, grad in grads.items():
            net = model.networks[name]
            updated[name], opt_states[name] = adam_step(opt_states[name], net, grad)
        model = _replace_networks(model, updated)
        for key in sums:
            if np.isfinite(terms[key]):
                sums[key] += terms[key] * len(idx)
        if sigma is not None:
            sigma_all[idx] = sigma

    n = len(batch)
    row = {"epoch": epoch, "phase": phase, "seconds": time.perf_counter() - start}
    row["l_rec"] = sums["l_rec"] / n
    row["l_dis"] = sums["l_dis"] / n if phase == "un" else np.nan
    row["l_un"] = sums["l_un"] / n if phase == "un" else np.nan
    row["l_bayes"] = sums["l_bayes"] / n if phase == "bayes" else np.nan
    row["sigma_near"] = float(np.mean(sigma_all[near])) if np.any(near) and phase != "baseline" else np.nan
    row["sigma_far"] = float(np.mean(sigma_all[far])) if np.any(far) and phase != "baseline" else np.nan
    return model, row


def fit(config: TrainConfig, target: Shape, prior: Shape, out_dir=None, progress: bool = True) -> FitResult:
    """Train a model for ``config.mode``.

    A fresh :class:`SampleBatch` is drawn for every epoch from the seed
    ``[config.seed, epoch]``. With ``out_dir`` a checkpoint is written after
    each phase (``checkpoint_<phase>.json``) and at the end (``checkpoint.json``).

    :raises DivergenceError: on a non-finite loss; the batch is dumped to
        ``out_dir/divergence_batch.npz`` when ``out_dir`` is given.
    """
    model = init_model(config)
    opt_states = {name: init_opt_state(net, lr=config.lr) for name, net in model.networks.items()}
    log = TrainLog()
    written = []
    epoch = 0
    phase = "init"
    for name, n_epochs in schedule(config):
        if n_epochs == 0:
            continue
        phase = name
        logger.info(f"Phase '{phase}' for {n_epochs} epoch(s), mode '{config.mode}'")
        for _ in tqdm(range(n_epochs), disable=not progress):
            epoch += 1
            model, row = _run_epoch(model, opt_states, config, phase, epoch, target, prior, out_dir)
            log.append(row)
            logger.info(
                f"epoch {epoch} [{phase}] l_rec={row['l_rec']:.6f} l_dis={row['l_dis']:.6f} "
                f"l_un={row['l_un']:.6f} l_bayes={row['l_bayes']:.6f} "
                f"sigma_near={row['sigma_near']:.4f} sigma_far={row['sigma_far']:.4f} "
                f"({row['seconds']:.1f} s)"
            )
        if out_dir is not None:
            ckpt = make_checkpoint(model, opt_states, config, epoch, phase)
            written.append(_write_checkpoint(ckpt, Path(out_dir) / f"checkpoint_{phase}.json"))
    final = make_checkpoint(model, opt_states, config, epoch, phase)
    if out_dir is not None:
        written.append(_write_checkpoint(final, Path(out_dir) / "checkpoint.json"))
    return FitResult(model, log, opt_states, written, final)


def loss_gradient_check(
    model,
    config: TrainConfig,
    phase: str,
    batch: SampleBatch,
    features,
    epsilon,
    tol: float = 1e-3,
    h: float = 1e-5,
    max_coords: Optional[int] = None,
    seed: int = 0,
    abs_floor: float = 1e-7,
) -> GradCheckReport:
    """Central-difference check of :func:`batch_objective` gradients over all networks.

    Coordinates whose perturbation flips any relu unit are skipped.
    ``max_coords`` limits the check to a random subset per network.
    """
    _, grads, _ = batch_objective(model, config, phase, batch, features, epsilon)

    def relu_pattern(m):
        if isinstance(m, BaselineModel):
            caches = [mlp_forward(m.params, features)[1]]
        else:
            fwd = dif_forward(m, features, np.zeros(len(batch)) if phase == "bayes" else epsilon)
            caches = [c for c in (fwd["pred_cache"], fwd["rect_cache"]) if c is not None]
        return [z > 0 for c in caches for z in c["pre"]]

    def objective(m):
        return batch_objective(m, config, phase, batch, features, epsilon, want_grads=False)[0]["loss"]

    base_pattern = relu_pattern(model)
    rng = np.random.default_rng(seed)
    worst, worst_at, n_checked, n_skipped = 0.0, None, 0, 0
    for name, grad in grads.items():
        flat = model.networks[name].flatten()
        analytic = grad.flatten()
        coords = np.arange(flat.size)
        if max_coords is not None and max_coords < flat.size:
            coords = np.sort(rng.choice(flat.size, max_coords, replace=False))
        for j in coords:
            values = []
            patterns = []
            for sign in (1.0, -1.0):
                trial = flat.copy()
                trial[j] += sign * h
                m = _replace_networks(model, {name: model.networks[name].with_flat(trial)})
                values.append(objective(m))
                patterns.append(relu_pattern(m))
            if any(
                not (np.array_equal(p, b) and np.array_equal(b, q))
                for p, b, q in zip(patterns[0], base_pattern, patterns[1])
            ):
                n_skipped += 1
                continue
            numeric = (values[0] - values[1]) / (2 * h)
            rel = abs(analytic[j] - numeric) / max(abs(analytic[j]), abs(numeric), abs_floor)
            n_checked += 1
            if worst_at is None or rel > worst:
                worst, worst_at = rel, (name, int(j))
    return GradCheckReport(worst, worst_at, bool(worst < tol), n_checked, n_skipped)
