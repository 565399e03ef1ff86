"""Test the losses, the training schedule and the checkpoints"""

from dataclasses import replace

import numpy as np
import pytest

import DifLite.train as train
from DifLite.CheckpointData import read_checkpoint
from DifLite.field import OccDistribution, binary_occupancy, gaussian_kl
from DifLite.geometry.sampling import sample_training_points
from DifLite.model import RECTIFIER_DIMS, DifModel, dif_forward, extract_feature_batch
from DifLite.nn import init_mlp
from DifLite.train import (
    TrainConfig,
    TrainLog,
    evaluate_losses,
    fit,
    init_model,
    load_checkpoint,
    loss_bayes,
    loss_dis,
    loss_gradient_check,
    loss_rec,
    schedule,
    total_loss,
)
from DifLite.utils.errors import DivergenceError, DomainError, EmptyBatchError


def test_loss_rec():
    gt = np.random.default_rng(0).uniform(0, 1, 50)
    assert loss_rec(gt, gt) == 0.0
    assert loss_rec(gt + 0.1, gt) == pytest.approx(0.01)
    fine = np.random.default_rng(1).uniform(0, 1, 50)
    assert loss_rec(fine, gt) == pytest.approx(sum((f - g) ** 2 for f, g in zip(fine, gt)) / 50)
    with pytest.raises(EmptyBatchError):
        loss_rec([], [])


def test_loss_dis():
    pred = OccDistribution(np.array([0.5, 0.9]), np.array([0.1, 0.2207]))
    designed = OccDistribution(np.array([0.5, 1.0]), np.array([0.6, 0.2207]))
    assert loss_dis(designed, designed) == pytest.approx(0.0, abs=1e-12)
    single_p, single_d = OccDistribution(0.3, 0.2), OccDistribution(0.4, 0.5)
    assert loss_dis(single_p, single_d) == pytest.approx(gaussian_kl(single_p, single_d))
    assert loss_dis(pred, designed) == pytest.approx((1.3057 + 0.1026) / 2, abs=1e-3)


def test_loss_bayes():
    assert loss_bayes([0.3], [0.3], [1.0]) == 0.0
    assert loss_bayes([0.2], [0.0], [0.5]) == pytest.approx(-0.2666, abs=1e-4)
    growing = [loss_bayes([0.2], [0.0], [s]) for s in (1.0, 10.0, 1e3, 1e6)]
    assert np.all(np.diff(growing) > 0)
    with pytest.raises(DomainError):
        loss_bayes([0.2], [0.0], [0.0])


def test_total_loss():
    assert total_loss(0.0, 0.0) == 0.0
    assert total_loss(1.0, 2.0, 1.0, 0.55) == pytest.approx(2.1)
    assert total_loss(0.7, 2.0, 1.0, 0.0) == 0.7


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(mode="bogus")
    with pytest.raises(ValueError):
        TrainConfig(mix=1.5)
    with pytest.raises(ValueError):
        TrainConfig.from_dict({"epochs": 3})
    config = TrainConfig.from_dict({"alpha1": 2.0})
    assert config.alpha1 == 2.0
    assert config.design.k == 0.6


def test_schedule():
    assert schedule(TrainConfig()) == [("rec", 10), ("un", 5)]
    assert schedule(TrainConfig(mode="baseline")) == [("baseline", 15)]
    assert schedule(TrainConfig(mode="bayes_diagnostic")) == [("bayes", 15)]


def test_train_log_order():
    log = TrainLog([{"epoch": 1, "phase": "rec"}])
    with pytest.raises(ValueError):
        log.append({"epoch": 1, "phase": "rec"})
    assert np.isnan(log.column("l_dis")[0])


def test_fit_zero_epochs(bump_sphere, sphere):
    config = TrainConfig(epochs_phase1=0, epochs_phase2=0)
    result = fit(config, bump_sphere, sphere, progress=False)
    assert len(result.log) == 0
    assert np.array_equal(result.model.predictor.flatten(), init_model(config).predictor.flatten())
    assert result.checkpoint["epoch"] == 0
    assert result.checkpoint["phase"] == "init"


def test_fit_phases(tiny_train_config, bump_sphere, sphere, tmp_path):
    result = fit(tiny_train_config, bump_sphere, sphere, out_dir=tmp_path, progress=False)
    phases = result.log.column("phase")
    assert list(phases) == ["rec", "un"]
    l_dis = result.log.column("l_dis")
    assert np.isnan(l_dis[0]) and np.isfinite(l_dis[1])
    assert np.all(np.isfinite(result.log.column("l_rec")))
    assert [p.name for p in result.checkpoints] == ["checkpoint_rec.json", "checkpoint_un.json", "checkpoint.json"]

    ckpt = read_checkpoint(tmp_path / "checkpoint.json")
    assert ckpt["format_version"] == 1
    assert ckpt["epoch"] == 2 and ckpt["phase"] == "un"
    model, states, config = load_checkpoint(ckpt)
    assert config == tiny_train_config
    assert states["predictor"].step == result.opt_states["predictor"].step
    points = np.random.default_rng(0).uniform(-1, 1, size=(50, 3))
    assert np.array_equal(
        model.fine_occupancy(points, bump_sphere, sphere), result.model.fine_occupancy(points, bump_sphere, sphere)
    )


def test_fit_deterministic(tiny_train_config, bump_sphere, sphere):
    a = fit(tiny_train_config, bump_sphere, sphere, progress=False)
    b = fit(tiny_train_config, bump_sphere, sphere, progress=False)
    for name in a.checkpoint["weights"]:
        assert np.array_equal(a.checkpoint["weights"][name], b.checkpoint["weights"][name])


@pytest.mark.parametrize(
    "mode, phases, networks",
    [
        ("baseline", ["baseline", "baseline"], {"baseline"}),
        ("bayes_diagnostic", ["bayes", "bayes"], {"predictor"}),
        ("dif_no_rectifier", ["rec", "un"], {"predictor"}),
        ("dif_l2_mu", ["rec", "un"], {"predictor", "rectifier"}),
        ("dif_constant_sigma", ["rec", "un"], {"predictor", "rectifier"}),
    ],
)
def test_fit_modes(mode, phases, networks, tiny_train_config, bump_sphere, sphere):
    config = replace(tiny_train_config, mode=mode)
    result = fit(config, bump_sphere, sphere, progress=False)
    assert list(result.log.column("phase")) == phases
    assert set(result.model.networks) == networks
    assert result.checkpoint["mode"] == mode
    if mode == "bayes_diagnostic":
        assert np.all(np.isfinite(result.log.column("l_bayes")))
    if mode == "baseline":
        assert np.all(np.isnan(result.log.column("sigma_near")))


def test_divergence_guard(tiny_train_config, bump_sphere, sphere, tmp_path, monkeypatch):
    def exploding(model, config, phase, batch, features, epsilon, want_grads=True):
        terms = {"loss": np.nan, "l_rec": np.nan, "l_dis": np.nan, "l_un": np.nan, "l_bayes": np.nan}
        return terms, {name: net.zeros_like() for name, net in model.networks.items()}, None

    monkeypatch.setattr(train, "batch_objective", exploding)
    with pytest.raises(DivergenceError) as err:
        fit(tiny_train_config, bump_sphere, sphere, out_dir=tmp_path, progress=False)
    assert err.value.dump_path == tmp_path / "divergence_batch.npz"
    assert err.value.dump_path.is_file()


@pytest.fixture(scope="module")
def gradient_batch(bump_sphere, sphere):
    config = TrainConfig()
    batch = sample_training_points(bump_sphere, 16, 0.5, 0.05, config.bbox, 0)
    features = extract_feature_batch(bump_sphere, sphere, batch.points, 0.1, np.random.default_rng(1))
    epsilon = np.random.default_rng(2).standard_normal(len(batch))
    return batch, features, epsilon


@pytest.mark.parametrize(
    "mode, phase",
    [("dif", "rec"), ("dif", "un"), ("dif_l2_mu", "un"), ("bayes_diagnostic", "bayes"), ("baseline", "baseline")],
)
def test_loss_gradients(mode, phase, gradient_batch):
    """End-to-end gradients through the sample -> rectifier path"""
    config = TrainConfig(mode=mode)
    model = init_model(config)
    if isinstance(model, DifModel) and model.rectifier is not None:
        rng = np.random.default_rng(3)
        model = DifModel(
            model.predictor, init_mlp(RECTIFIER_DIMS, ["relu", "relu", "identity"], rng), model.occ, model.design
        )
    batch, features, epsilon = gradient_batch
    report = loss_gradient_check(model, config, phase, batch, features, epsilon, max_coords=150)
    assert report.passed, str(report)
    assert report.max_rel_err < 1e-3


def test_bayes_phase_binary_labels(gradient_batch):
    config = TrainConfig(mode="bayes_diagnostic")
    model = init_model(config)
    batch, features, epsilon = gradient_batch
    terms, _, sigma = train.batch_objective(model, config, "bayes", batch, features, epsilon, want_grads=False)
    mu = dif_forward(model, features, np.zeros(len(batch)))["mu"]
    labels = binary_occupancy(batch.gt_sdf)
    assert np.allclose(labels, batch.gt_sdf > 0)
    assert terms["l_rec"] == pytest.approx(loss_rec(mu, labels))
    assert terms["l_bayes"] == pytest.approx(loss_bayes(mu, labels, sigma))


def test_bayes_sigma_peaks_on_surface(bump_sphere, sphere):
    """Bayesian-loss training puts the larger sigma near the surface"""
    config = TrainConfig(
        mode="bayes_diagnostic",
        epochs_phase1=6,
        epochs_phase2=0,
        samples_per_epoch=4096,
        batch_size=128,
        lr=1e-3,
    )
    log = fit(config, bump_sphere, sphere, progress=False).log
    near, far = log.column("sigma_near"), log.column("sigma_far")
    assert near[-1] > far[-1]
    assert near[-1] - far[-1] > near[0] - far[0]


def test_evaluate_losses(tiny_train_config, bump_sphere, sphere):
    model = init_model(tiny_train_config)
    initial = evaluate_losses(model, tiny_train_config, "rec", bump_sphere, sphere)
    assert initial["l_rec"] == evaluate_losses(model, tiny_train_config, "rec", bump_sphere, sphere)["l_rec"]
    assert np.isnan(initial["l_dis"])
    config = replace(tiny_train_config, epochs_phase1=4, epochs_phase2=0)
    trained = fit(config, bump_sphere, sphere, progress=False).model
    assert evaluate_losses(trained, config, "rec", bump_sphere, sphere)["l_rec"] < initial["l_rec"]
