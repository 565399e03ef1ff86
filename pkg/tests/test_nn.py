"""Test the dense networks, Adam and reparameterized sampling"""

from types import SimpleNamespace

import numpy as np
import pytest

from DifLite.field import OccDistribution
from DifLite.model import BASELINE_DIMS, PREDICTOR_DIMS, RECTIFIER_DIMS
from DifLite.nn import (
    Layer,
    MlpParams,
    adam_step,
    draw_epsilon,
    grad_check,
    init_mlp,
    init_opt_state,
    mlp_backward,
    mlp_forward,
    mlp_from_architecture,
    reparam_grad,
    reparam_sample,
)
from DifLite.utils.errors import DomainError, ShapeMismatchError


def relu_stack(dims):
    return ["relu"] * (len(dims) - 2) + ["identity"]


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def test_identity_layer():
    params = MlpParams([Layer(np.eye(3), np.zeros(3))])
    x = np.array([0.3, -1.2, 4.0])
    y, _ = mlp_forward(params, x)
    assert np.array_equal(y, x)


def test_relu_layer():
    params = MlpParams([Layer(np.eye(3), np.zeros(3), "relu")])
    y, _ = mlp_forward(params, np.array([-1.0, 2.0, -0.5]))
    assert np.array_equal(y, [0.0, 2.0, 0.0])


def test_forward_matches_reevaluation(rng):
    params = init_mlp([4, 6, 2], ["tanh", "identity"], rng)
    x = rng.normal(size=(5, 4))
    y, _ = mlp_forward(params, x)
    w0, b0, w1, b1 = params.arrays()
    assert np.allclose(y, np.tanh(x @ w0.T + b0) @ w1.T + b1)


def test_forward_dimension_mismatch(rng):
    params = init_mlp([4, 2], ["identity"], rng)
    with pytest.raises(ShapeMismatchError):
        mlp_forward(params, np.zeros(3))


def test_linear_backward(rng):
    params = init_mlp([3, 2], ["identity"], rng)
    x = rng.normal(size=3)
    dy = rng.normal(size=2)
    _, cache = mlp_forward(params, x)
    grads, dx = mlp_backward(params, cache, dy)
    assert np.allclose(grads.layers[0].weight, np.outer(dy, x))
    assert np.allclose(grads.layers[0].bias, dy)
    assert np.allclose(dx, params.layers[0].weight.T @ dy)


def test_zero_output_gradient(rng):
    params = init_mlp([3, 5, 2], ["relu", "identity"], rng)
    _, cache = mlp_forward(params, rng.normal(size=(4, 3)))
    grads, dx = mlp_backward(params, cache, np.zeros((4, 2)))
    assert np.all(grads.flatten() == 0)
    assert np.all(dx == 0)


def test_backward_cache_mismatch(rng):
    a = init_mlp([3, 5, 2], ["relu", "identity"], rng)
    b = init_mlp([3, 4, 2], ["relu", "identity"], rng)
    _, cache = mlp_forward(a, np.zeros(3))
    with pytest.raises(ShapeMismatchError):
        mlp_backward(b, cache, np.zeros(2))


def test_grad_check_three_layer(rng):
    params = init_mlp([5, 8, 8, 3], ["relu", "relu", "identity"], rng)
    report = grad_check(params, rng.normal(size=(4, 5)))
    assert report.passed, str(report)
    assert report.max_rel_err < 1e-4


def test_grad_check_identity():
    params = MlpParams([Layer(np.eye(3), np.zeros(3))])
    report = grad_check(params, np.array([0.1, 0.2, 0.3]))
    assert report.passed
    assert report.max_rel_err < 1e-8


def test_grad_check_detects_sign_flip(rng):
    params = init_mlp([4, 6, 2], ["tanh", "identity"], rng)

    def corrupted(p, cache, dy):
        grads, dx = mlp_backward(p, cache, dy)
        return grads.with_flat(-grads.flatten()), dx

    report = grad_check(params, rng.normal(size=(3, 4)), backward=corrupted)
    assert not report.passed


@pytest.mark.parametrize(
    "dims", [RECTIFIER_DIMS, PREDICTOR_DIMS, BASELINE_DIMS], ids=["rectifier", "predictor", "baseline"]
)
def test_grad_check_architectures(dims, rng):
    params = init_mlp(dims, relu_stack(dims), rng)
    # random biases keep the relu units away from their kinks
    params = params.with_flat(params.flatten() + 0.05 * rng.normal(size=params.size))
    report = grad_check(params, rng.normal(size=(2, dims[0])))
    assert report.passed, str(report)


def test_init_zero_last(rng):
    params = init_mlp(RECTIFIER_DIMS, relu_stack(RECTIFIER_DIMS), rng, zero_last=True)
    assert np.all(params.layers[-1].weight == 0)
    assert np.all(params.layers[-1].bias == 0)
    y, _ = mlp_forward(params, rng.normal(size=(10, RECTIFIER_DIMS[0])))
    assert np.all(y == 0)


def test_architecture_roundtrip(rng):
    params = init_mlp([3, 4, 1], ["relu", "identity"], rng)
    rebuilt = mlp_from_architecture(params.architecture(), params.flatten())
    assert np.array_equal(rebuilt.flatten(), params.flatten())
    assert rebuilt.activations == params.activations


def test_adam_zero_gradient(rng):
    params = init_mlp([3, 2], ["identity"], rng)
    state = init_opt_state(params)
    new, state = adam_step(state, params, params.zeros_like())
    assert np.array_equal(new.flatten(), params.flatten())
    assert state.step == 1


def test_adam_first_step():
    params = MlpParams([Layer(np.array([[1.0]]), np.array([0.0]))])
    grads = MlpParams([Layer(np.array([[3.0]]), np.array([-0.5]))])
    new, _ = adam_step(init_opt_state(params, lr=1e-4), params, grads)
    assert new.layers[0].weight[0, 0] == pytest.approx(1.0 - 1e-4, rel=1e-8)
    assert new.layers[0].bias[0] == pytest.approx(1e-4, rel=1e-6)


def test_adam_deterministic(rng):
    params = init_mlp([3, 4, 1], ["relu", "identity"], rng)
    grads = params.with_flat(rng.normal(size=params.size))
    runs = []
    for _ in range(2):
        p, s = params, init_opt_state(params, lr=1e-3)
        for _ in range(5):
            p, s = adam_step(s, p, grads)
        runs.append(p.flatten())
    assert np.array_equal(runs[0], runs[1])


def test_adam_shape_mismatch(rng):
    params = init_mlp([3, 2], ["identity"], rng)
    other = init_mlp([3, 3], ["identity"], rng)
    with pytest.raises(ShapeMismatchError):
        adam_step(init_opt_state(params), params, other)


def test_reparam_sample():
    dist = OccDistribution(0.5, 0.6)
    assert reparam_sample(dist, 0.0) == 0.5
    assert reparam_sample(dist, 1.0) == pytest.approx(1.1)
    d_mu, d_sigma = reparam_grad(1.0, 0.7)
    assert d_mu == 1.0
    assert d_sigma == pytest.approx(0.7)
    d_mu, d_sigma = reparam_grad(1.0, 0.7, detached=True)
    assert d_mu == 0.0 and d_sigma == 0.0


def test_reparam_statistics(rng):
    dist = OccDistribution(0.5, 0.6)
    samples = reparam_sample(dist, draw_epsilon(rng, 100_000))
    assert np.mean(samples) == pytest.approx(0.5, rel=0.01)
    assert np.std(samples) == pytest.approx(0.6, rel=0.01)


def test_reparam_finite_difference():
    """Sample gradients against finite differences at fixed epsilon"""
    mu, sigma, eps, h = 0.3, 0.4, -1.3, 1e-6
    d_mu, d_sigma = reparam_grad(1.0, eps)
    def z(m, s):
        return reparam_sample(OccDistribution(m, s), eps)

    fd_mu = (z(mu + h, sigma) - z(mu - h, sigma)) / (2 * h)
    fd_sigma = (z(mu, sigma + h) - z(mu, sigma - h)) / (2 * h)
    assert d_mu == pytest.approx(fd_mu, rel=1e-6)
    assert d_sigma == pytest.approx(fd_sigma, rel=1e-6)


def test_reparam_domain():
    with pytest.raises(DomainError):
        reparam_sample(SimpleNamespace(mu=0.5, sigma=0.0), 0.0)


def test_draw_epsilon_stream():
    """Draws continue the generator stream, so split draws match one long draw"""
    rng = np.random.default_rng(9)
    split = np.concatenate([draw_epsilon(rng, 3), draw_epsilon(rng, 4)])
    assert np.array_equal(split, np.random.default_rng(9).standard_normal(7))
