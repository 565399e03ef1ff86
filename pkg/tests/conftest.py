"""Shared fixtures of the DifLite tests"""

import numpy as np
import pytest

from DifLite.config import DEFAULT_SCENE
from DifLite.extract import evaluate_grid, marching_cubes
from DifLite.geometry.scene import shape_from_spec
from DifLite.geometry.shapes import Sphere
from DifLite.model import SmoothOccupancyOracle
from DifLite.train import TrainConfig

BBOX = np.array([[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]])


@pytest.fixture(scope="session")
def bbox():
    return BBOX.copy()


@pytest.fixture(scope="session")
def sphere():
    return Sphere([0.0, 0.0, 0.0], 0.5)


@pytest.fixture(scope="session")
def bump_sphere():
    return shape_from_spec(DEFAULT_SCENE["target"], "scene.target")


@pytest.fixture(scope="session")
def sphere_mesh(sphere):
    """Marching-cubes sphere of radius 0.5 at resolution 48"""
    grid = evaluate_grid(SmoothOccupancyOracle(20.0), sphere, sphere, BBOX, 48)
    return marching_cubes(grid)


@pytest.fixture
def tiny_train_config():
    """A training run of a few seconds"""
    return TrainConfig(
        epochs_phase1=1,
        epochs_phase2=1,
        samples_per_epoch=512,
        batch_size=128,
        lr=1e-3,
    )


def prior_occupancy_model():
    """DifModel with mu = 0.5 + 5 * prior_sdf and a negligible sigma"""
    from DifLite.model import DifModel

    model = DifModel.initialize(np.random.default_rng(0))
    first, *hidden, last = model.predictor.layers
    for layer in model.predictor.layers:
        layer.weight[:] = 0.0
        layer.bias[:] = 0.0
    first.weight[0, 6], first.weight[1, 6] = 1.0, -1.0
    for layer in hidden:
        layer.weight[0, 0], layer.weight[1, 1] = 1.0, 1.0
    last.weight[0, 0], last.weight[0, 1] = 5.0, -5.0
    last.bias[:] = [0.5, -10.0]
    return model


@pytest.fixture(scope="session")
def prior_checkpoint():
    from DifLite.train import make_checkpoint

    return make_checkpoint(prior_occupancy_model(), {}, TrainConfig(), 0, "init")
