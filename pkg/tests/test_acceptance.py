"""Long training runs on the default scene

Run with DIF_RUN_SLOW=1; the whole module takes most of an hour on a laptop.
"""

import os
from dataclasses import replace

import numpy as np
import pytest

from DifLite.extract import evaluate_grid, marching_cubes
from DifLite.metrics import chamfer, sigma_profile
from DifLite.model import SmoothOccupancyOracle
from DifLite.train import TrainConfig, evaluate_losses, fit, init_model

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(os.environ.get("DIF_RUN_SLOW") != "1", reason="needs DIF_RUN_SLOW=1"),
]

SEEDS = range(5)


@pytest.fixture(scope="module")
def gt_mesh(bump_sphere, sphere, bbox):
    return marching_cubes(evaluate_grid(SmoothOccupancyOracle(20.0), bump_sphere, sphere, bbox, 128))


def reconstruction_chamfer(model, target, prior, bbox, gt_mesh, res):
    mesh = marching_cubes(evaluate_grid(model, target, prior, bbox, res))
    return chamfer(mesh, gt_mesh, 100_000, 0)


def test_default_fit(bump_sphere, sphere, bbox, gt_mesh):
    config = TrainConfig()
    initial = evaluate_losses(init_model(config), config, "rec", bump_sphere, sphere)["l_rec"]
    result = fit(config, bump_sphere, sphere, progress=False)
    l_rec = result.log.column("l_rec")
    assert l_rec[-1] <= 0.1 * initial
    assert l_rec[-1] < l_rec[0]
    assert reconstruction_chamfer(result.model, bump_sphere, sphere, bbox, gt_mesh, 128) < 0.02


@pytest.fixture(scope="module")
def ablation_chamfer(bump_sphere, sphere, bbox, gt_mesh):
    table = {}
    for mode in ("dif", "dif_no_rectifier", "baseline"):
        table[mode] = np.array(
            [
                reconstruction_chamfer(
                    fit(TrainConfig(mode=mode, seed=seed), bump_sphere, sphere, progress=False).model,
                    bump_sphere,
                    sphere,
                    bbox,
                    gt_mesh,
                    64,
                )
                for seed in SEEDS
            ]
        )
    return table


def test_rectifier_ablation(ablation_chamfer):
    dif, no_rectifier = ablation_chamfer["dif"], ablation_chamfer["dif_no_rectifier"]
    assert np.sum(dif < no_rectifier) >= 4
    assert np.mean(dif) <= 0.9 * np.mean(no_rectifier)


def test_distribution_beats_baseline(ablation_chamfer):
    assert np.mean(ablation_chamfer["dif"]) <= np.mean(ablation_chamfer["baseline"])


def test_uncertainty_declines_with_distance(bump_sphere, sphere):
    config = replace(TrainConfig(), mode="bayes_diagnostic")
    model = fit(config, bump_sphere, sphere, progress=False).model
    profile = sigma_profile(model, bump_sphere, sphere, n_points=20_000, bins=12)
    assert profile.n_populated >= 10
    assert profile.rho < -0.5
