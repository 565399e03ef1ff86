"""Test the reconstruction metrics and the sigma profile"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

import DifLite.metrics as metrics
from DifLite.extract import evaluate_grid, marching_cubes
from DifLite.geometry.shapes import Sphere
from DifLite.geometry.trimesh import TriMesh
from DifLite.metrics import chamfer, evaluate_meshes, normal_consistency, p2s, sigma_profile, stratified_points
from DifLite.model import ConstantSigmaSource, DesignedDistributionSource, SmoothOccupancyOracle
from DifLite.utils.errors import EmptyMeshError

N = 5000


@pytest.fixture(scope="module")
def larger_sphere_mesh(bbox):
    shape = Sphere([0.0, 0.0, 0.0], 0.6)
    return marching_cubes(evaluate_grid(SmoothOccupancyOracle(20.0), shape, shape, bbox, 48))


def test_chamfer_identical(sphere_mesh):
    assert chamfer(sphere_mesh, sphere_mesh, N) == pytest.approx(0.0, abs=1e-9)


def test_chamfer_concentric(sphere_mesh, larger_sphere_mesh):
    assert chamfer(sphere_mesh, larger_sphere_mesh, N) == pytest.approx(0.1, rel=0.03)


def test_chamfer_rigid_invariance(sphere_mesh, larger_sphere_mesh):
    rotation = Rotation.from_euler("xyz", [0.3, -0.7, 1.1]).as_matrix()
    shift = np.array([0.2, -0.1, 0.05])
    moved = chamfer(
        sphere_mesh.transformed(rotation, shift), larger_sphere_mesh.transformed(rotation, shift), N
    )
    assert moved == pytest.approx(chamfer(sphere_mesh, larger_sphere_mesh, N), rel=1e-3)


def test_chamfer_scaling(sphere_mesh, larger_sphere_mesh):
    scaled = chamfer(sphere_mesh.transformed(scale=2.0), larger_sphere_mesh.transformed(scale=2.0), N)
    assert scaled == pytest.approx(2.0 * chamfer(sphere_mesh, larger_sphere_mesh, N), rel=1e-3)


def test_chamfer_empty(sphere_mesh):
    with pytest.raises(EmptyMeshError):
        chamfer(TriMesh.empty(), sphere_mesh, N)


def test_p2s(sphere_mesh):
    assert p2s(sphere_mesh.vertices, sphere_mesh) == pytest.approx(0.0, abs=1e-12)
    assert p2s([[0.0, 0.0, 0.0]], sphere_mesh) == pytest.approx(0.5, abs=0.01)
    with pytest.raises(ValueError):
        p2s(np.zeros((0, 3)), sphere_mesh)


def test_normal_consistency(sphere_mesh, larger_sphere_mesh):
    assert normal_consistency(sphere_mesh, sphere_mesh, N) == pytest.approx(0.0, abs=1e-6)
    assert normal_consistency(sphere_mesh, sphere_mesh.flipped(), N) == pytest.approx(2.0, abs=1e-6)
    assert normal_consistency(sphere_mesh, larger_sphere_mesh, N) < 0.01


def test_evaluate_meshes(sphere_mesh, larger_sphere_mesh):
    report = evaluate_meshes(sphere_mesh, larger_sphere_mesh, N, seed=1, prior_mesh=sphere_mesh)
    assert report.chamfer == pytest.approx(0.1, rel=0.03)
    assert report.p2s == pytest.approx(0.1, rel=0.03)
    assert report.chamfer_prior == pytest.approx(0.0, abs=1e-9)
    assert report.to_dict()["seed"] == 1
    assert evaluate_meshes(sphere_mesh, larger_sphere_mesh, N).chamfer_prior is None


def test_evaluate_meshes_index_once(sphere_mesh, larger_sphere_mesh, monkeypatch):
    """Each mesh is indexed once; prebuilt indexes give the standalone values"""
    built = []

    class CountingIndex(metrics.MeshIndex):
        def __init__(self, mesh, *args, **kwargs):
            built.append(mesh)
            super().__init__(mesh, *args, **kwargs)

    monkeypatch.setattr(metrics, "MeshIndex", CountingIndex)
    report = evaluate_meshes(sphere_mesh, larger_sphere_mesh, N, seed=2, prior_mesh=sphere_mesh)
    assert len(built) == 3
    assert report.chamfer == chamfer(sphere_mesh, larger_sphere_mesh, N, seed=2)
    assert report.normal_consistency == normal_consistency(sphere_mesh, larger_sphere_mesh, N, seed=2)


def test_stratified_points(bump_sphere, bbox):
    points = stratified_points(bump_sphere, 2000, 0.3, np.random.default_rng(0), bbox)
    dist = np.abs(bump_sphere.sdf(points))
    assert dist.max() < 0.35
    assert np.mean(dist) == pytest.approx(0.15, abs=0.03)


def test_sigma_profile_designed(bump_sphere, sphere):
    source = DesignedDistributionSource()
    profile = sigma_profile(source, bump_sphere, sphere, n_points=4000, bins=8, seed=3)
    assert profile.n_populated == 8
    assert profile.rho < -0.9
    assert profile.rho_points < -0.5
    assert profile.mean_sigma[0] > 0.45
    assert profile.mean_sigma[-1] < 0.25
    again = sigma_profile(source, bump_sphere, sphere, n_points=4000, bins=8, seed=3)
    assert np.array_equal(again.mean_sigma, profile.mean_sigma)


def test_sigma_profile_constant(bump_sphere, sphere):
    profile = sigma_profile(ConstantSigmaSource(0.3), bump_sphere, sphere, n_points=1000, bins=4)
    assert profile.rho == 0.0
    assert np.allclose(profile.mean_sigma, 0.3)


def test_sigma_profile_bins(bump_sphere, sphere):
    with pytest.raises(ValueError):
        sigma_profile(DesignedDistributionSource(), bump_sphere, sphere, bins=1)
