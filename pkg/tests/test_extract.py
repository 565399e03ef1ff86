"""Test the grid evaluation and marching cubes"""

import numpy as np
import pytest
from scipy.spatial import cKDTree

from DifLite.extract import FieldGrid, evaluate_grid, lattice_points, marching_cubes
from DifLite.metrics import chamfer_to_shape
from DifLite.model import DifModel, SmoothOccupancyOracle

ORACLE = SmoothOccupancyOracle(20.0)


@pytest.fixture(scope="module")
def sphere_grid(sphere, bbox):
    return evaluate_grid(ORACLE, sphere, sphere, bbox, 64)


@pytest.fixture(scope="module")
def sphere_mesh64(sphere_grid):
    return marching_cubes(sphere_grid)


def test_grid_center_value(sphere_grid):
    assert sphere_grid.values.max() > 0.99
    assert sphere_grid.values[0, 0, 0] < 0.01
    assert sphere_grid.cell_size == pytest.approx(2.0 / 63)


def test_grid_corners(sphere, bbox):
    grid = evaluate_grid(ORACLE, sphere, sphere, bbox, 2)
    assert grid.values.shape == (2, 2, 2)
    assert np.allclose(grid.points()[[0, -1]], bbox)


def test_grid_deterministic(sphere, bbox):
    a = evaluate_grid(ORACLE, sphere, sphere, bbox, 17)
    b = evaluate_grid(ORACLE, sphere, sphere, bbox, 17, threads=3, slab_size=2)
    assert np.array_equal(a.values, b.values)


def test_grid_sample_mode(sphere, bbox):
    model = DifModel.initialize(np.random.default_rng(0))
    a = evaluate_grid(model, sphere, sphere, bbox, 6, "sample:3", slab_size=2)
    b = evaluate_grid(model, sphere, sphere, bbox, 6, "sample:3", slab_size=2)
    c = evaluate_grid(model, sphere, sphere, bbox, 6, "sample:4", slab_size=2)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.values.min() >= 0 and a.values.max() <= 1


def test_grid_sample_mode_threads(sphere, bbox):
    """Sample-mode draws do not depend on the thread count or the slab size"""
    model = DifModel.initialize(np.random.default_rng(0))
    single = evaluate_grid(model, sphere, sphere, bbox, 9, "sample:3", threads=1)
    pooled = evaluate_grid(model, sphere, sphere, bbox, 9, "sample:3", threads=4)
    sliced = evaluate_grid(model, sphere, sphere, bbox, 9, "sample:3", threads=2, slab_size=4)
    assert np.array_equal(single.values, pooled.values)
    assert np.array_equal(single.values, sliced.values)


def test_field_grid_checks(bbox):
    with pytest.raises(ValueError):
        FieldGrid(bbox, 1, np.zeros(1))
    with pytest.raises(ValueError):
        FieldGrid(bbox, 3, np.zeros(26))
    with pytest.raises(ValueError):
        FieldGrid(bbox, 2, np.full(8, 1.5))


def test_lattice_slab(bbox):
    full = lattice_points(bbox, 5)
    slab = lattice_points(bbox, 5, (1, 3))
    assert np.array_equal(full[25:75], slab)


def test_sphere_radius(sphere_mesh64, sphere_grid):
    radii = np.linalg.norm(sphere_mesh64.vertices, axis=1)
    assert np.mean(np.abs(radii - 0.5)) < sphere_grid.cell_size


def test_vertices_on_grid_edges(sphere_mesh64, sphere_grid):
    steps = (sphere_mesh64.vertices - sphere_grid.bbox[0]) / sphere_grid.spacing
    on_lattice = np.abs(steps - np.round(steps)) < 1e-9
    assert np.all(on_lattice.sum(axis=1) >= 2)


def test_watertight_and_oriented(sphere_mesh64):
    tri = sphere_mesh64.triangles
    edges = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    assert np.all(counts == 2)
    centroids = sphere_mesh64.vertices[tri].mean(axis=1)
    assert np.all(np.einsum("ij,ij->i", sphere_mesh64.face_normals(), centroids) > 0)
    sphere_mesh64.validate()


def test_point_symmetry(sphere_mesh64):
    distance, _ = cKDTree(sphere_mesh64.vertices).query(-sphere_mesh64.vertices)
    assert distance.max() < 1e-6


def test_constant_grid(bbox):
    mesh = marching_cubes(FieldGrid(bbox, 8, np.full(512, 0.7)))
    assert mesh.is_empty


def test_threads_identical(sphere_grid, sphere_mesh64):
    mesh = marching_cubes(sphere_grid, threads=4)
    assert np.array_equal(mesh.vertices, sphere_mesh64.vertices)
    assert np.array_equal(mesh.triangles, sphere_mesh64.triangles)


def test_convergence(sphere, sphere_mesh64, bbox):
    """Chamfer below two cells at 64 and first-order improvement at 127"""
    coarse = chamfer_to_shape(sphere_mesh64, sphere, n=20000, seed=0)
    assert coarse < 0.0625
    fine_mesh = marching_cubes(evaluate_grid(ORACLE, sphere, sphere, bbox, 127))
    fine = chamfer_to_shape(fine_mesh, sphere, n=20000, seed=0)
    assert coarse / fine >= 1.5
