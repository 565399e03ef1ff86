"""Test the calculators and an instrument chaining them"""

from pathlib import Path

import numpy as np
import pytest
from libpyvinyl.BaseData import DataCollection
from libpyvinyl.Instrument import Instrument

from DifLite.CheckpointData import CheckpointData
from DifLite.config import apply_parameters, default_config, merge_config, scene_data
from DifLite.EvaluationCalculators import MetricsCalculator, SigmaProfileCalculator
from DifLite.ExtractionCalculators import MarchingCubesCalculator
from DifLite.MeshData import read_mesh
from DifLite.SceneCalculators import GroundTruthCalculator
from DifLite.TrainCalculators import DifTrainCalculator
from DifLite.utils.errors import EmptyMeshError

TINY_TRAIN = {
    "epochs_phase1": 1,
    "epochs_phase2": 1,
    "samples_per_epoch": 256,
    "batch_size": 128,
    "lr": 1e-3,
    "progress": False,
}


@pytest.fixture(scope="module")
def scene():
    return scene_data(default_config())


@pytest.fixture(scope="module")
def ground_truth(scene, tmp_path_factory):
    calculator = GroundTruthCalculator("gen", scene, instrument_base_dir=str(tmp_path_factory.mktemp("run")))
    apply_parameters(calculator, {"resolution": 32, "samples": 100}, "gen")
    calculator.backengine()
    return calculator


@pytest.fixture(scope="module")
def checkpoint_data(prior_checkpoint):
    return CheckpointData.from_dict(prior_checkpoint, "checkpoint")


def test_ground_truth(ground_truth):
    for path in ground_truth.output_file_paths:
        assert Path(path).is_file()
    gt_mesh = ground_truth.output["gt_mesh"].to_mesh()
    assert not gt_mesh.is_empty
    # the largest bump reaches 0.62 along +z
    assert gt_mesh.vertices[:, 2].max() == pytest.approx(0.62, abs=0.03)
    prior_mesh = read_mesh(ground_truth.output_file_paths[1])
    assert np.allclose(np.linalg.norm(prior_mesh.vertices, axis=1), 0.5, atol=0.01)
    batch = ground_truth.output["samples"].to_batch()
    assert len(batch) == 100


def test_ground_truth_outside_bbox(tmp_path):
    config = merge_config(
        default_config(), {"scene": {"target": {"type": "sphere", "center": [5, 5, 5], "radius": 0.5}}}
    )
    calculator = GroundTruthCalculator("gen", scene_data(config), instrument_base_dir=str(tmp_path))
    apply_parameters(calculator, {"resolution": 8}, "gen")
    with pytest.raises(EmptyMeshError):
        calculator.backengine()


def test_train(scene, tmp_path):
    calculator = DifTrainCalculator("train", scene, instrument_base_dir=str(tmp_path))
    apply_parameters(calculator, TINY_TRAIN, "train")
    calculator.backengine()
    ckpt = calculator.output["checkpoint"].get_data()
    assert ckpt["phase"] == "un" and ckpt["epoch"] == 2
    assert ckpt["train"]["bbox"] == [[-1.0] * 3, [1.0] * 3]
    log = calculator.output["train_log"].to_log()
    assert list(log.column("epoch")) == [1, 2]
    assert Path(calculator.base_dir, "checkpoint_rec.json").is_file()


def test_train_feature_noise(scene, tmp_path):
    calculator = DifTrainCalculator("train", scene, instrument_base_dir=str(tmp_path))
    assert "target normal" in calculator.parameters["feature_noise_sd"].comment
    apply_parameters(calculator, {**TINY_TRAIN, "feature_noise_sd": 0.2}, "train")
    calculator.backengine()
    assert calculator.output["checkpoint"].get_data()["feature_noise_sd"] == 0.2


def test_marching_cubes(checkpoint_data, scene, tmp_path):
    calculator = MarchingCubesCalculator(
        "extract", DataCollection(checkpoint_data, scene), instrument_base_dir=str(tmp_path)
    )
    apply_parameters(calculator, {"resolution": 32, "save_grid": True, "progress": False}, "extraction")
    calculator.backengine()
    mesh = calculator.output["mesh"].to_mesh()
    assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 0.5, atol=0.01)
    grid = calculator.output["grid"].to_grid()
    assert grid.resolution.tolist() == [32, 32, 32]
    assert Path(calculator.output_file_paths[1]).is_file()


def test_marching_cubes_empty(checkpoint_data, scene, tmp_path):
    calculator = MarchingCubesCalculator(
        "extract", DataCollection(checkpoint_data, scene), instrument_base_dir=str(tmp_path)
    )
    apply_parameters(calculator, {"resolution": 2, "progress": False}, "extraction")
    with pytest.raises(EmptyMeshError):
        calculator.backengine()
    assert not Path(calculator.output_file_paths[0]).exists()


def test_metrics(ground_truth, tmp_path):
    gt_data = ground_truth.output["gt_mesh"]
    prior_data = ground_truth.output["prior_mesh"]
    calculator = MetricsCalculator(
        "eval", DataCollection(prior_data, gt_data, prior_data), instrument_base_dir=str(tmp_path)
    )
    apply_parameters(calculator, {"samples": 2000, "seeds": [0, 1]}, "metrics")
    calculator.backengine()
    reports = calculator.output["metrics"].to_reports()
    assert [r.seed for r in reports] == [0, 1]
    assert 0.0 < reports[0].chamfer < 0.05
    assert reports[0].chamfer_prior == pytest.approx(0.0, abs=1e-9)
    table = calculator.output["metrics_table"].to_reports()
    assert table[1].chamfer == pytest.approx(reports[1].chamfer)


def test_sigma_profile(checkpoint_data, scene, tmp_path):
    calculator = SigmaProfileCalculator(
        "profile", DataCollection(checkpoint_data, scene), instrument_base_dir=str(tmp_path)
    )
    apply_parameters(calculator, {"n_points": 500, "bins": 4}, "profile")
    calculator.backengine()
    profile = calculator.output["profile"].to_profile()
    assert profile.n_populated == 4
    assert np.all(profile.mean_sigma < 1e-3)
    assert Path(calculator.base_dir, "sigma_profile.png").is_file()


def test_instrument(checkpoint_data, scene, ground_truth, tmp_path):
    """Extraction feeding the metrics inside one instrument"""
    extract = MarchingCubesCalculator("extract", DataCollection(checkpoint_data, scene))
    apply_parameters(extract, {"resolution": 24, "progress": False}, "extraction")
    evaluate = MetricsCalculator(
        "eval", DataCollection(extract.output["mesh"], ground_truth.output["gt_mesh"])
    )
    apply_parameters(evaluate, {"samples": 1000}, "metrics")

    instrument = Instrument("prior_chain")
    instrument.add_calculator(extract)
    instrument.add_calculator(evaluate)
    instrument.set_instrument_base_dir(str(tmp_path / "prior_chain"))
    instrument.run()
    report = evaluate.output["metrics"].to_reports()[0]
    assert report.chamfer < 0.1
    assert report.chamfer_prior is None
