"""Test the scene, sample batch, grid, checkpoint and report data mappers"""

import json

import numpy as np
import pytest

from DifLite.CheckpointData import CheckpointData, CheckpointJSONFormat, read_checkpoint
from DifLite.config import DEFAULT_SCENE
from DifLite.extract import FieldGrid
from DifLite.FieldGridData import FieldGridData, GridH5Format
from DifLite.geometry.sampling import sample_training_points
from DifLite.geometry.shapes import BumpSphere, Sphere
from DifLite.metrics import MetricsReport, SigmaProfile
from DifLite.model import DifModel
from DifLite.ReportData import (
    AblationData,
    MetricsData,
    ReportCSVFormat,
    ReportJSONFormat,
    SigmaProfileData,
    TrainLogData,
)
from DifLite.SampleBatchData import SampleBatchCSVFormat, SampleBatchData
from DifLite.SceneData import SceneData, SceneJSONFormat
from DifLite.train import TrainConfig, TrainLog, make_checkpoint
from DifLite.utils.errors import ConfigError


@pytest.fixture(scope="module")
def scene_file(tmp_path_factory):
    SD = SceneData.from_dict(DEFAULT_SCENE, key="scene")
    fn = tmp_path_factory.mktemp("data") / "scene.json"
    SD.write(str(fn), SceneJSONFormat)
    return fn


def test_scene_from_file(scene_file):
    SD = SceneData.from_file(str(scene_file), SceneJSONFormat, key="scene")
    assert SD.mapping_type == SceneJSONFormat
    target, prior, bbox = SD.build()
    assert isinstance(target, BumpSphere)
    assert isinstance(prior, Sphere)
    assert np.array_equal(bbox, [[-1.0] * 3, [1.0] * 3])


def test_scene_nested_key(tmp_path):
    fn = tmp_path / "config.json"
    scene = {
        "target": {"type": "sphere", "center": [0, 0, 0], "radius": 0.4},
        "prior": {"type": "sphere", "center": [0, 0, 0], "radius": 0.5},
        "bbox": [[-1, -1, -1], [1, 1, 1]],
    }
    fn.write_text(json.dumps({"scene": scene}))
    target, _, _ = SceneData.from_file(str(fn), SceneJSONFormat, key="scene").build()
    assert target.radius == 0.4


def test_scene_missing_entry():
    target = {"type": "sphere", "center": [0, 0, 0], "radius": 0.4}
    SD = SceneData.from_dict({"target": target, "prior": None, "bbox": None}, key="scene")
    with pytest.raises(ConfigError) as err:
        SD.build()
    assert err.value.path == "scene.prior"


def test_sample_batch_csv(bump_sphere, bbox, tmp_path):
    batch = sample_training_points(bump_sphere, 64, 0.5, 0.05, bbox, 3)
    fn = tmp_path / "samples.csv"
    SampleBatchData.from_batch(batch, "samples").write(str(fn), SampleBatchCSVFormat)
    loaded = SampleBatchData.from_file(str(fn), SampleBatchCSVFormat, "samples").to_batch()
    assert len(loaded) == 64
    assert np.array_equal(loaded.points, batch.points)
    assert np.array_equal(loaded.designed_sigma, batch.designed_sigma)


def test_sample_batch_csv_header(tmp_path):
    fn = tmp_path / "samples.csv"
    fn.write_text("x,y,z\n0,0,0\n")
    with pytest.raises(ValueError):
        SampleBatchData.from_file(str(fn), SampleBatchCSVFormat, "samples").get_data()


def test_field_grid_h5(bbox, tmp_path):
    values = np.random.default_rng(0).uniform(0, 1, 4 * 5 * 6)
    grid = FieldGrid(bbox, (4, 5, 6), values)
    fn = tmp_path / "grid.h5"
    FieldGridData.from_grid(grid, "grid", mode="sample:3").write(str(fn), GridH5Format)
    FGD = FieldGridData.from_file(str(fn), GridH5Format, "grid")
    assert FGD.get_data()["mode"] == "sample:3"
    loaded = FGD.to_grid()
    assert np.array_equal(loaded.values, grid.values)
    assert loaded.resolution.tolist() == [4, 5, 6]


def test_checkpoint_bit_exact(tmp_path):
    model = DifModel.initialize(np.random.default_rng(7))
    ckpt = make_checkpoint(model, {}, TrainConfig(), 0, "init")
    fn = tmp_path / "checkpoint.json"
    CheckpointData.from_dict(ckpt, "checkpoint").write(str(fn), CheckpointJSONFormat)
    loaded = read_checkpoint(fn)
    for name, weights in ckpt["weights"].items():
        assert np.array_equal(loaded["weights"][name], weights)
    assert loaded["train"] == TrainConfig().to_dict()


def test_train_log_report(tmp_path):
    log = TrainLog()
    log.append({"epoch": 1, "phase": "rec", "loss": 0.5, "l_rec": 0.5})
    log.append({"epoch": 2, "phase": "un", "loss": 0.4, "l_rec": 0.3, "l_dis": 0.1})
    TLD = TrainLogData.from_log(log, "train_log", "dif", 0)
    TLD.write(str(tmp_path / "train_log.csv"), ReportCSVFormat)
    loaded = TrainLogData.from_file(str(tmp_path / "train_log.csv"), ReportCSVFormat, "train_log")
    assert loaded.get_data()["mode"] == "dif"
    back = loaded.to_log()
    assert list(back.column("phase")) == ["rec", "un"]
    assert np.isnan(back.column("l_dis")[0])
    assert back.column("l_dis")[1] == 0.1


def test_metrics_report(tmp_path):
    reports = [MetricsReport(0.01, 0.02, 0.05, 1000, seed) for seed in range(3)]
    MD = MetricsData.from_reports(reports, "metrics")
    MD.write(str(tmp_path / "metrics.json"), ReportJSONFormat)
    content = json.loads((tmp_path / "metrics.json").read_text())
    assert content["summary"]["mean"]["chamfer"] == pytest.approx(0.01)
    assert content["summary"]["mean"]["chamfer_prior"] is None
    loaded = MetricsData.from_file(str(tmp_path / "metrics.json"), ReportJSONFormat, "metrics").to_reports()
    assert loaded[2].seed == 2
    assert loaded[0].chamfer_prior is None


def test_sigma_profile_report(tmp_path):
    profile = SigmaProfile(np.linspace(0, 0.5, 4), np.array([0.3, np.nan, 0.1]), np.array([5, 0, 4]), -0.8, -0.7, 9, 0)
    SPD = SigmaProfileData.from_profile(profile, "profile")
    SPD.write(str(tmp_path / "profile.csv"), ReportCSVFormat)
    loaded = SigmaProfileData.from_file(str(tmp_path / "profile.csv"), ReportCSVFormat, "profile").to_profile()
    assert np.allclose(loaded.edges, profile.edges)
    assert np.isnan(loaded.mean_sigma[1])
    assert loaded.n_populated == 2
    assert loaded.rho == -0.8


def test_ablation_summary():
    data = {
        "variant": ["dif", "dif", "baseline", "baseline"],
        "seed": [0, 1, 0, 1],
        "status": ["ok", "ok", "ok", "NumericFaultError: nan"],
        "chamfer": [0.01, 0.02, 0.03, None],
        "p2s": [0.01, 0.01, 0.02, None],
        "normal_consistency": [0.1, 0.1, 0.2, None],
        "reference": "dif",
    }
    summary = AblationData.from_dict(data, "ablation").summary()
    assert summary["variants"]["baseline"]["n_failed"] == 1
    assert summary["variants"]["dif"]["chamfer_mean"] == pytest.approx(0.015)
    assert summary["wins"]["baseline"] == {"wins": 1, "seeds": 1}


def test_ragged_report():
    data = {name: [0.0] for name in MetricsData.columns}
    data["p2s"] = [0.0, 1.0]
    MD = MetricsData.from_dict(data, "metrics")
    with pytest.raises(ValueError):
        MD.n_rows()
