"""Test the console script"""

import json

import pytest

from DifLite import cli
from DifLite.CheckpointData import CheckpointData, CheckpointJSONFormat
from DifLite.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, format_table, main

SMALL = {
    "gen": {"resolution": 24, "samples": 50},
    "train": {"epochs_phase1": 1, "epochs_phase2": 1, "samples_per_epoch": 256, "batch_size": 128, "lr": 1e-3},
    "extraction": {"resolution": 24},
    "metrics": {"samples": 1000},
    "profile": {"n_points": 300, "bins": 4},
    "ablation": {"variants": ["dif"], "seeds": [0], "resolution": 16},
}


@pytest.fixture
def run_dir(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps(SMALL))
    return tmp_path / "run", ["--config", str(config), "--out", str(tmp_path / "run")]


@pytest.fixture
def checkpoint_file(prior_checkpoint, tmp_path):
    path = tmp_path / "prior_checkpoint.json"
    CheckpointData.from_dict(prior_checkpoint, "checkpoint").write(str(path), CheckpointJSONFormat)
    return str(path)


def test_format_table():
    text = format_table(["name", "value"], [["a", 0.123456789], ["bb", None], ["c", float("nan")]])
    lines = text.splitlines()
    assert lines[0] == "name     value"
    assert lines[2] == "   a  0.123457"
    assert lines[3].endswith("-") and lines[4].endswith("-")


def test_missing_mesh(tmp_path):
    code = main(["eval", str(tmp_path / "none.obj"), "--reference", str(tmp_path / "gt.obj"), "--out", str(tmp_path)])
    assert code == EXIT_CONFIG


def test_bad_config(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"train": {"epochs": 3}}))
    assert main(["gen", "--config", str(config), "--out", str(tmp_path)]) == EXIT_CONFIG
    config.write_text("{")
    assert main(["gen", "--config", str(config), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_gen_and_seed(run_dir):
    out, args = run_dir
    assert main(["gen", *args, "--seed", "7"]) == EXIT_OK
    for name in ("gt_mesh.obj", "prior_mesh.obj", "samples.csv"):
        assert (out / "gen" / name).is_file()
    snapshot = json.loads((out / "config.json").read_text())
    assert snapshot["train"]["seed"] == 7
    assert snapshot["metrics"]["seeds"] == [7]
    assert snapshot["gen"]["resolution"] == 24


def test_train(run_dir, capsys):
    out, args = run_dir
    assert main(["train", *args]) == EXIT_OK
    assert (out / "train" / "checkpoint.json").is_file()
    assert (out / "train" / "train_log.csv").is_file()
    assert "l_rec" in capsys.readouterr().out
    assert main(["train", *args, "--mode", "bogus"]) == EXIT_CONFIG


def test_extract_eval_profile(run_dir, checkpoint_file, capsys):
    out, args = run_dir
    assert main(["extract", *args, "--checkpoint", checkpoint_file]) == EXIT_OK
    assert (out / "extract" / "mesh.obj").is_file()
    noisy = ["--mode", "sample:3", "--output", "noisy.ply"]
    assert main(["extract", *args, "--checkpoint", checkpoint_file, *noisy]) == EXIT_OK
    assert (out / "extract" / "noisy.ply").is_file()

    assert main(["eval", *args]) == EXIT_OK
    assert (out / "gen" / "gt_mesh.obj").is_file()
    assert (out / "eval" / "metrics.json").is_file()
    assert "mean" in capsys.readouterr().out

    assert main(["profile", *args, "--checkpoint", checkpoint_file]) == EXIT_OK
    assert (out / "profile" / "sigma_profile.csv").is_file()
    assert "Spearman rho" in capsys.readouterr().out


def test_extract_errors(run_dir, checkpoint_file):
    out, args = run_dir
    assert main(["extract", *args, "--checkpoint", checkpoint_file, "--resolution", "2"]) == EXIT_NUMERIC
    assert not (out / "extract" / "mesh.obj").exists()
    assert main(["extract", *args, "--checkpoint", checkpoint_file, "--mode", "median"]) == EXIT_CONFIG
    assert main(["extract", *args, "--checkpoint", checkpoint_file, "--output", "mesh.stl"]) == EXIT_CONFIG
    assert main(["extract", *args, "--checkpoint", str(out / "none.json")]) == EXIT_CONFIG


def test_ablate(run_dir):
    out, args = run_dir
    assert main(["ablate", *args]) == EXIT_OK
    content = json.loads((out / "ablation" / "ablation.json").read_text())
    assert content["variant"] == ["dif"]
    assert content["status"][0] == "ok" or content["status"][0].startswith("failed")
    assert (out / "ablation" / "ablation.csv").is_file()


def test_numeric_exit(run_dir, monkeypatch):
    from DifLite.utils.errors import DivergenceError

    def diverging(*args, **kwargs):
        raise DivergenceError("loss is nan")

    monkeypatch.setattr(cli, "cmd_train", diverging)
    _, args = run_dir
    assert main(["train", *args]) == EXIT_NUMERIC
