# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module config: Experiment configuration.

An experiment is one JSON file with the sections of :data:`DEFAULT_CONFIG`.
Missing sections and keys take their defaults; shape specs (``scene.target``,
``scene.prior``) are replaced whole. Every error names the dotted key path.
"""

import copy
import json
from dataclasses import fields
from pathlib import Path

from DifLite.SceneData import SceneData
from DifLite.train import TrainConfig
from DifLite.utils.errors import ConfigError
from DifLite.utils.io import to_jsonable
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)

DEFAULT_SCENE = {
    "target": {
        "type": "bump_sphere",
        "center": [0.0, 0.0, 0.0],
        "radius": 0.5,
        "bumps": [
            {"direction": [0.0, 0.0, 1.0], "amplitude": 0.12, "width": 0.35},
            {"direction": [1.0, 0.0, 0.0], "amplitude": 0.08, "width": 0.3},
            {"direction": [-0.6, 0.8, 0.0], "amplitude": 0.06, "width": 0.25},
        ],
    },
    "prior": {"type": "sphere", "center": [0.0, 0.0, 0.0], "radius": 0.5},
    "bbox": [[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]],
}

DEFAULT_CONFIG = {
    "scene": DEFAULT_SCENE,
    "train": {f.name: f.default for f in fields(TrainConfig) if f.name != "bbox"},
    "extraction": {"resolution": 128, "mode": "mean", "iso": 0.5},
    "metrics": {"samples": 100000, "seeds": [0], "include_prior": True},
    "profile": {"n_points": 20000, "bins": 12, "seed": 0, "max_dist": 0.5},
    "ablation": {
        "variants": ["baseline", "dif_no_rectifier", "dif"],
        "seeds": [0, 1, 2, 3, 4],
        "reference": "dif",
        "resolution": 64,
    },
    "gen": {"resolution": 128, "samples": 4096},
    "output": {"dir": "runs/dif"},
}

SHAPE_KEYS = ("scene.target", "scene.prior")


def default_config() -> dict:
    return copy.deepcopy(DEFAULT_CONFIG)


def _coerce(default, value, path):
    """Check ``value`` against the type of its default."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {value!r}")
        if default and all(isinstance(d, int) and not isinstance(d, bool) for d in default):
            return [_coerce(default[0], v, f"{path}.{i}") for i, v in enumerate(value)]
        if default and all(isinstance(d, str) for d in default):
            return [_coerce(default[0], v, f"{path}.{i}") for i, v in enumerate(value)]
        return value
    return value


def merge_config(base: dict, override: dict, path: str = "") -> dict:
    """Overlay ``override`` on ``base``; unknown keys are errors."""
    if not isinstance(override, dict):
        raise ConfigError(path or "config", f"expected a mapping, got {type(override).__name__}")
    merged = copy.deepcopy(base)
    for key, value in override.items():
        key_path = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(key_path, f"unknown key, expected one of {sorted(base)}")
        if key_path in SHAPE_KEYS:
            merged[key] = copy.deepcopy(value)
        elif isinstance(base[key], dict):
            merged[key] = merge_config(base[key], value, key_path)
        else:
            merged[key] = _coerce(base[key], value, key_path)
    return merged


def _resolve_mesh_paths(spec, base_dir: Path):
    if isinstance(spec, dict):
        if spec.get("type") == "tri_mesh" and "path" in spec:
            path = Path(spec["path"])
            if not path.is_absolute():
                spec["path"] = str(base_dir / path)
        for member in spec.get("members", []) if isinstance(spec.get("members"), list) else []:
            _resolve_mesh_paths(member, base_dir)


def load_config(filename=None, overrides: dict = None) -> dict:
    """Defaults, overlaid by the JSON file ``filename``, overlaid by ``overrides``.

    Relative ``tri_mesh`` paths resolve against the directory of ``filename``.
    """
    config = default_config()
    if filename is not None:
        filename = Path(filename)
        try:
            with open(filename, "r") as fh:
                content = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(str(filename), f"invalid JSON: {err}") from err
        config = merge_config(config, content)
        for key in ("target", "prior"):
            _resolve_mesh_paths(config["scene"][key], filename.resolve().parent)
        logger.info(f"Loaded configuration from {filename}")
    if overrides:
        config = merge_config(config, overrides)
    return config


def train_config(config: dict) -> TrainConfig:
    """The :class:`TrainConfig` of ``config``; the bbox comes from the scene."""
    try:
        return TrainConfig.from_dict(dict(config["train"], bbox=config["scene"]["bbox"]))
    except ValueError as err:
        raise ConfigError("train", str(err)) from err


def scene_data(config: dict, key: str = "scene") -> SceneData:
    """Scene of ``config`` as :class:`SceneData`, validated."""
    data = SceneData.from_dict(copy.deepcopy(config["scene"]), key)
    data.build()
    return data


def apply_parameters(calculator, values: dict, path: str):
    """Set calculator parameters from a config section, reporting illegal values by key path."""
    for name, value in values.items():
        try:
            calculator.parameters[name] = value
        except (KeyError, ValueError, TypeError) as err:
            raise ConfigError(f"{path}.{name}", str(err)) from err


def write_snapshot(config: dict, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "config.json"
    with open(path, "w") as fh:
        json.dump(to_jsonable(config), fh, indent=2)
        fh.write("\n")
    return path
