# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module ablation: Train, extract and evaluate every (variant, seed) pair.

Each run is a :class:`libpyvinyl.Instrument` of three chained calculators in
``<out>/ablation/<variant>_seed<seed>``. Runs are sequential; a failing run is
recorded with its error and the others proceed.
"""

from pathlib import Path

import numpy as np
from libpyvinyl.BaseData import DataCollection
from libpyvinyl.Instrument import Instrument
from tqdm.autonotebook import tqdm

from DifLite.config import apply_parameters, scene_data
from DifLite.EvaluationCalculators import MetricsCalculator
from DifLite.ExtractionCalculators import MarchingCubesCalculator
from DifLite.ReportData import AblationData
from DifLite.SceneCalculators import GroundTruthCalculator
from DifLite.TrainCalculators import DifTrainCalculator
from DifLite.train import MODES
from DifLite.utils.errors import ConfigError, DifLiteError
from DifLite.utils.io import MeshParseError
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)

METRIC_NAMES = ("chamfer", "p2s", "normal_consistency")


def build_instrument(
    config: dict, scene, gt_data, prior_data, variant: str, seed: int, base_dir, threads=0
) -> Instrument:
    """One train -> extract -> eval chain for ``variant`` and ``seed``."""
    train = DifTrainCalculator("train", scene, calculator_base_dir="train")
    apply_parameters(train, config["train"], "train")
    apply_parameters(train, {"mode": variant, "seed": int(seed), "progress": False}, "ablation")

    extract = MarchingCubesCalculator(
        "extract",
        DataCollection(train.output["checkpoint"], scene),
        calculator_base_dir="extract",
    )
    apply_parameters(
        extract,
        {
            "resolution": config["ablation"]["resolution"],
            "mode": config["extraction"]["mode"],
            "iso": config["extraction"]["iso"],
            "threads": threads,
            "progress": False,
        },
        "ablation",
    )

    evaluate = MetricsCalculator(
        "eval",
        DataCollection(extract.output["mesh"], gt_data, prior_data),
        calculator_base_dir="eval",
    )
    apply_parameters(
        evaluate,
        {
            "samples": config["metrics"]["samples"],
            "seeds": [int(config["metrics"]["seeds"][0])],
            "include_prior": config["metrics"]["include_prior"],
        },
        "metrics",
    )

    instrument = Instrument(f"{variant}_seed{seed}")
    instrument.add_calculator(train)
    instrument.add_calculator(extract)
    instrument.add_calculator(evaluate)
    instrument.set_instrument_base_dir(str(base_dir))
    return instrument


def run_ablation(config: dict, out_dir, threads=0, progress: bool = True) -> AblationData:
    """Run the ablation matrix of ``config["ablation"]`` and return its table."""
    section = config["ablation"]
    variants, seeds = list(section["variants"]), list(section["seeds"])
    for i, variant in enumerate(variants):
        if variant not in MODES:
            raise ConfigError(f"ablation.variants.{i}", f"unknown variant '{variant}', expected one of {MODES}")
    if not seeds:
        raise ConfigError("ablation.seeds", "at least one seed is required")
    if not config["metrics"]["seeds"]:
        raise ConfigError("metrics.seeds", "at least one seed is required")

    out_dir = Path(out_dir) / "ablation"
    scene = scene_data(config)
    ground_truth = GroundTruthCalculator("gen", scene, instrument_base_dir=str(out_dir), calculator_base_dir="gen")
    apply_parameters(ground_truth, config["gen"], "gen")
    apply_parameters(
        ground_truth,
        {name: config["train"][name] for name in ("alpha", "k", "beta", "mix", "noise_sd", "seed")},
        "train",
    )
    apply_parameters(ground_truth, {"threads": threads}, "threads")
    ground_truth.backengine()
    gt_data = ground_truth.output["gt_mesh"]
    prior_data = ground_truth.output["prior_mesh"]

    rows = {name: [] for name in AblationData.columns}
    runs = [(variant, seed) for variant in variants for seed in seeds]
    for variant, seed in tqdm(runs, disable=not progress):
        run_dir = out_dir / f"{variant}_seed{seed}"
        logger.info(f"Ablation run '{variant}' seed {seed} in {run_dir}")
        instrument = build_instrument(config, scene, gt_data, prior_data, variant, seed, run_dir, threads)
        values = {name: np.nan for name in METRIC_NAMES}
        try:
            instrument.run()
            report = instrument.calculators["eval"].output["metrics"].to_reports()[0]
            values = {name: getattr(report, name) for name in METRIC_NAMES}
            status = "ok"
        except (DifLiteError, ValueError, OSError, MeshParseError) as err:
            logger.error(f"Ablation run '{variant}' seed {seed} failed: {err}")
            status = f"failed: {type(err).__name__}: {err}"
        rows["variant"].append(variant)
        rows["seed"].append(int(seed))
        rows["status"].append(status)
        for name in METRIC_NAMES:
            rows[name].append(values[name])

    rows["reference"] = section["reference"]
    return AblationData.from_dict(rows, "ablation")


def summarize(data_dict: dict, reference: str = "dif") -> dict:
    """Mean and standard deviation per variant over successful runs, plus per-seed chamfer wins of ``reference``."""
    variants = list(dict.fromkeys(data_dict["variant"]))
    ok = [status == "ok" for status in data_dict["status"]]
    summary = {"reference": reference, "variants": {}, "wins": {}}
    chamfer_by = {}
    for variant in variants:
        index = [i for i, v in enumerate(data_dict["variant"]) if v == variant and ok[i]]
        entry = {"n_ok": len(index), "n_failed": data_dict["variant"].count(variant) - len(index)}
        for name in METRIC_NAMES:
            values = np.array([data_dict[name][i] for i in index], dtype=np.float64)
            entry[f"{name}_mean"] = float(np.mean(values)) if len(values) else None
            entry[f"{name}_sd"] = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0 if len(values) else None
        summary["variants"][variant] = entry
        chamfer_by[variant] = {data_dict["seed"][i]: data_dict["chamfer"][i] for i in index}

    if reference in chamfer_by:
        ref = chamfer_by[reference]
        for variant in variants:
            if variant == reference:
                continue
            shared = set(ref) & set(chamfer_by[variant])
            summary["wins"][variant] = {
                "wins": sum(ref[s] < chamfer_by[variant][s] for s in shared),
                "seeds": len(shared),
            }
    return summary
