# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Console script for DifLite.

Verbs: ``gen``, ``train``, ``extract``, ``eval``, ``ablate``, ``profile``.
Every run directory gets a ``config.json`` snapshot; each verb writes to its
own sub-directory (``<out>/gen``, ``<out>/train``, ...).

Exit codes: 0 success, 1 numeric failure or divergence, 2 configuration or I/O error.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np
from libpyvinyl.BaseData import DataCollection

from DifLite import __version__
from DifLite.ablation import METRIC_NAMES, run_ablation
from DifLite.CheckpointData import CheckpointData, CheckpointJSONFormat
from DifLite.config import apply_parameters, load_config, scene_data, write_snapshot
from DifLite.EvaluationCalculators import MetricsCalculator, SigmaProfileCalculator
from DifLite.ExtractionCalculators import MarchingCubesCalculator
from DifLite.MeshData import MESH_FORMATS, MeshData
from DifLite.model import parse_eval_mode
from DifLite.ReportData import ReportCSVFormat, ReportJSONFormat
from DifLite.SceneCalculators import GroundTruthCalculator
from DifLite.TrainCalculators import DifTrainCalculator
from DifLite.utils.errors import ConfigError, NumericError
from DifLite.utils.io import MeshParseError, UnknownFileTypeError, format_for_path
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_CONFIG = 2


def format_table(headers, rows) -> str:
    """Right-aligned plain text table; floats with 6 significant digits."""

    def cell(value):
        if value is None or (isinstance(value, float) and not np.isfinite(value)):
            return "-"
        if isinstance(value, (float, np.floating)):
            return f"{value:.6g}"
        return str(value)

    cells = [[cell(v) for v in row] for row in rows]
    widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(headers)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells)
    return "\n".join(lines)


def _require_file(path, what) -> Path:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{what} {path} does not exist")
    return path


def _mesh_data(path, key, what) -> MeshData:
    path = _require_file(path, what)
    return MeshData.from_file(str(path), format_for_path(path, MESH_FORMATS), key)


def _checkpoint_data(path) -> CheckpointData:
    path = _require_file(path, "checkpoint")
    return CheckpointData.from_file(str(path), CheckpointJSONFormat, "checkpoint")


def cmd_gen(config: dict, out_dir: Path, threads: int = 0):
    """Ground-truth meshes and a labelled sample batch."""
    calculator = GroundTruthCalculator(
        "gen", scene_data(config), instrument_base_dir=str(out_dir), calculator_base_dir="gen"
    )
    apply_parameters(calculator, config["gen"], "gen")
    apply_parameters(
        calculator,
        {name: config["train"][name] for name in ("alpha", "k", "beta", "mix", "noise_sd", "seed")},
        "train",
    )
    apply_parameters(calculator, {"threads": threads}, "threads")
    calculator.backengine()
    print(format_table(["output", "file"], zip(calculator.output_keys, calculator.output_file_paths)))
    return calculator.output


def cmd_train(config: dict, out_dir: Path, threads: int = 0):
    """Checkpoint and training log."""
    calculator = DifTrainCalculator(
        "train", scene_data(config), instrument_base_dir=str(out_dir), calculator_base_dir="train"
    )
    apply_parameters(calculator, config["train"], "train")
    calculator.backengine()
    log = calculator.output["train_log"].to_log()
    columns = ["epoch", "phase", "l_rec", "l_dis", "l_un", "l_bayes", "sigma_near", "sigma_far"]
    print(format_table(columns, [[row[col] for col in columns] for row in log.rows]))
    return calculator.output


def _mode_suffix(mode) -> str:
    kind, seed = parse_eval_mode(mode)
    return "" if kind == "mean" else f"_sample{seed}"


def cmd_extract(config: dict, out_dir: Path, checkpoint=None, output=None, save_grid=False, threads: int = 0):
    """Mesh of the 0.5 level set; a non-mean mode gets its own file name."""
    checkpoint = checkpoint or out_dir / "train" / "checkpoint.json"
    mode = config["extraction"]["mode"]
    try:
        suffix = _mode_suffix(mode)
    except ValueError as err:
        raise ConfigError("extraction.mode", str(err)) from err
    mesh_name = output or f"mesh{suffix}.obj"
    format_for_path(mesh_name, MESH_FORMATS)
    calculator = MarchingCubesCalculator(
        "extract",
        DataCollection(_checkpoint_data(checkpoint), scene_data(config)),
        output_filenames=[mesh_name, f"grid{suffix}.h5"],
        instrument_base_dir=str(out_dir),
        calculator_base_dir="extract",
    )
    apply_parameters(calculator, config["extraction"], "extraction")
    apply_parameters(calculator, {"threads": threads, "save_grid": bool(save_grid)}, "extraction")
    calculator.backengine()
    print(f"Mesh written to {calculator.output_file_paths[0]}")
    return calculator.output


def cmd_eval(config: dict, out_dir: Path, mesh=None, reference=None, prior=None, threads: int = 0):
    """Metrics of ``mesh`` against the ground truth; the ground truth is generated when missing."""
    mesh = mesh or out_dir / "extract" / "mesh.obj"
    gen_dir = out_dir / "gen"
    if reference is None:
        reference = gen_dir / "gt_mesh.obj"
        if prior is None:
            prior = gen_dir / "prior_mesh.obj"
        if not Path(reference).is_file() or not Path(prior).is_file():
            logger.info(f"No ground-truth meshes in {gen_dir}, generating them")
            cmd_gen(config, out_dir, threads)
    inputs = [_mesh_data(mesh, "mesh", "mesh"), _mesh_data(reference, "reference", "reference mesh")]
    if prior is not None:
        inputs.append(_mesh_data(prior, "prior", "prior mesh"))
    calculator = MetricsCalculator(
        "eval", DataCollection(*inputs), instrument_base_dir=str(out_dir), calculator_base_dir="eval"
    )
    apply_parameters(calculator, config["metrics"], "metrics")
    calculator.backengine()

    data = calculator.output["metrics"]
    columns = data.columns
    table = data.get_data()
    rows = [[table[name][i] for name in columns] for i in range(data.n_rows())]
    mean = data.summary()["mean"]
    rows.append(["mean"] + [mean.get(name) for name in columns[1:]])
    print(format_table(list(columns), rows))
    return calculator.output


def cmd_ablate(config: dict, out_dir: Path, threads: int = 0):
    """Comparison of the ablation variants over seeds."""
    data = run_ablation(config, out_dir, threads)
    base = out_dir / "ablation"
    data.write(str(base / "ablation.json"), ReportJSONFormat)
    data.write(str(base / "ablation.csv"), ReportCSVFormat)
    summary = data.summary()
    rows = []
    for variant, entry in summary["variants"].items():
        row = [variant, entry["n_ok"], entry["n_failed"]]
        for name in METRIC_NAMES:
            m, s = entry[f"{name}_mean"], entry[f"{name}_sd"]
            row.append("-" if m is None else f"{m:.6g} +- {s:.2g}")
        wins = summary["wins"].get(variant)
        row.append(f"{wins['wins']}/{wins['seeds']}" if wins else "-")
        rows.append(row)
    print(format_table(["variant", "ok", "failed"] + list(METRIC_NAMES) + [f"{summary['reference']} wins"], rows))
    return data


def cmd_profile(config: dict, out_dir: Path, checkpoint=None):
    """Sigma against distance to the surface."""
    checkpoint = checkpoint or out_dir / "train" / "checkpoint.json"
    calculator = SigmaProfileCalculator(
        "profile",
        DataCollection(_checkpoint_data(checkpoint), scene_data(config)),
        instrument_base_dir=str(out_dir),
        calculator_base_dir="profile",
    )
    apply_parameters(calculator, config["profile"], "profile")
    calculator.backengine()
    profile = calculator.output["profile"].to_profile()
    rows = zip(profile.edges[:-1], profile.edges[1:], profile.mean_sigma, profile.counts)
    print(format_table(["|sdf| from", "to", "mean sigma", "count"], rows))
    print(f"Spearman rho (bins): {profile.rho:.4f}  (points): {profile.rho_points:.4f}")
    return calculator.output


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Experiment configuration JSON file.")
    common.add_argument("--out", help="Run directory (default: output.dir of the configuration).")
    common.add_argument("--seed", type=int, help="Overrides train.seed, profile.seed and metrics.seeds.")
    common.add_argument("--threads", type=int, default=0, help="Worker threads (default: DIF_THREADS or 1).")

    parser = argparse.ArgumentParser(prog="DifLite", description="Implicit distribution fields on analytic scenes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen", parents=[common], help="Ground-truth meshes and sample batch.")

    train = sub.add_parser("train", parents=[common], help="Train a model.")
    train.add_argument("--mode", help="Overrides train.mode.")

    extract = sub.add_parser("extract", parents=[common], help="Extract a mesh from a checkpoint.")
    extract.add_argument("--checkpoint", help="Checkpoint file (default: <out>/train/checkpoint.json).")
    extract.add_argument("--mode", help='"mean" or "sample:SEED", overrides extraction.mode.')
    extract.add_argument("--resolution", type=int, help="Overrides extraction.resolution.")
    extract.add_argument("--output", help="Mesh file name inside <out>/extract (.obj or .ply).")
    extract.add_argument("--save-grid", action="store_true", help="Also write the sampled grid (HDF5).")

    evaluate = sub.add_parser("eval", parents=[common], help="Metrics of a mesh against the ground truth.")
    evaluate.add_argument("mesh", nargs="?", help="Mesh to evaluate (default: <out>/extract/mesh.obj).")
    evaluate.add_argument("--reference", help="Ground-truth mesh (default: generated into <out>/gen).")
    evaluate.add_argument("--prior", help="Prior surface mesh for the prior distances.")

    sub.add_parser("ablate", parents=[common], help="Run the ablation matrix.")

    profile = sub.add_parser("profile", parents=[common], help="Sigma against distance to the surface.")
    profile.add_argument("--checkpoint", help="Checkpoint file (default: <out>/train/checkpoint.json).")
    return parser


def _overrides(args) -> dict:
    overrides = {}
    if args.seed is not None:
        overrides["train"] = {"seed": args.seed}
        overrides["profile"] = {"seed": args.seed}
        overrides["metrics"] = {"seeds": [args.seed]}
    if args.command == "train" and args.mode:
        overrides.setdefault("train", {})["mode"] = args.mode
    if args.command == "extract":
        extraction = {}
        if args.mode:
            extraction["mode"] = args.mode
        if args.resolution is not None:
            extraction["resolution"] = args.resolution
        if extraction:
            overrides["extraction"] = extraction
    return overrides


def run(args) -> int:
    config = load_config(args.config, _overrides(args))
    out_dir = Path(args.out or config["output"]["dir"])
    config["output"]["dir"] = str(out_dir)
    write_snapshot(config, out_dir)

    if args.command == "gen":
        cmd_gen(config, out_dir, args.threads)
    elif args.command == "train":
        cmd_train(config, out_dir, args.threads)
    elif args.command == "extract":
        cmd_extract(config, out_dir, args.checkpoint, args.output, args.save_grid, args.threads)
    elif args.command == "eval":
        cmd_eval(config, out_dir, args.mesh, args.reference, args.prior, args.threads)
    elif args.command == "ablate":
        cmd_ablate(config, out_dir, args.threads)
    elif args.command == "profile":
        cmd_profile(config, out_dir, args.checkpoint)
    return EXIT_OK


def main(argv=None):
    """Console script for DifLite."""
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except NumericError as err:
        logger.error(f"{type(err).__name__}: {err}")
        return EXIT_NUMERIC
    except (
        ConfigError,
        OSError,
        UnknownFileTypeError,
        MeshParseError,
        json.JSONDecodeError,
        ValueError,
        TypeError,
    ) as err:
        logger.error(f"{type(err).__name__}: {err}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())  # pragma: no cover
