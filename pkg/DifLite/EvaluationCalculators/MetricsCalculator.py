# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Reconstruction metrics Calculator Module"""

from pathlib import Path

from libpyvinyl.BaseCalculator import BaseCalculator, CalculatorParameters
from libpyvinyl.BaseData import DataCollection

from DifLite.MeshData import MeshData
from DifLite.metrics import evaluate_meshes
from DifLite.ReportData import MetricsData, ReportCSVFormat, ReportJSONFormat
from DifLite.utils.errors import ConfigError
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)


class MetricsCalculator(BaseCalculator):
    """Chamfer, P2S and normal consistency of a reconstruction against the ground truth.

    Input: the reconstructed :class:`MeshData`, the ground-truth `MeshData` and,
    optionally, the prior surface `MeshData`. One report row per seed.
    """

    def __init__(
        self,
        name: str,
        input: DataCollection,
        output_keys: list = None,
        output_data_types=None,
        output_filenames: list = None,
        instrument_base_dir="./",
        calculator_base_dir="MetricsCalculator",
        parameters=None,
    ):
        if output_keys is None:
            output_keys = ["metrics", "metrics_table"]
        if output_data_types is None:
            output_data_types = [MetricsData, MetricsData]
        if output_filenames is None:
            output_filenames = ["metrics.json", "metrics.csv"]
        super().__init__(
            name,
            input,
            output_keys,
            output_data_types=output_data_types,
            output_filenames=output_filenames,
            instrument_base_dir=instrument_base_dir,
            calculator_base_dir=calculator_base_dir,
            parameters=parameters,
        )

    def init_parameters(self):
        parameters = CalculatorParameters()
        samples = parameters.new_parameter(
            "samples", comment="Area-weighted surface samples per mesh and direction."
        )
        samples.add_interval(1, None, True)
        samples.value = 100000

        seeds = parameters.new_parameter("seeds", comment="Sampling seeds, one report row each.")
        seeds.value = [0]

        include_prior = parameters.new_parameter(
            "include_prior", comment="Also measure the distance to the prior surface when it is given."
        )
        include_prior.value = True

        self.parameters = parameters

    def backengine(self):
        """Compute the metrics for every seed and write JSON and CSV reports."""
        self.parse_input()
        Path(self.base_dir).mkdir(parents=True, exist_ok=True)
        seeds = list(self.parameters["seeds"].value)
        if not seeds:
            raise ConfigError("metrics.seeds", "at least one seed is required")
        mesh = self.mesh_data.to_mesh()
        gt_mesh = self.gt_data.to_mesh()
        prior_mesh = None
        if self.prior_data is not None and self.parameters["include_prior"].value:
            prior_mesh = self.prior_data.to_mesh()

        n = self.parameters["samples"].value
        reports = []
        for seed in seeds:
            report = evaluate_meshes(mesh, gt_mesh, n, int(seed), prior_mesh)
            logger.info(
                f"seed {seed}: chamfer={report.chamfer:.6f} p2s={report.p2s:.6f} "
                f"normal_consistency={report.normal_consistency:.6f}"
            )
            reports.append(report)

        for key, path, format_class in zip(
            self.output_keys, self.output_file_paths, (ReportJSONFormat, ReportCSVFormat)
        ):
            MetricsData.from_reports(reports, key).write(path, format_class)
            self.output[key].set_file(path, format_class)
        return self.output

    def parse_input(self):
        """Check the mesh data"""
        data = self.input.to_list()
        if len(data) not in (2, 3):
            raise ValueError(f"expected 2 or 3 MeshData inputs, got {len(data)}")
        for i, item in enumerate(data):
            if not isinstance(item, MeshData):
                raise TypeError(f"input[{i}] should be MeshData, instead of {type(item)}")
        self.mesh_data, self.gt_data = data[:2]
        self.prior_data = data[2] if len(data) == 3 else None
