# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Ground truth Calculator Module"""

from pathlib import Path

import numpy as np
from libpyvinyl.BaseCalculator import BaseCalculator, CalculatorParameters
from libpyvinyl.BaseData import DataCollection

from DifLite.extract import evaluate_grid, marching_cubes
from DifLite.field import DesignParams
from DifLite.geometry.sampling import sample_training_points
from DifLite.MeshData import MESH_FORMATS, MeshData, write_mesh
from DifLite.model import SmoothOccupancyOracle
from DifLite.SampleBatchData import SampleBatchCSVFormat, SampleBatchData
from DifLite.SceneData import SceneData
from DifLite.utils.errors import EmptyMeshError
from DifLite.utils.io import format_for_path
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)


class GroundTruthCalculator(BaseCalculator):
    """Ground-truth meshes of the target and prior shapes, and a labelled sample batch.

    The meshes are the 0.5 level set of the analytic smooth occupancy, extracted
    with marching cubes; the batch is what one training epoch would draw.
    """

    def __init__(
        self,
        name: str,
        input: DataCollection,
        output_keys: list = None,
        output_data_types=None,
        output_filenames: list = None,
        instrument_base_dir="./",
        calculator_base_dir="GroundTruthCalculator",
        parameters=None,
    ):
        if output_keys is None:
            output_keys = ["gt_mesh", "prior_mesh", "samples"]
        if output_data_types is None:
            output_data_types = [MeshData, MeshData, SampleBatchData]
        if output_filenames is None:
            output_filenames = ["gt_mesh.obj", "prior_mesh.obj", "samples.csv"]
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
        resolution = parameters.new_parameter(
            "resolution", comment="Lattice points per axis of the ground-truth grid."
        )
        resolution.add_interval(2, None, True)
        resolution.value = 128

        samples = parameters.new_parameter(
            "samples", comment="Number of labelled points written for inspection."
        )
        samples.add_interval(1, None, True)
        samples.value = 4096

        alpha = parameters.new_parameter(
            "alpha", comment="Sharpness of the smooth occupancy sigmoid(alpha * sdf)."
        )
        alpha.add_interval(0, None, True)
        alpha.value = 20.0

        k = parameters.new_parameter("k", comment="Designed sigma at the surface.")
        k.add_interval(0, None, True)
        k.value = 0.6

        beta = parameters.new_parameter(
            "beta", comment="Decay of the designed sigma away from occupancy 0.5."
        )
        beta.add_interval(0, None, True)
        beta.value = 4.0

        mix = parameters.new_parameter(
            "mix", comment="Fraction of the samples drawn uniformly in the bounding box."
        )
        mix.add_interval(0, 1, True)
        mix.value = 0.5

        noise_sd = parameters.new_parameter(
            "noise_sd", comment="Standard deviation of the noise added to surface samples, scene units."
        )
        noise_sd.add_interval(0, None, True)
        noise_sd.value = 0.05

        seed = parameters.new_parameter("seed", comment="Seed of the sample batch.")
        seed.add_interval(0, None, True)
        seed.value = 0

        threads = parameters.new_parameter(
            "threads", comment="Worker threads for grid evaluation, 0 to use DIF_THREADS."
        )
        threads.add_interval(0, None, True)
        threads.value = 0

        self.parameters = parameters

    def backengine(self):
        """Extract both ground-truth meshes and draw the sample batch."""
        self.parse_input()
        Path(self.base_dir).mkdir(parents=True, exist_ok=True)
        target, prior, bbox = self.scene_data.build()
        res = self.parameters["resolution"].value
        threads = self.parameters["threads"].value
        oracle = SmoothOccupancyOracle(self.parameters["alpha"].value)

        for key, shape, path in zip(self.output_keys[:2], (target, prior), self.output_file_paths[:2]):
            logger.info(f"Extracting '{key}' at resolution {res}")
            grid = evaluate_grid(oracle, shape, prior, bbox, res, threads=threads)
            mesh = marching_cubes(grid, threads=threads)
            if mesh.is_empty:
                raise EmptyMeshError(f"'{key}' has no surface inside the bounding box")
            write_mesh(mesh, path)
            self.output[key].set_file(path, format_for_path(path, MESH_FORMATS))

        batch = sample_training_points(
            target,
            self.parameters["samples"].value,
            self.parameters["mix"].value,
            self.parameters["noise_sd"].value,
            bbox,
            self.parameters["seed"].value,
            alpha=self.parameters["alpha"].value,
            design=DesignParams(self.parameters["k"].value, self.parameters["beta"].value),
        )
        key = self.output_keys[2]
        path = self.output_file_paths[2]
        SampleBatchData.from_batch(batch, key).write(path, SampleBatchCSVFormat)
        self.output[key].set_file(path, SampleBatchCSVFormat)
        logger.info(
            f"Wrote {len(batch)} samples, {int(np.sum(batch.gt_sdf > 0))} inside the target"
        )
        return self.output

    def parse_input(self):
        """Check the scene data"""
        assert len(self.input) == 1
        self.scene_data = self.input.to_list()[0]
        if not isinstance(self.scene_data, SceneData):
            raise TypeError(f"input should be SceneData, instead of {type(self.scene_data)}")
