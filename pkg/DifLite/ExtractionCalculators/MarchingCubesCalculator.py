# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Marching cubes extraction Calculator Module"""

from pathlib import Path

from libpyvinyl.BaseCalculator import BaseCalculator, CalculatorParameters
from libpyvinyl.BaseData import DataCollection

from DifLite.CheckpointData import CheckpointData
from DifLite.extract import evaluate_grid, marching_cubes
from DifLite.FieldGridData import FieldGridData, GridH5Format
from DifLite.MeshData import MESH_FORMATS, MeshData, write_mesh
from DifLite.model import parse_eval_mode
from DifLite.SceneData import SceneData
from DifLite.train import load_checkpoint
from DifLite.utils.errors import ConfigError, EmptyMeshError
from DifLite.utils.io import format_for_path
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)


class MarchingCubesCalculator(BaseCalculator):
    """Evaluate a trained field on a lattice and triangulate its 0.5 level set.

    Input: a :class:`CheckpointData` and the :class:`SceneData` it was trained on.
    """

    def __init__(
        self,
        name: str,
        input: DataCollection,
        output_keys: list = None,
        output_data_types=None,
        output_filenames: list = None,
        instrument_base_dir="./",
        calculator_base_dir="MarchingCubesCalculator",
        parameters=None,
    ):
        if output_keys is None:
            output_keys = ["mesh", "grid"]
        if output_data_types is None:
            output_data_types = [MeshData, FieldGridData]
        if output_filenames is None:
            output_filenames = ["mesh.obj", "grid.h5"]
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
            "resolution", comment="Lattice points per axis over the scene bounding box."
        )
        resolution.add_interval(2, None, True)
        resolution.value = 128

        mode = parameters.new_parameter(
            "mode", comment='Evaluation mode, "mean" or "sample:SEED".'
        )
        mode.value = "mean"

        iso = parameters.new_parameter("iso", comment="Occupancy level of the surface.")
        iso.add_interval(0, 1, True)
        iso.value = 0.5

        save_grid = parameters.new_parameter(
            "save_grid", comment="Also write the sampled grid to HDF5."
        )
        save_grid.value = False

        threads = parameters.new_parameter(
            "threads", comment="Worker threads, 0 to use DIF_THREADS."
        )
        threads.add_interval(0, None, True)
        threads.value = 0

        progress = parameters.new_parameter("progress", comment="Show a progress bar over grid slabs.")
        progress.value = True

        self.parameters = parameters

    def backengine(self):
        """Sample the field, extract and write the mesh.

        :raises EmptyMeshError: when the level set does not cross the lattice;
            no mesh file is written then.
        """
        self.parse_input()
        Path(self.base_dir).mkdir(parents=True, exist_ok=True)
        mode = self.parameters["mode"].value
        try:
            parse_eval_mode(mode)
        except ValueError as err:
            raise ConfigError("extraction.mode", str(err)) from err
        target, prior, bbox = self.scene_data.build()
        model, _, _ = load_checkpoint(self.checkpoint_data.get_data())
        threads = self.parameters["threads"].value

        grid = evaluate_grid(
            model,
            target,
            prior,
            bbox,
            self.parameters["resolution"].value,
            mode=mode,
            threads=threads,
            progress=self.parameters["progress"].value,
        )
        mesh_key, grid_key = self.output_keys
        mesh_path, grid_path = self.output_file_paths
        if self.parameters["save_grid"].value:
            FieldGridData.from_grid(grid, grid_key, mode).write(grid_path, GridH5Format)
            self.output[grid_key].set_file(grid_path, GridH5Format)
        else:
            self.output[grid_key].set_dict(FieldGridData.from_grid(grid, grid_key, mode).get_data())

        mesh = marching_cubes(grid, self.parameters["iso"].value, threads=threads)
        if mesh.is_empty:
            logger.warning(f"No surface at iso {self.parameters['iso'].value}, refusing to write {mesh_path}")
            raise EmptyMeshError(
                f"extracted surface is empty (resolution {grid.resolution.tolist()}, "
                f"occupancy range [{grid.values.min():.4f}, {grid.values.max():.4f}])"
            )
        write_mesh(mesh, mesh_path)
        self.output[mesh_key].set_file(mesh_path, format_for_path(mesh_path, MESH_FORMATS))
        logger.info(f"Wrote {mesh.n_vertices} vertices, {mesh.n_triangles} triangles to {mesh_path}")
        return self.output

    def parse_input(self):
        """Check the checkpoint and scene data"""
        assert len(self.input) == 2
        self.checkpoint_data, self.scene_data = self.input.to_list()
        if not isinstance(self.checkpoint_data, CheckpointData):
            raise TypeError(f"input[0] should be CheckpointData, instead of {type(self.checkpoint_data)}")
        if not isinstance(self.scene_data, SceneData):
            raise TypeError(f"input[1] should be SceneData, instead of {type(self.scene_data)}")
