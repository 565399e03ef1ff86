# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Uncertainty profile Calculator Module"""

from pathlib import Path

from libpyvinyl.BaseCalculator import BaseCalculator, CalculatorParameters
from libpyvinyl.BaseData import DataCollection

from DifLite.CheckpointData import CheckpointData
from DifLite.metrics import sigma_profile
from DifLite.ReportData import ReportCSVFormat, ReportJSONFormat, SigmaProfileData
from DifLite.SceneData import SceneData
from DifLite.train import load_checkpoint
from DifLite.utils.analysis import plot_profile
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)


class SigmaProfileCalculator(BaseCalculator):
    """Predicted sigma against distance to the target surface.

    Input: a :class:`CheckpointData` of a distribution model and its :class:`SceneData`.
    """

    def __init__(
        self,
        name: str,
        input: DataCollection,
        output_keys: list = None,
        output_data_types=None,
        output_filenames: list = None,
        instrument_base_dir="./",
        calculator_base_dir="SigmaProfileCalculator",
        parameters=None,
    ):
        if output_keys is None:
            output_keys = ["profile", "profile_table"]
        if output_data_types is None:
            output_data_types = [SigmaProfileData, SigmaProfileData]
        if output_filenames is None:
            output_filenames = ["sigma_profile.json", "sigma_profile.csv"]
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
        n_points = parameters.new_parameter("n_points", comment="Number of profile points.")
        n_points.add_interval(1, None, True)
        n_points.value = 20000

        bins = parameters.new_parameter("bins", comment="Number of |sdf| bins.")
        bins.add_interval(2, None, True)
        bins.value = 12

        seed = parameters.new_parameter("seed", comment="Seed of the profile points.")
        seed.add_interval(0, None, True)
        seed.value = 0

        max_dist = parameters.new_parameter(
            "max_dist", comment="Largest distance to the surface in the profile, scene units."
        )
        max_dist.add_interval(0, None, True)
        max_dist.value = 0.5

        plot = parameters.new_parameter("plot", comment="Also save sigma_profile.png.")
        plot.value = True

        self.parameters = parameters

    def backengine(self):
        self.parse_input()
        Path(self.base_dir).mkdir(parents=True, exist_ok=True)
        target, prior, bbox = self.scene_data.build()
        model, _, _ = load_checkpoint(self.checkpoint_data.get_data())
        if not hasattr(model, "sigma_at"):
            raise ValueError("the checkpoint holds a deterministic model without sigma")

        profile = sigma_profile(
            model,
            target,
            prior,
            n_points=self.parameters["n_points"].value,
            bins=self.parameters["bins"].value,
            seed=self.parameters["seed"].value,
            max_dist=self.parameters["max_dist"].value,
            bbox=bbox,
        )
        logger.info(
            f"Spearman rho over {profile.n_populated} populated bins: {profile.rho:.4f} "
            f"(points: {profile.rho_points:.4f})"
        )
        for key, path, format_class in zip(
            self.output_keys, self.output_file_paths, (ReportJSONFormat, ReportCSVFormat)
        ):
            SigmaProfileData.from_profile(profile, key).write(path, format_class)
            self.output[key].set_file(path, format_class)

        if self.parameters["plot"].value:
            plot_profile(
                profile.centers,
                profile.mean_sigma,
                profile.counts,
                str(Path(self.base_dir) / "sigma_profile.png"),
                xlabel="|sdf| (scene units)",
                ylabel="mean predicted sigma",
                title=f"rho = {profile.rho:.3f}",
            )
        return self.output

    def parse_input(self):
        """Check the checkpoint and scene data"""
        assert len(self.input) == 2
        self.checkpoint_data, self.scene_data = self.input.to_list()
        if not isinstance(self.checkpoint_data, CheckpointData):
            raise TypeError(f"input[0] should be CheckpointData, instead of {type(self.checkpoint_data)}")
        if not isinstance(self.scene_data, SceneData):
            raise TypeError(f"input[1] should be SceneData, instead of {type(self.scene_data)}")
