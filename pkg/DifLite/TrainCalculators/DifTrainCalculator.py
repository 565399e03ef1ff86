# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""D-IF training Calculator Module"""

from pathlib import Path

from libpyvinyl.BaseCalculator import BaseCalculator, CalculatorParameters
from libpyvinyl.BaseData import DataCollection

from DifLite.CheckpointData import CheckpointData, CheckpointJSONFormat
from DifLite.ReportData import ReportCSVFormat, TrainLogData
from DifLite.SceneData import SceneData
from DifLite.train import MODES, TrainConfig, fit
from DifLite.utils.errors import ConfigError
from DifLite.utils.Logger import setLogger

logger = setLogger(__name__)


class DifTrainCalculator(BaseCalculator):
    """Train a distribution field (or one of its ablation variants) on a scene.

    Every :class:`~DifLite.train.TrainConfig` option is a parameter of the same
    name; the bounding box comes from the scene. Outputs are the final checkpoint
    and the per-epoch training log.
    """

    def __init__(
        self,
        name: str,
        input: DataCollection,
        output_keys: list = None,
        output_data_types=None,
        output_filenames: list = None,
        instrument_base_dir="./",
        calculator_base_dir="DifTrainCalculator",
        parameters=None,
    ):
        if output_keys is None:
            output_keys = ["checkpoint", "train_log"]
        if output_data_types is None:
            output_data_types = [CheckpointData, TrainLogData]
        if output_filenames is None:
            output_filenames = ["checkpoint.json", "train_log.csv"]
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

        mode = parameters.new_parameter(
            "mode",
            comment="Training mode: dif, dif_no_rectifier, baseline, bayes_diagnostic, "
            "dif_l2_mu or dif_constant_sigma.",
        )
        mode.add_option(list(MODES), True)
        mode.value = "dif"

        alpha1 = parameters.new_parameter("alpha1", comment="Weight of the distribution loss.")
        alpha1.add_interval(0, None, True)
        alpha1.value = 1.0

        alpha2 = parameters.new_parameter("alpha2", comment="Weight of the reconstruction loss.")
        alpha2.add_interval(0, None, True)
        alpha2.value = 0.55

        k = parameters.new_parameter("k", comment="Designed sigma at the surface.")
        k.add_interval(0, None, True)
        k.value = 0.6

        beta = parameters.new_parameter(
            "beta", comment="Decay of the designed sigma away from occupancy 0.5."
        )
        beta.add_interval(0, None, True)
        beta.value = 4.0

        alpha = parameters.new_parameter(
            "alpha", comment="Sharpness of the smooth occupancy sigmoid(alpha * sdf)."
        )
        alpha.add_interval(0, None, True)
        alpha.value = 20.0

        lr = parameters.new_parameter("lr", comment="Adam learning rate.")
        lr.add_interval(0, None, True)
        lr.value = 1e-4

        batch_size = parameters.new_parameter("batch_size", comment="Points per optimizer step.")
        batch_size.add_interval(1, None, True)
        batch_size.value = 512

        epochs_phase1 = parameters.new_parameter(
            "epochs_phase1", comment="Epochs of the reconstruction-only phase."
        )
        epochs_phase1.add_interval(0, None, True)
        epochs_phase1.value = 10

        epochs_phase2 = parameters.new_parameter(
            "epochs_phase2", comment="Epochs of the joint distribution and reconstruction phase."
        )
        epochs_phase2.add_interval(0, None, True)
        epochs_phase2.value = 5

        samples_per_epoch = parameters.new_parameter(
            "samples_per_epoch", comment="Fresh labelled points drawn every epoch."
        )
        samples_per_epoch.add_interval(1, None, True)
        samples_per_epoch.value = 65536

        mix = parameters.new_parameter(
            "mix", comment="Fraction of the points drawn uniformly in the bounding box."
        )
        mix.add_interval(0, 1, True)
        mix.value = 0.5

        noise_sd = parameters.new_parameter(
            "noise_sd", comment="Standard deviation of the noise added to surface samples, scene units."
        )
        noise_sd.add_interval(0, None, True)
        noise_sd.value = 0.05

        feature_noise_sd = parameters.new_parameter(
            "feature_noise_sd",
            comment="Standard deviation of the noise on the target normal feature during training.",
        )
        feature_noise_sd.add_interval(0, None, True)
        feature_noise_sd.value = 0.1

        seed = parameters.new_parameter("seed", comment="Seed of initialisation and sampling.")
        seed.add_interval(0, None, True)
        seed.value = 0

        detached = parameters.new_parameter(
            "detached", comment="Stop the reconstruction gradient from reaching mu and sigma."
        )
        detached.value = False

        phase1_train_predictor = parameters.new_parameter(
            "phase1_train_predictor", comment="Update the predictor during the reconstruction-only phase."
        )
        phase1_train_predictor.value = True

        binary_occupancy = parameters.new_parameter(
            "binary_occupancy", comment="Train against binary instead of smooth occupancy."
        )
        binary_occupancy.value = False

        near_band = parameters.new_parameter(
            "near_band", comment="|sdf| below which a point counts as near in the log."
        )
        near_band.add_interval(0, None, True)
        near_band.value = 0.05

        far_band = parameters.new_parameter(
            "far_band", comment="|sdf| above which a point counts as far in the log."
        )
        far_band.add_interval(0, None, True)
        far_band.value = 0.2

        progress = parameters.new_parameter("progress", comment="Show a progress bar per phase.")
        progress.value = True

        self.parameters = parameters

    def train_config(self, bbox) -> TrainConfig:
        values = {name: self.parameters[name].value for name in self.parameters.parameters if name != "progress"}
        try:
            return TrainConfig.from_dict(dict(values, bbox=[list(map(float, row)) for row in bbox]))
        except ValueError as err:
            raise ConfigError("train", str(err)) from err

    def backengine(self):
        """Run the training schedule and write checkpoint and log."""
        self.parse_input()
        Path(self.base_dir).mkdir(parents=True, exist_ok=True)
        target, prior, bbox = self.scene_data.build()
        config = self.train_config(bbox)
        logger.info(f"Training mode '{config.mode}' with seed {config.seed} in {self.base_dir}")
        result = fit(config, target, prior, out_dir=self.base_dir, progress=self.parameters["progress"].value)

        ckpt_key, log_key = self.output_keys
        ckpt_path, log_path = self.output_file_paths
        if Path(ckpt_path) not in result.checkpoints:
            CheckpointData.from_dict(result.checkpoint, ckpt_key).write(ckpt_path, CheckpointJSONFormat)
        self.output[ckpt_key].set_file(ckpt_path, CheckpointJSONFormat)

        TrainLogData.from_log(result.log, log_key, config.mode, config.seed).write(log_path, ReportCSVFormat)
        self.output[log_key].set_file(log_path, ReportCSVFormat)
        return self.output

    def parse_input(self):
        """Check the scene data"""
        assert len(self.input) == 1
        self.scene_data = self.input.to_list()[0]
        if not isinstance(self.scene_data, SceneData):
            raise TypeError(f"input should be SceneData, instead of {type(self.scene_data)}")
