# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module SampleBatchCSVFormat: Labelled training points as CSV."""

import numpy as np
from libpyvinyl.BaseFormat import BaseFormat

COLUMNS = ("x", "y", "z", "gt_sdf", "gt_occ", "designed_mu", "designed_sigma")


class SampleBatchCSVFormat(BaseFormat):
    """One row per point: coordinates, signed distance, occupancy and the designed distribution."""

    def __init__(self) -> None:
        super().__init__()

    @classmethod
    def format_register(self):
        key = "SampleCSV"
        description = "CSV format for labelled sample points"
        file_extension = ".csv"
        read_kwargs = [""]
        write_kwargs = [""]
        return self._create_format_register(
            key, description, file_extension, read_kwargs, write_kwargs
        )

    @staticmethod
    def direct_convert_formats():
        return []

    @classmethod
    def read(cls, filename: str) -> dict:
        """Read the data from the file with the `filename` to a dictionary."""
        with open(filename, "r") as fh:
            header = fh.readline().strip().split(",")
        if tuple(header) != COLUMNS:
            raise ValueError(f"{filename}: expected columns {','.join(COLUMNS)}, got {','.join(header)}")
        table = np.loadtxt(filename, delimiter=",", skiprows=1, ndmin=2).reshape(-1, len(COLUMNS))
        return {
            "points": table[:, :3],
            "gt_sdf": table[:, 3],
            "gt_occ": table[:, 4],
            "designed_mu": table[:, 5],
            "designed_sigma": table[:, 6],
        }

    @classmethod
    def write(cls, object, filename: str, key: str = None):
        """Save the data with the `filename`."""
        data_dict = object.get_data()
        table = np.column_stack(
            [
                np.asarray(data_dict["points"], dtype=np.float64).reshape(-1, 3),
                data_dict["gt_sdf"],
                data_dict["gt_occ"],
                data_dict["designed_mu"],
                data_dict["designed_sigma"],
            ]
        )
        np.savetxt(filename, table, fmt="%.17g", delimiter=",", header=",".join(COLUMNS), comments="")

        if key is None:
            original_key = object.key
            key = original_key + "_to_SampleBatchCSVFormat"
        return object.from_file(filename, cls, key)
