# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module GridH5Format: Sampled occupancy grids in HDF5."""

import h5py
import numpy as np
from libpyvinyl.BaseFormat import BaseFormat


class GridH5Format(BaseFormat):
    """Datasets ``values``, ``bbox`` and ``resolution``; the evaluation mode is an attribute."""

    def __init__(self) -> None:
        super().__init__()

    @classmethod
    def format_register(self):
        key = "GridH5"
        description = "HDF5 format for occupancy grids"
        file_extension = ".h5"
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
        with h5py.File(filename, "r") as h5:
            data_dict = {
                "values": h5["values"][()],
                "bbox": h5["bbox"][()],
                "resolution": tuple(int(r) for r in h5["resolution"][()]),
                "mode": h5.attrs.get("mode", "mean"),
            }
        if isinstance(data_dict["mode"], bytes):
            data_dict["mode"] = data_dict["mode"].decode()
        return data_dict

    @classmethod
    def write(cls, object, filename: str, key: str = None):
        """Save the data with the `filename`."""
        data_dict = object.get_data()
        with h5py.File(filename, "w") as h5:
            h5.create_dataset("values", data=np.asarray(data_dict["values"], dtype=np.float64), compression="gzip")
            h5.create_dataset("bbox", data=np.asarray(data_dict["bbox"], dtype=np.float64))
            h5.create_dataset("resolution", data=np.asarray(data_dict["resolution"], dtype=np.int64))
            h5.attrs["mode"] = str(data_dict["mode"] or "mean")

        if key is None:
            original_key = object.key
            key = original_key + "_to_GridH5Format"
        return object.from_file(filename, cls, key)
