# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Field grid Data APIs"""

from libpyvinyl import BaseData

from DifLite.extract.grid import FieldGrid
from .GridH5Format import GridH5Format


class FieldGridData(BaseData):
    """Occupancy sampled on a regular lattice"""

    def __init__(
        self,
        key,
        data_dict=None,
        filename=None,
        file_format_class=None,
        file_format_kwargs=None,
    ):
        expected_data = {}

        # Occupancy values in [0, 1] [rx, ry, rz]
        expected_data["values"] = None
        # Lattice bounds [[xmin, ymin, zmin], [xmax, ymax, zmax]]
        expected_data["bbox"] = None
        # Lattice points per axis (rx, ry, rz)
        expected_data["resolution"] = None
        # "mean" or "sample:SEED"
        expected_data["mode"] = None

        super().__init__(
            key,
            expected_data,
            data_dict,
            filename,
            file_format_class,
            file_format_kwargs,
        )

    @classmethod
    def supported_formats(self):
        format_dict = {}
        self._add_ioformat(format_dict, GridH5Format)
        return format_dict

    @classmethod
    def from_file(cls, filename: str, format_class, key: str, **kwargs):
        return cls(
            key,
            filename=filename,
            file_format_class=format_class,
            file_format_kwargs=kwargs,
        )

    @classmethod
    def from_dict(cls, data_dict, key):
        """Create the data class by a python dictionary."""
        return cls(key, data_dict=data_dict)

    @classmethod
    def from_grid(cls, grid: FieldGrid, key: str, mode: str = "mean"):
        return cls.from_dict(
            {"values": grid.values, "bbox": grid.bbox, "resolution": grid.resolution, "mode": mode}, key
        )

    def to_grid(self) -> FieldGrid:
        data_dict = self.get_data()
        return FieldGrid(data_dict["bbox"], data_dict["resolution"], data_dict["values"])
