# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Scene Data APIs"""

from libpyvinyl import BaseData

from DifLite.geometry.scene import bbox_from_spec, shape_from_spec
from DifLite.utils.errors import ConfigError
from .SceneJSONFormat import SceneJSONFormat


class SceneData(BaseData):
    """Target shape, prior shape and bounding box of an experiment"""

    def __init__(
        self,
        key,
        data_dict=None,
        filename=None,
        file_format_class=None,
        file_format_kwargs=None,
    ):
        expected_data = {}

        # Shape spec of the surface to reconstruct
        expected_data["target"] = None
        # Shape spec of the coarse prior providing the features
        expected_data["prior"] = None
        # [[xmin, ymin, zmin], [xmax, ymax, zmax]] in scene units
        expected_data["bbox"] = None

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
        self._add_ioformat(format_dict, SceneJSONFormat)
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

    def build(self, base_dir=None, path="scene"):
        """Instantiate ``(target, prior, bbox)``.

        :raises ConfigError: naming the dotted path of the first invalid entry.
        """
        data_dict = self.get_data()
        for name in ("target", "prior", "bbox"):
            if data_dict[name] is None:
                raise ConfigError(f"{path}.{name}", "missing required key")
        target = shape_from_spec(data_dict["target"], f"{path}.target", base_dir)
        prior = shape_from_spec(data_dict["prior"], f"{path}.prior", base_dir)
        bbox = bbox_from_spec(data_dict["bbox"], f"{path}.bbox")
        return target, prior, bbox
