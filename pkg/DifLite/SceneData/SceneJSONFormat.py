# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module SceneJSONFormat: Scene declarations in JSON."""

import json

from libpyvinyl.BaseFormat import BaseFormat

from DifLite.utils.io import to_jsonable


class SceneJSONFormat(BaseFormat):
    """A scene JSON file, or the ``scene`` section of an experiment config."""

    def __init__(self) -> None:
        super().__init__()

    @classmethod
    def format_register(self):
        key = "SceneJSON"
        description = "JSON scene declaration (target, prior, bbox)"
        file_extension = ".json"
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
            content = json.load(fh)
        if "scene" in content:
            content = content["scene"]
        return {key: content.get(key) for key in ("target", "prior", "bbox")}

    @classmethod
    def write(cls, object, filename: str, key: str = None):
        """Save the data with the `filename`."""
        data_dict = object.get_data()
        with open(filename, "w") as fh:
            json.dump(to_jsonable({k: data_dict[k] for k in ("target", "prior", "bbox")}), fh, indent=2)
            fh.write("\n")

        if key is None:
            original_key = object.key
            key = original_key + "_to_SceneJSONFormat"
        return object.from_file(filename, cls, key)
