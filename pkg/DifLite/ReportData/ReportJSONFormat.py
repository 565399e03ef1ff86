# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module ReportJSONFormat: Tabular reports in JSON."""

import json

from libpyvinyl.BaseFormat import BaseFormat

from DifLite.utils.io import to_jsonable


class ReportJSONFormat(BaseFormat):
    """Scalars and columns at the top level; a derived ``summary`` is written but not read back."""

    def __init__(self) -> None:
        super().__init__()

    @classmethod
    def format_register(self):
        key = "ReportJSON"
        description = "JSON format for DifLite reports"
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
        content.pop("summary", None)
        return content

    @classmethod
    def write(cls, object, filename: str, key: str = None):
        """Save the data with the `filename`."""
        content = dict(object.get_data())
        summary = object.summary()
        if summary:
            content["summary"] = summary
        with open(filename, "w") as fh:
            json.dump(to_jsonable(content), fh, indent=2)
            fh.write("\n")

        if key is None:
            original_key = object.key
            key = original_key + "_to_ReportJSONFormat"
        return object.from_file(filename, cls, key)
