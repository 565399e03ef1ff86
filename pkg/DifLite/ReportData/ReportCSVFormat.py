# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module ReportCSVFormat: Tabular reports in CSV.

Scalars go to leading ``# name: value`` lines (JSON encoded), columns follow
with a header row. Missing numbers are written as empty cells.
"""

import csv
import json

import numpy as np
from libpyvinyl.BaseFormat import BaseFormat

from DifLite.utils.io import to_jsonable


def _cell(value) -> str:
    value = to_jsonable(value)
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(cell: str):
    if cell == "":
        return np.nan
    for convert in (int, float):
        try:
            return convert(cell)
        except ValueError:
            pass
    return cell


class ReportCSVFormat(BaseFormat):
    """One row per table entry, plot ready."""

    def __init__(self) -> None:
        super().__init__()

    @classmethod
    def format_register(self):
        key = "ReportCSV"
        description = "CSV format for DifLite reports"
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
        data_dict = {}
        with open(filename, "r", newline="") as fh:
            lines = fh.read().splitlines()
        body = 0
        while body < len(lines) and lines[body].startswith("#"):
            name, _, value = lines[body][1:].partition(":")
            data_dict[name.strip()] = json.loads(value)
            body += 1
        rows = list(csv.reader(lines[body:]))
        if not rows:
            raise ValueError(f"{filename}: missing header row")
        header = rows[0]
        for name in header:
            data_dict[name] = []
        for row in rows[1:]:
            if len(row) != len(header):
                raise ValueError(f"{filename}: row has {len(row)} cells, header has {len(header)}")
            for name, cell in zip(header, row):
                data_dict[name].append(_parse(cell))
        return data_dict

    @classmethod
    def write(cls, object, filename: str, key: str = None):
        """Save the data with the `filename`."""
        data_dict = object.get_data()
        n_rows = object.n_rows()
        with open(filename, "w", newline="") as fh:
            for name in object.scalars:
                fh.write(f"# {name}: {json.dumps(to_jsonable(data_dict[name]))}\n")
            writer = csv.writer(fh)
            writer.writerow(object.columns)
            for i in range(n_rows):
                writer.writerow([_cell(data_dict[name][i]) for name in object.columns])

        if key is None:
            original_key = object.key
            key = original_key + "_to_ReportCSVFormat"
        return object.from_file(filename, cls, key)
