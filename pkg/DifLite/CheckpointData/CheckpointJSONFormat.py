# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
""":module CheckpointJSONFormat: Trained weights and optimizer state in JSON."""

import json

from libpyvinyl.BaseFormat import BaseFormat

from DifLite.utils.io import decode_array, encode_array, to_jsonable


def _encode(ckpt: dict) -> dict:
    out = dict(ckpt)
    out["weights"] = {name: encode_array(w) for name, w in ckpt["weights"].items()}
    out["optimizer"] = {
        name: dict(state, m=encode_array(state["m"]), v=encode_array(state["v"]))
        for name, state in (ckpt.get("optimizer") or {}).items()
    }
    return to_jsonable(out)


def _decode(content: dict) -> dict:
    ckpt = dict(content)
    ckpt["weights"] = {name: decode_array(w) for name, w in content["weights"].items()}
    ckpt["optimizer"] = {
        name: dict(state, m=decode_array(state["m"]), v=decode_array(state["v"]))
        for name, state in (content.get("optimizer") or {}).items()
    }
    return ckpt


class CheckpointJSONFormat(BaseFormat):
    """Flat weight vectors are stored as base64 little-endian float64 strings,
    so a checkpoint reloads bit-exactly."""

    def __init__(self) -> None:
        super().__init__()

    @classmethod
    def format_register(self):
        key = "CheckpointJSON"
        description = "JSON checkpoint with base64 float64 weights"
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
            return _decode(json.load(fh))

    @classmethod
    def write(cls, object, filename: str, key: str = None):
        """Save the data with the `filename`."""
        with open(filename, "w") as fh:
            json.dump(_encode(object.get_data()), fh, indent=2, sort_keys=True)
            fh.write("\n")

        if key is None:
            original_key = object.key
            key = original_key + "_to_CheckpointJSONFormat"
        return object.from_file(filename, cls, key)
