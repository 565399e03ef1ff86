# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Report Data APIs

Every report is a table: named columns of equal length plus a few scalars.
"""

from typing import Tuple

import numpy as np
from libpyvinyl import BaseData

from DifLite.metrics import MetricsReport, SigmaProfile
from DifLite.train import LOG_COLUMNS, TrainLog
from .ReportCSVFormat import ReportCSVFormat
from .ReportJSONFormat import ReportJSONFormat


class ReportData(BaseData):
    """Base mapper for tabular reports"""

    columns: Tuple[str, ...] = ()
    scalars: Tuple[str, ...] = ()

    def __init__(
        self,
        key,
        data_dict=None,
        filename=None,
        file_format_class=None,
        file_format_kwargs=None,
    ):
        expected_data = {name: None for name in self.scalars + self.columns}
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
        self._add_ioformat(format_dict, ReportJSONFormat)
        self._add_ioformat(format_dict, ReportCSVFormat)
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

    def n_rows(self) -> int:
        data_dict = self.get_data()
        lengths = {len(data_dict[name]) for name in self.columns}
        if len(lengths) > 1:
            raise ValueError(f"{self.key}: columns differ in length {sorted(lengths)}")
        return lengths.pop() if lengths else 0

    def summary(self) -> dict:
        return {}


def _finite_mean(values):
    values = np.array([np.nan if v is None else v for v in values], dtype=np.float64)
    values = values[np.isfinite(values)]
    return float(np.mean(values)) if len(values) else None


class TrainLogData(ReportData):
    """Per-epoch training log"""

    columns = LOG_COLUMNS
    scalars = ("mode", "seed")

    @classmethod
    def from_log(cls, log: TrainLog, key: str, mode: str, seed: int):
        data_dict = log.to_dict()
        data_dict.update(mode=mode, seed=seed)
        return cls.from_dict(data_dict, key)

    def to_log(self) -> TrainLog:
        return TrainLog.from_dict(self.get_data())


class MetricsData(ReportData):
    """Reconstruction metrics, one row per sampling seed"""

    columns = ("seed", "chamfer", "p2s", "normal_consistency", "n_samples", "chamfer_prior", "p2s_prior")

    @classmethod
    def from_reports(cls, reports, key: str):
        data_dict = {name: [getattr(r, name) for r in reports] for name in cls.columns}
        return cls.from_dict(data_dict, key)

    def to_reports(self):
        data_dict = self.get_data()
        return [
            MetricsReport(**{name: data_dict[name][i] for name in self.columns})
            for i in range(self.n_rows())
        ]

    def summary(self) -> dict:
        data_dict = self.get_data()
        return {
            "mean": {name: _finite_mean(data_dict[name]) for name in self.columns if name not in ("seed", "n_samples")}
        }


class SigmaProfileData(ReportData):
    """Mean predicted sigma per distance-to-surface bin"""

    columns = ("bin_lo", "bin_hi", "center", "mean_sigma", "count")
    scalars = ("rho", "rho_points", "n_points", "seed")

    @classmethod
    def from_profile(cls, profile: SigmaProfile, key: str):
        data_dict = {
            "bin_lo": profile.edges[:-1],
            "bin_hi": profile.edges[1:],
            "center": profile.centers,
            "mean_sigma": profile.mean_sigma,
            "count": np.asarray(profile.counts).astype(int),
            "rho": profile.rho,
            "rho_points": profile.rho_points,
            "n_points": profile.n_points,
            "seed": profile.seed,
        }
        return cls.from_dict(data_dict, key)

    def to_profile(self) -> SigmaProfile:
        data_dict = self.get_data()
        lo = np.asarray(data_dict["bin_lo"], dtype=np.float64)
        hi = np.asarray(data_dict["bin_hi"], dtype=np.float64)
        edges = np.append(lo, hi[-1:])

        def scalar(name, convert):
            value = data_dict[name]
            return np.nan if value is None and convert is float else convert(value)

        return SigmaProfile(
            edges,
            np.array([np.nan if v is None else v for v in data_dict["mean_sigma"]], dtype=np.float64),
            np.asarray(data_dict["count"], dtype=np.int64),
            scalar("rho", float),
            scalar("rho_points", float),
            int(data_dict["n_points"]),
            int(data_dict["seed"]),
        )


class AblationData(ReportData):
    """One row per (variant, seed) run; failed runs keep their error in ``status``"""

    columns = ("variant", "seed", "status", "chamfer", "p2s", "normal_consistency")
    scalars = ("reference",)

    def summary(self) -> dict:
        from DifLite.ablation import summarize

        return summarize(self.get_data(), self.get_data()["reference"])
