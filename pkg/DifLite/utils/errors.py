# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Exceptions raised across DifLite.

The command line maps :class:`NumericError` subclasses to exit code 1 and
:class:`ConfigError` / I/O errors to exit code 2.
"""


class DifLiteError(Exception):
    pass


class ConfigError(DifLiteError):
    """Invalid experiment configuration.

    :param path: Dotted key path of the offending entry, e.g. ``scene.target.radius``.
    :type path: str
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class NumericError(DifLiteError):
    pass


class EmptyBatchError(NumericError):
    pass


class DomainError(NumericError, ValueError):
    pass


class DegenerateNormalError(NumericError):
    pass


class ProjectionError(NumericError):
    def __init__(self, residual: float, n_failed: int = 1):
        self.residual = residual
        self.n_failed = n_failed
        super().__init__(
            f"surface projection did not converge for {n_failed} point(s), "
            f"max residual |sdf| = {residual:.3e}"
        )


class NumericFaultError(NumericError):
    pass


class DivergenceError(NumericError):
    def __init__(self, message: str, dump_path=None):
        self.dump_path = dump_path
        if dump_path is not None:
            message += f" (offending batch dumped to {dump_path})"
        super().__init__(message)


class EmptyMeshError(NumericError):
    pass


class ShapeMismatchError(DifLiteError, ValueError):
    pass
