import logging

import numpy as np
import pytest

from DifLite.utils import as_points, get_threads, normalize_rows, spliterate
from DifLite.utils.analysis import binned_mean, plot_profile, rank_correlation
from DifLite.utils.io import decode_array, encode_array, format_for_path, to_jsonable, UnknownFileTypeError
from DifLite.utils.Logger import setLogger


def test_setLogger(capsys):
    """Test the setLogger."""
    logger = setLogger("tests.logger_module")
    again = setLogger("tests.logger_module")
    assert again is logger
    assert len(logger.handlers) == 1
    assert logger.level == logging.INFO
    logger.info("epoch 3 l_rec=0.0123")
    captured = capsys.readouterr()
    assert "tests.logger_module:INFO: epoch 3" in captured.err


def test_get_threads(monkeypatch):
    monkeypatch.delenv("DIF_THREADS", raising=False)
    assert get_threads() == 1
    assert get_threads(3) == 3
    monkeypatch.setenv("DIF_THREADS", "4")
    assert get_threads(0) == 4
    assert get_threads(2) == 2
    monkeypatch.setenv("DIF_THREADS", "-1")
    with pytest.raises(ValueError):
        get_threads()


def test_points_helpers():
    assert as_points([1, 2, 3]).shape == (1, 3)
    with pytest.raises(ValueError):
        as_points(np.zeros((4, 2)))
    unit, norms = normalize_rows(np.array([[3.0, 4.0, 0.0], [0.0, 0.0, 0.0]]))
    assert np.allclose(unit[0], [0.6, 0.8, 0.0])
    assert np.all(unit[1] == 0.0)
    assert norms[0] == 5.0
    assert [list(c) for c in spliterate([1, 2, 3, 4, 5], 2)] == [[1, 2], [3, 4], [5]]


def test_array_encoding():
    values = np.random.default_rng(0).normal(size=(3, 4))
    assert np.array_equal(decode_array(encode_array(values), (3, 4)), values)


def test_to_jsonable(tmp_path):
    content = to_jsonable({"a": np.arange(2), "b": np.float32(0.5), "c": np.nan, 1: tmp_path, "d": (np.int64(2), True)})
    assert content == {"a": [0, 1], "b": 0.5, "c": None, "1": str(tmp_path), "d": [2, True]}


def test_format_for_path():
    formats = {".obj": "OBJ"}
    assert format_for_path("mesh.OBJ", formats) == "OBJ"
    with pytest.raises(UnknownFileTypeError):
        format_for_path("mesh", formats)


def test_rank_correlation():
    x = np.arange(10.0)
    assert rank_correlation(x, -(x**3)) == pytest.approx(-1.0)
    assert rank_correlation(x, np.full(10, 0.3)) == 0.0
    assert rank_correlation([1.0], [2.0]) == 0.0


def test_binned_mean():
    means, counts = binned_mean([0.1, 0.2, 0.9, 1.5], [1.0, 3.0, 5.0, 7.0], np.array([0.0, 0.5, 1.0]))
    assert counts.tolist() == [2, 1]
    assert means.tolist() == [2.0, 5.0]
    means, counts = binned_mean([0.1], [1.0], np.array([0.0, 0.5, 1.0]))
    assert np.isnan(means[1]) and counts[1] == 0


def test_plot_profile(tmp_path):
    fn = tmp_path / "profile.png"
    plot_profile([0.1, 0.3], [0.5, np.nan], [4, 0], str(fn), xlabel="|sdf|", title="rho")
    assert fn.is_file()
