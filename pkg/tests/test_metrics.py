import math

import numpy as np
import pytest

from pcsampling.metrics import format_db, psnr, psnr_rgb, psnr_y
from pcsampling.pc_io import PointCloud


def test_identical_is_infinite():
    assert psnr([1, 2, 3], [1, 2, 3]) == math.inf
    assert format_db(math.inf) == "inf"


def test_full_scale_error_is_zero_db():
    assert psnr([255], [0]) == pytest.approx(0.0)


def test_two_points_one_full_error():
    assert psnr([255, 0], [0, 0]) == pytest.approx(10 * math.log10(2), abs=1e-12)
    assert psnr([255, 0], [0, 0]) == pytest.approx(3.0103, abs=1e-4)


def test_rgb_uses_all_channels():
    a = np.zeros((2, 3))
    b = a.copy()
    b[0, 0] = 255
    # one full-scale error among 3N = 6 values
    assert psnr_rgb(a, b) == pytest.approx(10 * math.log10(6))


def test_luma_psnr_of_clouds():
    pos = [[0, 0, 0]]
    assert psnr_y(PointCloud(pos, [[255, 255, 255]]), PointCloud(pos, [[0, 0, 0]])) == pytest.approx(0.0, abs=1e-9)


def test_mismatch():
    with pytest.raises(ValueError):
        psnr([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        psnr_rgb(np.zeros((2, 3)), np.zeros((3, 3)))
