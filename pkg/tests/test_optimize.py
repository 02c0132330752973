import itertools
import math

import numpy as np
import pytest

from chsh_lab.operators import STANDARD_PLANAR_DEG
from chsh_lab.optimize import coordinate_descent, grid_search, optimize_angles

TSIRELSON = 2 * math.sqrt(2)


def _planar_chsh(a, ap, b, bp):
    # x-z plane: u.v = cos(theta_u - theta_v)
    r = np.radians
    return abs(np.cos(r(a - b)) - np.cos(r(a - bp)) + np.cos(r(ap - b)) + np.cos(r(ap - bp)))


def test_grid_oracle_resolution_8():
    ticks = [45.0 * k for k in range(8)]
    brute = max(_planar_chsh(*p) for p in itertools.product(ticks, repeat=4))
    _, value, n = grid_search(resolution=8)
    assert n == 8**4
    assert value >= 2.6
    assert abs(value - brute) <= 1e-12


def test_full_optimization_reaches_tsirelson():
    res = optimize_angles("s_weak_quantum", 8)
    assert abs(res.value - TSIRELSON) <= 1e-6
    assert res.value <= TSIRELSON + 1e-6


def test_off_grid_resolution_refines():
    res = optimize_angles("s_weak_quantum", 11)
    assert res.grid_value < TSIRELSON - 1e-3
    assert abs(res.value - TSIRELSON) <= 1e-6
    assert abs(_planar_chsh(*res.angles_deg) - res.value) <= 1e-12


@pytest.mark.parametrize("free", [0, 1, 2, 3])
def test_single_free_angle_returns_standard(free):
    # 1-D scan oracle: with the other three at the standard config the unique maximizer is the standard angle
    scan = np.linspace(0, 360, 360 * 100, endpoint=False)
    vals = []
    for t in scan:
        p = list(STANDARD_PLANAR_DEG)
        p[free] = t
        vals.append(_planar_chsh(*p))
    expected = scan[int(np.argmax(vals))]
    assert abs(expected - STANDARD_PLANAR_DEG[free]) <= 0.01
    res = optimize_angles("s_weak_quantum", 11, free=(free,))
    got = res.angles_deg[free]
    assert abs((got - STANDARD_PLANAR_DEG[free] + 180) % 360 - 180) <= 1e-3
    for i in range(4):
        if i != free:
            assert res.angles_deg[i] == STANDARD_PLANAR_DEG[i]


def test_grid_parallel_matches_serial():
    assert grid_search(resolution=9, workers=1) == grid_search(resolution=9, workers=4)


def test_resolution_precondition():
    with pytest.raises(ValueError):
        optimize_angles("s_weak_quantum", 7)
    with pytest.raises(ValueError):
        optimize_angles("nope", 8)


def test_coordinate_descent_from_nearby_start():
    pt, val, _ = coordinate_descent("s_weak_quantum", (3.0, 85.0, 50.0, 130.0), 10.0)
    assert abs(val - TSIRELSON) <= 1e-6
