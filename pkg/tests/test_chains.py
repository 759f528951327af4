import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from henon_lab import MapConfig
from henon_lab import chains
from henon_lab.core import apply

CFG = MapConfig(a=2.0002246505301127, b=1e-4)
words = st.lists(st.sampled_from([-1.0, 1.0]), min_size=6, max_size=40)


@given(words)
def test_periodic_chain_is_an_orbit(signs):
    x = chains.sweep_periodic(CFG, np.array(signs))
    x, res = chains.newton(CFG, x, periodic=True)
    assert res < 1e-14
    pts = chains.chain_points(CFG, x, periodic=True)
    assert np.allclose(apply(CFG, pts), np.roll(pts, -1, axis=0), atol=1e-13)
    # branch signs are those requested
    assert np.all(np.sign(x) == np.sign(signs))


@given(words, st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_open_chain_residual_and_points(signs, left, right):
    x = chains.sweep(CFG, np.array(signs), left, right, max_sweeps=60)
    x, res = chains.newton(CFG, x, left, right)
    assert res < 1e-13
    pts = chains.chain_points(CFG, x, left)
    assert np.allclose(apply(CFG, pts[:-1]), pts[1:], atol=1e-12)


def test_sweep_is_batched():
    signs = np.array([1.0, -1.0, -1.0, 1.0] * 5)
    lefts = np.array([0.1, 0.2, 0.3])
    batch = chains.sweep(CFG, signs, lefts, 0.5)
    for i, l in enumerate(lefts):
        assert np.allclose(batch[i], chains.sweep(CFG, signs, l, 0.5), atol=0)


@pytest.mark.parametrize("side", ["left", "right"])
def test_boundary_sensitivity_matches_finite_difference(side):
    signs = np.array([-1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 1.0, -1.0] * 3)
    base = {"left": 0.3, "right": -0.4}
    h = 1e-5

    def solve(l, r):
        x = chains.sweep(CFG, signs, l, r)
        return chains.newton(CFG, x, l, r)[0]

    x0 = solve(base["left"], base["right"])
    d = chains.boundary_sensitivity(CFG, x0, side)
    if side == "left":
        num = (solve(base["left"] + h, base["right"]) - solve(base["left"] - h, base["right"])) / (2 * h)
    else:
        num = (solve(base["left"], base["right"] + h) - solve(base["left"], base["right"] - h)) / (2 * h)
    assert np.allclose(d, num, rtol=1e-6, atol=1e-10)


def test_linear_gap_agrees_with_direct_difference():
    n = 30
    s_up = np.array([1.0] * n)
    s_lo = s_up.copy()
    s_lo[10] = -1.0
    left, right = 0.5, 0.2
    up = chains.newton(CFG, chains.sweep(CFG, s_up, left, right), left, right)[0]
    lo = chains.newton(CFG, chains.sweep(CFG, s_lo, left, right), left, right)[0]
    d = chains.linear_gap(CFG, up, lo, 11)
    direct = (up - lo)[10:]
    big = np.abs(direct) > 1e-9
    assert np.allclose(d[big], direct[big], rtol=1e-6)
    # the recursion keeps resolving the gap long after the direct difference is rounding noise
    assert np.all(d[-5:-1] != 0.0)
