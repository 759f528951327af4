import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from henon_lab import MapConfig
from henon_lab.core import apply, fixed_saddles
from henon_lab.manifolds import (
    clearance,
    critical_angle,
    grow_stable,
    grow_unstable,
    unstable_side,
    unstable_side_points,
)

A_STAR_B4 = 2.0002246505301127


def test_a_star_value(rcfg):
    assert rcfg.a == pytest.approx(A_STAR_B4, abs=1e-12)


def test_clearance_changes_sign_across_a_star(rcfg):
    assert clearance(rcfg.replace(a=rcfg.a - 1e-8)).value < 0 < clearance(rcfg.replace(a=rcfg.a + 1e-8)).value


def test_grown_unstable_manifold_reaches_zeta0(regions):
    # independent of the chain construction: iterate a fundamental domain of W^u(P)
    c = regions.cfg
    P, _ = fixed_saddles(c)
    curve = grow_unstable(c, P, 6.0)
    assert curve.distance_to(regions.zeta0) < 1e-8


def test_grown_stable_manifold_of_q_contains_alpha0_minus(regions):
    c = regions.cfg
    _, Q = fixed_saddles(c)
    branches = [grow_stable(c, Q, 0.05, side=side) for side in (1, -1)]
    y = np.linspace(-0.004, 0.004, 5)
    for z in np.stack([regions.alpha_x("alpha0-", y), y], axis=-1):
        assert min(cu.distance_to(z) for cu in branches) < 1e-8


@given(st.floats(0.01, 0.9), st.sampled_from([1.0, -1.0]))
def test_lower_side_image_is_a_leaf_with_one_step_of_past(u, sgn):
    # away from the fold tip, where the image leaf stops being a graph over its past branch
    X = sgn * u
    c = MapConfig(a=A_STAR_B4, b=1e-4)
    fz = apply(c, unstable_side_points(c, X, "lower"))
    past = (1.0 if X > 0 else -1.0,)
    assert fz[1] == pytest.approx(float(unstable_side(c, fz[0], "lower", past)), abs=1e-15)


@pytest.mark.parametrize("src,dst", [("alpha0-", "alpha0-"), ("alpha0+", "alpha0-"),
                                     ("alpha1+", "alpha1+"), ("alpha1-", "alpha1+")])
def test_alpha_curves_map_as_stable_leaves(regions, src, dst):
    y = np.linspace(-0.006, 0.006, 7)
    fz = apply(regions.cfg, np.stack([regions.alpha_x(src, y), y], axis=-1))
    assert np.allclose(regions.alpha_x(dst, fz[:, 1]), fz[:, 0], atol=1e-14)


def test_zeta0_is_the_critical_point(regions):
    c = regions.cfg
    z = regions.zeta0
    assert z == pytest.approx([2.588e-6, -0.00707099], abs=1e-8)
    assert abs(critical_angle(c, z, regions.zeta0_tangent)[0]) < 1e-8
    chk = regions.check_zeta0()
    assert chk["zeta0_in_I"]
    assert abs(chk["min_gap"]) < 1e-12


def test_region_membership(regions):
    assert regions.in_R(regions.Q.location)
    assert regions.in_R(regions.P.location)
    assert not regions.in_R([0.0, 0.5])
    # points of R just above zeta_0 fall into the lens S and escape R
    above = regions.zeta0 + [0.0, 1e-6]
    assert regions.in_S(above)
    assert regions.which_R(above) == -1
    assert regions.symbol(regions.zeta0) == -1
    assert regions.symbol([-0.5, 0.0]) == 0 and regions.symbol([0.5, 0.0]) == 1


def test_unstable_sides_are_c2b_away_from_the_fold(regions):
    c = regions.cfg
    from henon_lab.manifolds import unstable_side_curve

    X = np.linspace(0.3, 0.9, 200)
    assert unstable_side_curve(c, X, "upper").is_c2b(c)
