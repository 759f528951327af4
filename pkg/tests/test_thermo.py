import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from henon_lab import GeometryError, IncompleteEnumerationError, MapConfig
from henon_lab.coding import enumerate_periodic, periodic_point
from henon_lab.core import angle_between, jacobian
from henon_lab.experiments import periodic_floor
from henon_lab.manifolds import build_regions
from henon_lab.thermo import (
    AtomicMeasure,
    PressureCurve,
    chebyshev_fixed_points,
    chebyshev_log_multipliers,
    chebyshev_pressure,
    dirac,
    equilibrium_weights,
    excursion_average,
    excursions,
    free_energy,
    lyapunov,
    mixture,
    sample_orbit,
    t0_lower_bound,
    unstable_direction,
)

LOG2 = math.log(2.0)
ts = st.floats(0.0, 5.0)


@pytest.fixture(scope="module")
def curve(regions, orbits12):
    return PressureCurve(regions.cfg, orbits12, 12)


def test_pressure_at_zero_counts_fixed_points(curve):
    assert curve(0.0) == pytest.approx(LOG2, abs=1e-15)
    assert np.allclose(curve.weights(0.0), 2.0 ** -12, rtol=1e-12)


def test_incomplete_enumeration_is_rejected(regions, orbits12):
    with pytest.raises(IncompleteEnumerationError) as info:
        PressureCurve(regions.cfg, orbits12[1:], 12)
    assert info.value.missing == [str(orbits12[0].word.canonical())]


@given(ts, ts, st.floats(0.0, 1.0))
def test_pressure_is_convex(curve, t1, t2, u):
    mid = u * t1 + (1 - u) * t2
    assert curve(mid) <= u * curve(t1) + (1 - u) * curve(t2) + 1e-13


@given(ts)
def test_pressure_derivative_is_minus_lyapunov(curve, t):
    h = 1e-5
    d = (curve(t + h) - curve(t - h)) / (2 * h)
    assert d == pytest.approx(-curve.lyapunov(t), abs=1e-8)


@given(ts, st.integers(0, 2 ** 31 - 1))
def test_variational_principle(regions, orbits12, curve, t, seed):
    c = regions.cfg
    mu = equilibrium_weights(c, orbits12, 12, t)
    assert free_energy(c, mu, 12, t) == pytest.approx(curve(t), abs=1e-12)
    w = np.random.default_rng(seed).dirichlet(np.ones(len(mu.support)) * 0.3)
    other = AtomicMeasure(mu.support, w)
    assert free_energy(c, other, 12, t) <= curve(t) + 1e-12


@pytest.mark.parametrize("n", [4, 8, 10])
def test_pressure_close_to_chebyshev_limit(n):
    r = build_regions(MapConfig(b=1e-6))
    curve = PressureCurve(r.cfg, enumerate_periodic(r.cfg, r, n), n)
    for t in (0.0, 0.5, 1.0, 2.0):
        assert curve(t) == pytest.approx(chebyshev_pressure(n, t), abs=1e-3)


@pytest.mark.parametrize("n", range(1, 9))
def test_chebyshev_fixed_points(n):
    x = chebyshev_fixed_points(n)
    assert x.size == 2 ** n
    y = x.copy()
    for _ in range(n):
        y = 1 - 2 * y * y
    assert np.allclose(y, x, atol=1e-9 * 4 ** n)
    # multipliers by the chain rule
    d = np.ones_like(x)
    y = x.copy()
    for _ in range(n):
        d *= -4 * y
        y = 1 - 2 * y * y
    assert np.allclose(np.log(np.abs(d)), chebyshev_log_multipliers(n), atol=1e-6)


def test_chebyshev_pressure_closed_form():
    # 2^n - 1 points with multiplier 2^n, one with 4^n
    n, t = 6, 0.7
    want = math.log((2 ** n - 1) * 2.0 ** (-t * n) + 4.0 ** (-t * n)) / n
    assert chebyshev_pressure(n, t) == pytest.approx(want, rel=1e-14)


def test_t0_lower_bound():
    den = LOG2 / 0.9 - 0.5 * math.log(3.9)
    assert t0_lower_bound(0.9, 0.1) == pytest.approx(LOG2 / den, rel=1e-14)
    assert t0_lower_bound(0.9, 0.1) == pytest.approx(7.73, abs=0.01)
    assert t0_lower_bound(1.2, 0.1) == math.inf


def test_unstable_direction_at_q(regions):
    Q = regions.Q
    e = unstable_direction(regions.cfg, Q.location).vector
    assert angle_between(e, Q.vec_u) < 1e-12


def test_unstable_direction_on_periodic_orbits(regions, orbits12):
    c = regions.cfg
    from henon_lab.coding import cycle_unstable

    for o in orbits12[::40]:
        _, dirs, _ = cycle_unstable(c, o.points)
        for p, d in zip(o.points, dirs):
            assert angle_between(unstable_direction(c, p).vector, d) < 1e-8


def test_unstable_direction_is_equivariant(regions, rng):
    c = regions.cfg
    pts, dirs, _, _ = sample_orbit(c, rng, 1000)
    worst = 0.0
    for i in range(len(pts) - 1):
        e0 = unstable_direction(c, pts[i]).vector
        e1 = unstable_direction(c, pts[i + 1]).vector
        worst = max(worst, angle_between(jacobian(c, pts[i]) @ e0, e1), angle_between(e0, dirs[i]))
    assert worst < 1e-8


def test_birkhoff_sum_is_log_multiplier(regions):
    c = regions.cfg
    for w in ["0", "1", "01", "001", "0111", "010011"]:
        o = periodic_point(c, regions, w)
        m = np.eye(2)
        for p in o.points:
            m = jacobian(c, p) @ m
        top = np.max(np.abs(np.linalg.eigvals(m)))
        assert o.log_multiplier == pytest.approx(math.log(top), rel=1e-10)
        assert math.log(abs(o.multiplier)) == pytest.approx(o.log_multiplier, rel=1e-12)


@given(st.floats(0.0, 1.0))
def test_lyapunov_is_affine_on_mixtures(regions, orbits12, u):
    c = regions.cfg
    a, b = dirac(orbits12[0]), dirac(orbits12[-1])
    assert lyapunov(c, mixture(u, a, b)) == pytest.approx(u * lyapunov(c, a) + (1 - u) * lyapunov(c, b), abs=1e-14)


def test_measures_validate_weights(orbits12):
    with pytest.raises(GeometryError):
        AtomicMeasure((orbits12[0],), np.array([0.5]))
    with pytest.raises(GeometryError):
        AtomicMeasure((orbits12[0], orbits12[1]), np.array([1.5, -0.5]))


def test_low_t_prefers_entropy_high_t_prefers_low_expansion(regions, orbits12, curve):
    c = regions.cfg
    mu0 = equilibrium_weights(c, orbits12, 12, 0.0)
    q = next(o for o in orbits12 if str(o.word) == "0")
    # entropy wins at t = 0; larger t shifts the Gibbs weight towards weakly expanding orbits
    assert free_energy(c, mu0, 12, 0.0) > free_energy(c, dirac(q), 12, 0.0)
    assert curve.lyapunov(3.0) < curve.lyapunov(0.0) < lyapunov(c, dirac(q))


def test_excursion_runs():
    lj = np.arange(6.0)
    assert excursions([False] * 6, lj) == []
    ex = excursions([True, False, False, True, True, True], lj, periodic=True)
    assert [(e.start, e.length) for e in ex] == [(3, 4)]
    assert ex[0].average == pytest.approx((3 + 4 + 5 + 0) / 4)
    ex = excursions([True, False, False, True, True, True], lj, periodic=False)
    assert [(e.start, e.length) for e in ex] == [(0, 1), (3, 3)]


def test_q_orbit_is_one_excursion_at_lambda_q(regions):
    o = periodic_point(regions.cfg, regions, "0")
    rows = excursion_average(regions.cfg, regions, o, 1, 1)
    assert len(rows) == 1
    assert rows[0]["average"] == pytest.approx(regions.Q.log_multiplier, rel=1e-14)


def test_periodic_floor(regions, orbits12):
    rep = periodic_floor(regions, orbits12)
    assert rep["ok"], rep
