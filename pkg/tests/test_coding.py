import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from henon_lab import ConfigError, EscapeError, MapConfig
from henon_lab.coding import (
    Word,
    check_transition_diagram,
    cylinder_width,
    decode,
    encode,
    enumerate_periodic,
    in_cylinder,
    necklaces,
    periodic_point,
)
from henon_lab.core import apply
from henon_lab.manifolds import build_regions
from henon_lab.thermo import chebyshev_fixed_points

bits = st.lists(st.integers(0, 1), min_size=1, max_size=16).map(tuple)


def mobius(n: int) -> int:
    m, p, out = n, 2, 1
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            out = -out
        p += 1
    return -out if m > 1 else out


def necklace_count(n: int) -> int:
    return sum(mobius(d) * 2 ** (n // d) for d in range(1, n + 1) if n % d == 0) // n


@pytest.mark.parametrize("n", range(1, 11))
def test_necklaces_match_moebius_count(n):
    ws = necklaces(n)
    assert len(ws) == necklace_count(n)
    assert len({w.symbols for w in ws}) == len(ws)


@given(bits, st.integers(-20, 20))
def test_word_rotation_invariants(sym, k):
    w = Word(sym, periodic=True)
    r = w.rotate(k)
    assert r.canonical() == w.canonical()
    assert r.minimal_period == w.minimal_period
    assert len(w) % w.minimal_period == 0
    assert r.longest_zero_block() == w.longest_zero_block()
    assert Word.parse(str(w), periodic=True) == w


def test_longest_zero_block_wraps_for_periodic_words():
    assert Word.parse("0110", periodic=True).longest_zero_block() == 2
    assert Word.parse("0110").longest_zero_block() == 1
    assert Word.parse("0000", periodic=True).longest_zero_block() == 4


def test_word_rejects_bad_symbols():
    with pytest.raises(ConfigError):
        Word((0, 2))
    with pytest.raises(ConfigError):
        Word(())


@pytest.mark.parametrize("n", range(1, 9))
def test_periodic_point_counts(regions, n):
    orbs = enumerate_periodic(regions.cfg, regions, n)
    assert sum(o.period for o in orbs) == 2 ** n
    assert all(o.residual < 1e-10 for o in orbs)
    words = {o.word.canonical().symbols for o in orbs}
    assert len(words) == len(orbs)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_periodic_points_near_chebyshev(n):
    r = build_regions(MapConfig(b=1e-6))
    xs = np.sort(np.concatenate([o.points[:, 0] for o in enumerate_periodic(r.cfg, r, n)]))
    assert np.abs(xs - np.sort(chebyshev_fixed_points(n))).max() < 1e-4


def _mp_cycle(cfg, x0, dps=50):
    """Newton on the periodic chain equations in multiprecision."""
    mpmath.mp.dps = dps
    a, sb = mpmath.mpf(cfg.a), cfg.s * mpmath.mpf(cfg.b)
    n = len(x0)
    x = mpmath.matrix([mpmath.mpf(v) for v in x0])
    for _ in range(30):
        F = mpmath.matrix(n, 1)
        J = mpmath.matrix(n, n)
        for i in range(n):
            F[i] = x[(i + 1) % n] - 1 + a * x[i] ** 2 - sb * x[(i - 1) % n]
            J[i, (i + 1) % n] += 1
            J[i, i] += 2 * a * x[i]
            J[i, (i - 1) % n] -= sb
        dx = mpmath.lu_solve(J, F)
        x -= dx
        if mpmath.norm(dx) < mpmath.mpf(10) ** (-dps + 5):
            break
    return [float(v) for v in x]


def test_periodic_orbits_against_multiprecision(regions):
    cfg = regions.cfg
    for o in enumerate_periodic(cfg, regions, 7)[::5]:
        x = o.points[:, 0]
        assert np.allclose(_mp_cycle(cfg, x), x, rtol=0, atol=1e-14)


@pytest.mark.parametrize("word", ["1", "0", "01", "00011", "0101110"])
def test_encode_recovers_periodic_itinerary(regions, word):
    o = periodic_point(regions.cfg, regions, word)
    w, amb = encode(regions.cfg, regions, o.points[0], 3 * len(word))
    assert not amb.any()
    assert str(w) == word * 3


def test_encode_reports_escape(regions):
    with pytest.raises(EscapeError):
        encode(regions.cfg, regions, regions.zeta0 + [0.0, 1e-6], 5)


def test_decode_then_encode(regions, rng):
    c = regions.cfg
    d = 30
    for _ in range(20):
        sym = tuple(int(v) for v in rng.integers(0, 2, 2 * d + 1))
        z = decode(c, regions, Word(sym, d), d)
        w, _ = encode(c, regions, z, 10)
        assert w.symbols == sym[d:d + 10]


def test_decode_needs_enough_symbols(regions):
    with pytest.raises(ConfigError):
        decode(regions.cfg, regions, Word((0, 1, 0), 1), 30)


def test_semiconjugacy(regions, rng):
    c = regions.cfg
    d = 30
    sym = tuple(int(v) for v in rng.integers(0, 2, 2 * d + 1))
    z = decode(c, regions, Word(sym, d), d)
    zs = decode(c, regions, Word(sym, d + 1), d)
    assert np.linalg.norm(apply(c, z) - zs) < 1e-6


def test_cylinders_nest_and_shrink(regions):
    o = periodic_point(regions.cfg, regions, "0110")
    z = o.points[0]
    widths = []
    for k in range(1, 9):
        w = "0110" * 2
        assert in_cylinder(regions, w[:k], z)
        widths.append(cylinder_width(regions, w[:k], float(z[1])))
    assert all(w1 < w0 for w0, w1 in zip(widths, widths[1:]))
    # each symbol roughly halves the width (expansion close to 2 on average)
    assert math.log(widths[0] / widths[-1]) / 7 == pytest.approx(math.log(2), rel=0.3)


def test_transition_diagram_on_samples(regions, rng):
    rep = check_transition_diagram(regions.cfg, regions, 400, rng)
    assert rep.ok()
    assert all(v >= 400 for v in rep.samples.values())
