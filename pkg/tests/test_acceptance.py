"""The ten acceptance criteria, each at its stated tolerance.

Each test prints one PASS/FAIL line; the same lines are repeated in the
pytest terminal summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from henon_lab import MapConfig
from henon_lab.cli import main
from henon_lab.coding import enumerate_periodic, semiconjugacy_residual
from henon_lab.experiments import binding_suite, drop_suite, excursion_suite, thermo_suite
from henon_lab.manifolds import build_regions, find_first_tangency
from henon_lab.thermo import PressureCurve, find_t_roots, t0_lower_bound


def record(k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="module")
def thermo_b4(regions, orbits12):
    return thermo_suite(regions, 12, competitors=100, seed=0, orbits=orbits12)


@pytest.fixture(scope="module")
def excursions(regions):
    return excursion_suite(regions)


def test_criterion_01_chebyshev_anchor():
    t0 = time.perf_counter()
    cfg = MapConfig(b=1e-6)
    tang = find_first_tangency(cfg)
    from henon_lab.core import fixed_saddles

    _, Q = fixed_saddles(cfg.replace(a=tang.a_star))
    elapsed = time.perf_counter() - t0
    da = abs(tang.a_star - 2.0)
    dl = abs(Q.log_multiplier - math.log(4.0))
    ok = da < 1e-2 and dl < 1e-2 and elapsed < 60.0
    record(1, ok, f"a*={tang.a_star:.12f} |a*-2|={da:.3e} |lam_Q-log4|={dl:.3e} t={elapsed:.1f}s")
    assert ok


def test_criterion_02_coding_completeness(regions):
    t0 = time.perf_counter()
    bad = []
    worst = 0.0
    for n in range(1, 13):
        orbs = enumerate_periodic(regions.cfg, regions, n)
        count = sum(o.period for o in orbs)
        worst = max(worst, max(o.residual for o in orbs))
        if count != 2 ** n or any(o.residual >= 1e-10 for o in orbs):
            bad.append(n)
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 300.0
    record(2, ok, f"n=1..12 counts 2^n (bad: {bad}) max residual={worst:.2e} t={elapsed:.1f}s")
    assert ok


def test_criterion_03_semiconjugacy(regions):
    res = semiconjugacy_residual(regions.cfg, regions, np.random.default_rng(3), 1000, 30)
    ok = res.max() < 1e-6
    record(3, ok, f"max |f(pi w) - pi(sigma w)| over 1000 words = {res.max():.3e}")
    assert ok


def test_criterion_04_pressure_anchors(thermo_b4, regions_b2):
    c2 = regions_b2.cfg
    curve2 = PressureCurve(c2, enumerate_periodic(c2, regions_b2, 12), 12)
    tu2 = find_t_roots(c2, curve2).t_u
    tu4 = thermo_b4["report"]["t_u"]
    p0, p1 = thermo_b4["P0"], thermo_b4["P1"]
    ok = abs(p0 - math.log(2.0)) <= 1e-9 and p1 < 0 and 0 < tu4 < 1 and tu4 > tu2
    record(4, ok, f"P12(0)-log2={p0 - math.log(2):.1e} P12(1)={p1:.6f} t^u(1e-4)={tu4:.6f} > t^u(1e-2)={tu2:.6f}")
    assert ok


def test_criterion_05_threshold_consistency(thermo_b4, regions):
    rep = thermo_b4["report"]
    tu = rep["t_u"]
    t0c = rep["t0_curve"]
    t0c = math.inf if isinstance(t0c, str) else t0c
    bound = t0_lower_bound(tu, 0.1)
    ok = regions.cfg.eps == 0.1 and t0c >= tu and t0c >= bound - 1e-6
    record(5, ok, f"t^u={tu:.6f} t0_curve={t0c:.6f} t0_bound={bound:.6f}")
    assert ok


def test_criterion_06_binding_suite(regions):
    t0 = time.perf_counter()
    rep = binding_suite(regions, range(8, 25))
    elapsed = time.perf_counter() - t0
    c = rep["checks"]
    wanted = ["growth_ratios", "p0_found", "scale_bounds", "scale_product", "recovery_a", "recovery_b",
              "recovery_d", "recovery_e", "recovery_f"]
    failed = [k for k in wanted if not c[k]]
    items = rep["items"]
    ok = not failed and elapsed < 60.0
    record(6, ok, f"p0={rep['p0']} ratios=[{rep['ratio_min']:.5f},{rep['ratio_max']:.5f}] "
                  f"(e) passed {items['e']['passed']}/{items['e']['total']} min log-margin {items['e']['min_margin']:.3f} "
                  f"failed={failed} t={elapsed:.1f}s")
    assert ok


def test_criterion_07_excursion_window(excursions):
    rows = excursions["rows"]
    lo, hi = excursions["window"]
    bad = [r for r in rows if not (lo <= r["average"] <= hi)]
    ok = len(rows) > 0 and not bad
    record(7, ok, f"k0={excursions['k0']} M0={excursions['M0']} excursions={len(rows)} outside window={len(bad)}")
    assert ok


def test_criterion_08_thermodynamic_identities(thermo_b4):
    c = thermo_b4["checks"]
    ok = c["convexity"] and c["derivative_identity"] and c["variational"]
    record(8, ok, f"convexity defect={thermo_b4['max_convexity_defect']:.1e} "
                  f"dP/dt error={thermo_b4['max_derivative_error']:.1e} "
                  f"competitor excess={thermo_b4['max_competitor_excess']:.3e}")
    assert ok


def test_criterion_09_drop_bounds(regions, excursions, orbits12):
    fam = excursions["_family"]
    rep = drop_suite(regions, fam, excursions["k0"], excursions["M0"], orbits12)
    rows = rep["rows"]
    ml = min(r["margin_lower"] for r in rows)
    mu = min(r["margin_upper"] for r in rows)
    ok = rep["violations"] == 0 and [r["m"] for r in rows] == list(range(5, 61))
    record(9, ok, f"m=5..60 violations={rep['violations']} min margins lower={ml:.4f} upper={mu:.4f}")
    assert ok


def test_criterion_10_selfcheck_determinism(tmp_path):
    a, b = tmp_path / "one.json", tmp_path / "two.json"
    main(["selfcheck", "--out", str(a)])
    main(["selfcheck", "--out", str(b)])
    ok = a.read_bytes() == b.read_bytes()
    record(10, ok, f"two selfcheck reports byte-identical ({a.stat().st_size} bytes)")
    assert ok
