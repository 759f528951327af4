"""Experiment suites shared by the command line, the scripts and the acceptance tests.

Every suite returns a plain dict of numbers and pass flags; nothing in it
depends on wall-clock time, so reports are byte-reproducible.
"""

from __future__ import annotations

import math

import numpy as np

from henon_lab import chains
from henon_lab.binding import bound_free_decompose, critical_cocycle, dyadic_records, scale_report
from henon_lab.coding import (
    check_transition_diagram,
    decode_chain,
    enumerate_periodic,
    semiconjugacy_residual,
)
from henon_lab.config import MapConfig
from henon_lab.core import fixed_saddles
from henon_lab.errors import LabError
from henon_lab.manifolds import RegionSet, build_regions, grow_unstable
from henon_lab.thermo import (
    AtomicMeasure,
    PressureCurve,
    conditioned_gibbs,
    empirical_k0_M0,
    equilibrium_weights,
    excursion_average,
    find_t_roots,
    free_energy,
    lyapunov,
    measure_drop_experiment,
    orbit_log_ju,
    zero_block_family,
)


def prepare(cfg: MapConfig) -> RegionSet:
    """Locate a* for cfg.b and build the regions there."""
    return build_regions(cfg)


# binding


def binding_suite(regions: RegionSet, js=range(8, 25)) -> dict:
    cfg = regions.cfg
    cc = critical_cocycle(cfg, regions)
    sr = scale_report(cfg, cc)
    H = cc.horizon
    from_p0 = slice((sr.p0 or H + 1) - 1, H)
    wd = sr.wD_over_tau[from_p0]
    records = dyadic_records(cfg, regions, cc, js)
    items = {}
    for key in "abcdef":
        margins = [r.checks[key]["margin"] for r in records]
        items[key] = {"passed": sum(r.checks[key]["pass"] for r in records), "total": len(records),
                      "min_margin": min(margins)}
    scaling = [r.offset / r.distance ** 2 for r in records]
    C = cfg.approx_constant
    checks = {
        "growth_ratios": bool(cfg.lambda1 <= sr.ratio_min and sr.ratio_max <= 5.0),
        "w_slope": bool(sr.slope_max <= cfg.sqrt_b * (1 + 1e-9)),
        "D_decreasing": sr.D_decreasing,
        "p0_found": sr.p0 is not None,
        "scale_bounds": bool(sr.p0 is not None and np.all(sr.lower_margin[from_p0] >= 0) and np.all(sr.upper_margin[from_p0] >= 0)),
        "scale_product": bool(sr.p0 is not None and np.all((wd >= 0.2) & (wd <= 5.0))),
        "offset_vs_distance_squared": bool(all(1 / C <= v <= C for v in scaling)),
        "q_le_p_minus_1": bool(all(r.q <= r.p - 1 for r in records)),
        "p_monotone": bool(_monotone_p(records)),
    }
    for key in "abdef":
        checks[f"recovery_{key}"] = items[key]["passed"] == items[key]["total"]
    checks["recovery_c"] = items["c"]["passed"] == items["c"]["total"]
    return {
        "b": cfg.b,
        "a": cfg.a,
        "eps": cfg.eps,
        "tau": cfg.tau,
        "horizon": H,
        "p0": sr.p0,
        "ratio_min": sr.ratio_min,
        "ratio_max": sr.ratio_max,
        "slope_max": sr.slope_max,
        "wD_over_tau_range": [float(wd.min()), float(wd.max())] if wd.size else [],
        "offset_over_distance_squared": [min(scaling), max(scaling)],
        "items": items,
        "checks": checks,
        "records": [r.to_json_dict() for r in records],
    }


def _monotone_p(records) -> bool:
    for sgn in (1, -1):
        rs = sorted((r for r in records if np.sign(r.delta[0]) == sgn), key=lambda r: r.distance)
        if any(b.p > a.p for a, b in zip(rs, rs[1:])):
            return False
    return True


def orbit_growth_suite(regions: RegionSet, orbits: int, length: int = 200, seed: int = 0, margin: int = 30) -> dict:
    """Bound/free decomposition of random orbit segments of K with both derivative estimates."""
    cfg = regions.cfg
    rng = np.random.default_rng(seed)
    cc0 = critical_cocycle(cfg, regions)
    stats = {k: {"segments": 0, "violations": 0, "min_margin": math.inf} for k in ("free", "bound")}
    failures = []
    for _ in range(orbits):
        sym = rng.integers(0, 2, size=length + 2 * margin)
        x, _ = decode_chain(cfg, sym, margin)
        pts = chains.chain_points(cfg, x, 0.0)[: margin + length]
        _, lj = orbit_log_ju(cfg, pts, 0)
        try:
            segs = bound_free_decompose(cfg, regions, pts, lj, start=margin, cc0=cc0)
        except LabError as exc:
            failures.append(str(exc))
            continue
        for s in segs:
            if not s.checked:
                continue
            st = stats[s.kind]
            st["segments"] += 1
            st["min_margin"] = min(st["min_margin"], s.margin)
            st["violations"] += int(not s.ok)
    return {"orbits": orbits, "length": length, "stats": stats, "failures": failures,
            "checks": {"free": stats["free"]["violations"] == 0, "bound": stats["bound"]["violations"] == 0,
                       "decomposed": not failures}}


# coding


def coding_suite(regions: RegionSet, n_max: int = 12, words: int = 1000, transition_samples: int = 10_000,
                 seed: int = 0) -> dict:
    cfg = regions.cfg
    counts, residuals = {}, {}
    for n in range(1, n_max + 1):
        orbs = enumerate_periodic(cfg, regions, n)
        counts[str(n)] = sum(o.period for o in orbs)
        residuals[str(n)] = max(o.residual for o in orbs)
    rng = np.random.default_rng(seed)
    semi = semiconjugacy_residual(cfg, regions, rng, words)
    tr = check_transition_diagram(cfg, regions, transition_samples, np.random.default_rng(seed + 1))
    return {
        "counts": counts,
        "max_residual": residuals,
        "semiconjugacy_max": float(semi.max()),
        "transition": tr.to_json_dict(),
        "checks": {
            "complete": all(counts[str(n)] == 2 ** n for n in range(1, n_max + 1)),
            "residuals": all(v < 1e-10 for v in residuals.values()),
            "semiconjugacy": bool(semi.max() < 1e-6),
            "transition": tr.ok(),
        },
    }


# thermodynamics


def thermo_suite(regions: RegionSet, n: int = 12, grid=None, competitors: int = 100, seed: int = 0,
                 orbits=None) -> dict:
    cfg = regions.cfg
    orbits = enumerate_periodic(cfg, regions, n) if orbits is None else orbits
    curve = PressureCurve(cfg, orbits, n)
    grid = np.linspace(0.0, 3.0, 31) if grid is None else np.asarray(grid, dtype=float)
    rep = find_t_roots(cfg, curve, grid)
    P = np.array([curve(t) for t in grid])
    conv = 0.5 * (P[:-2] + P[2:]) - P[1:-1]
    h = 1e-3
    deriv = [abs(-(curve(t + h) - curve(t - h)) / (2 * h) - curve.lyapunov(t)) for t in grid[1:-1]]
    rng = np.random.default_rng(seed)
    var_gap = -math.inf
    gibbs_gap = 0.0
    for t in (0.0, 0.5, 1.0, 2.0):
        mu = equilibrium_weights(cfg, orbits, n, t)
        Pt = curve(t)
        gibbs_gap = max(gibbs_gap, abs(free_energy(cfg, mu, n, t) - Pt))
        for _ in range(competitors):
            w = rng.dirichlet(np.full(len(mu.support), 0.3))
            var_gap = max(var_gap, free_energy(cfg, AtomicMeasure(mu.support, w), n, t) - Pt)
    prev = None
    if n > 1:
        try:
            prev = PressureCurve(cfg, enumerate_periodic(cfg, regions, n - 1), n - 1)
        except LabError:
            prev = None
    q = regions.Q.log_multiplier
    return {
        "b": cfg.b,
        "a": cfg.a,
        "n": n,
        "P0": curve(0.0),
        "P1": curve(1.0),
        "report": rep.to_json_dict(),
        "lambda_Q": q,
        "cauchy_gap_P1": abs(curve(1.0) - prev(1.0)) if prev is not None else None,
        "max_convexity_defect": float(max(0.0, -conv.min())),
        "max_derivative_error": float(max(deriv)),
        "gibbs_free_energy_error": gibbs_gap,
        "max_competitor_excess": var_gap,
        "checks": {
            "P0_log2": bool(abs(curve(0.0) - math.log(2.0)) <= 1e-9),
            "P1_negative": bool(curve(1.0) < 0.0),
            "convexity": bool(conv.min() >= -1e-9),
            "derivative_identity": bool(max(deriv) <= 1e-4),
            "variational": bool(var_gap <= 1e-9 and gibbs_gap <= 1e-9),
            "monotone": bool(np.all(np.diff(P) < 0)),
            **rep.checks(),
        },
    }


def periodic_floor(regions: RegionSet, orbits, C: float = 10.0) -> dict:
    """(1/n) log|Lambda^u| >= (1/2) log(4 - eps) - (1/n) log C over a list of orbits."""
    cfg = regions.cfg
    margins = [o.log_multiplier / o.period - (cfg.log_floor - math.log(C) / o.period) for o in orbits]
    return {"C": C, "min_margin": float(min(margins)), "ok": bool(min(margins) >= 0)}


def excursion_suite(regions: RegionSet, ms=range(5, 61), k_range=range(1, 7), M_range=range(1, 7)) -> dict:
    cfg = regions.cfg
    family = zero_block_family(cfg, regions, ms)
    grid = []
    for k in k_range:
        for M in M_range:
            rows = [r for o in family for r in excursion_average(cfg, regions, o, k, M)]
            grid.append({"k": k, "M": M, "excursions": len(rows), "violations": sum(not r["ok"] for r in rows),
                         "min_margin_lower": min((r["margin_lower"] for r in rows), default=None),
                         "min_margin_upper": min((r["margin_upper"] for r in rows), default=None)})
    k0, M0, rep = empirical_k0_M0(cfg, regions, family, k_range, M_range)
    return {
        "k0": k0,
        "M0": M0,
        "window": [cfg.log_floor, regions.Q.log_multiplier],
        "rows": rep.rows,
        "grid": grid,
        "checks": {"window": rep.violations == 0 and len(rep.rows) > 0},
        "_family": family,
    }


def drop_suite(regions: RegionSet, family, k: int, M: int, orbits12=None, n: int = 12, t: float = 1.0) -> dict:
    cfg = regions.cfg
    orbits12 = enumerate_periodic(cfg, regions, n) if orbits12 is None else orbits12
    nu = conditioned_gibbs(cfg, orbits12, n, t)
    rows = measure_drop_experiment(cfg, regions, family, nu, k, M)
    return {
        "k": k,
        "M": M,
        "t_nu": t,
        "lambda_nu": lyapunov(cfg, nu),
        "lambda_Q": regions.Q.log_multiplier,
        "rows": rows,
        "violations": sum(not r["ok"] for r in rows),
        "checks": {"bounds": all(r["ok"] for r in rows)},
    }


# the whole thing


def selfcheck(cfg: MapConfig) -> dict:
    """All module invariant suites at cfg.b, with reduced sample sizes where the suites are slow."""
    regions = prepare(cfg)
    c = regions.cfg
    P, Q = fixed_saddles(c)
    wu = grow_unstable(c, P, 2.0)
    manifolds = {
        "a_star": regions.tangency.a_star,
        "zeta0": regions.zeta0.tolist(),
        "zeta0_checks": regions.check_zeta0(),
        "Wu_vertices": len(wu),
        "Wu_partial": wu.partial,
        "Wu_distance_to_zeta0": wu.distance_to(regions.zeta0),
        "checks": {
            "zeta0_in_I": regions.check_zeta0()["zeta0_in_I"],
            "Wu_reaches_zeta0": bool(wu.distance_to(regions.zeta0) < 1e-6),
        },
    }
    coding = coding_suite(regions, n_max=min(12, c.n_max), words=200, transition_samples=1000, seed=c.seed)
    orbs = enumerate_periodic(c, regions, 12)
    thermo = thermo_suite(regions, 12, competitors=20, seed=c.seed, orbits=orbs)
    binding = binding_suite(regions)
    growth = orbit_growth_suite(regions, orbits=10, seed=c.seed)
    exc = excursion_suite(regions, k_range=range(1, 3), M_range=range(1, 3))
    family = exc.pop("_family")
    drop = drop_suite(regions, family, exc["k0"], exc["M0"], orbs)
    floor = periodic_floor(regions, orbs)
    suites = {"manifolds": manifolds, "coding": coding, "thermo": thermo, "binding": binding,
              "orbit_growth": growth, "excursions": exc, "drop": drop, "periodic_floor": {"checks": {"floor": floor["ok"]}, **floor}}
    failed = sorted(f"{name}.{k}" for name, s in suites.items() for k, v in s["checks"].items() if not v)
    return {"config": c.to_dict(), "suites": suites, "failed": failed, "ok": not failed}
