"""Unstable directions, the geometric potential and periodic-orbit thermodynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from henon_lab import chains
from henon_lab.coding import PeriodicOrbit, Word, cycle_unstable, decode_chain, necklaces, periodic_point
from henon_lab.config import MapConfig
from henon_lab.core import apply_inverse, escaped, jacobian, unit
from henon_lab.errors import EscapeError, GeometryError, IncompleteEnumerationError, NumericalError
from henon_lab.manifolds import RegionSet

MIN_BACK = 3


# unstable directions


@dataclass(frozen=True)
class UnstableDirection:
    vector: np.ndarray
    steps: int
    consistency: float


def unstable_direction(cfg: MapConfig, z, n_back: int | None = None) -> UnstableDirection:
    """E^u(z) by pushing a horizontal vector forward along the backward orbit of z.

    The inverse map expands by about 4/b, so a backward orbit computed from
    rounded coordinates is only accurate for a few steps and then escapes.
    Direction errors are damped by about b/16 per forward step, so three
    accurate steps already fix E^u to rounding level; iteration stops at the
    escape box and at least ``MIN_BACK`` steps are required.
    ``consistency`` is the angle between the results with one step fewer
    and the full backward orbit.
    """
    n_back = cfg.n_back if n_back is None else n_back
    back = [np.asarray(z, dtype=float)]
    for _ in range(n_back):
        w = apply_inverse(cfg, back[-1])
        if escaped(cfg, w):
            break
        back.append(w)
    steps = len(back) - 1
    if steps < min(MIN_BACK, n_back):
        raise EscapeError(f"backward orbit escapes after {steps} steps", steps)
    vecs = []
    for start in (steps - 1, steps):
        v = np.array([1.0, 0.0])
        for p in back[start:0:-1]:
            v = unit(jacobian(cfg, p) @ v)
        vecs.append(v)
    v = vecs[1] if vecs[1][0] >= 0 else -vecs[1]
    c = abs(float(vecs[0] @ vecs[1]))
    return UnstableDirection(v, steps, math.acos(min(1.0, c)))


def log_Ju(cfg: MapConfig, z, direction=None) -> float:
    """log |Df(z) E^u(z)|."""
    e = unstable_direction(cfg, z).vector if direction is None else unit(direction)
    w = jacobian(cfg, z) @ e
    return math.log(math.hypot(w[0], w[1]))


def orbit_log_ju(cfg: MapConfig, points, burn_in: int) -> tuple[np.ndarray, np.ndarray]:
    """E^u and log J^u along an orbit segment whose first ``burn_in`` points serve as past."""
    pts = np.asarray(points, dtype=float)
    v = np.array([1.0, 0.0])
    dirs = np.empty((len(pts), 2))
    logs = np.empty(len(pts))
    for i, p in enumerate(pts):
        dirs[i] = v
        w = jacobian(cfg, p) @ v
        nw = math.hypot(w[0], w[1])
        logs[i] = math.log(nw)
        v = w / nw
    return dirs[burn_in:], logs[burn_in:]


def sample_orbit(cfg: MapConfig, rng: np.random.Generator, length: int, margin: int = 30):
    """A random orbit segment of K of the given length with E^u and log J^u.

    Realised as one chain for a random word with ``margin`` extra symbols on
    both ends; the leading margin doubles as the past for E^u.
    """
    sym = rng.integers(0, 2, size=length + 2 * margin)
    x, res = decode_chain(cfg, sym, margin)
    if res > 1e-12:
        raise NumericalError(f"orbit chain residual {res}")
    pts = chains.chain_points(cfg, x, 0.0)
    dirs, logs = orbit_log_ju(cfg, pts[: margin + length], margin)
    return pts[margin: margin + length], dirs, logs, sym[margin: margin + length]


# pressure


@dataclass(frozen=True)
class PressureSample:
    t: float
    n: int
    P_n: float
    count: int
    lambda_u: float
    entropy: float
    top_share: float


def _point_data(orbits: list[PeriodicOrbit], n: int) -> tuple[np.ndarray, list[PeriodicOrbit]]:
    """Birkhoff sums S_n log J^u for every fixed point of f^n, in word order."""
    ordered = sorted(orbits, key=lambda o: (o.period, str(o.word)))
    count = sum(o.period for o in ordered)
    if count != 2 ** n:
        have = {str(o.word.canonical()) for o in ordered}
        missing = [str(w) for d in range(1, n + 1) if n % d == 0 for w in necklaces(d) if str(w) not in have]
        raise IncompleteEnumerationError(f"{count} fixed points of f^{n}, expected {2 ** n}", missing)
    s = []
    for o in ordered:
        if n % o.period:
            raise GeometryError(f"orbit {o.word} has period not dividing {n}")
        s.extend([(n // o.period) * o.log_multiplier] * o.period)
    return np.array(s), ordered


class PressureCurve:
    """t -> P_n(t) from a complete list of period-dividing-n orbits."""

    def __init__(self, cfg: MapConfig, orbits: list[PeriodicOrbit], n: int):
        self.cfg = cfg
        self.n = n
        self.sums, self.orbits = _point_data(orbits, n)

    def __call__(self, t: float) -> float:
        return float(logsumexp(-t * self.sums) / self.n)

    def weights(self, t: float) -> np.ndarray:
        e = -t * self.sums
        return np.exp(e - logsumexp(e))

    def lyapunov(self, t: float) -> float:
        return float(self.weights(t) @ self.sums / self.n)

    def sample(self, t: float) -> PressureSample:
        P = self(t)
        w = self.weights(t)
        lam = float(w @ self.sums / self.n)
        return PressureSample(t, self.n, P, len(self.sums), lam, P + t * lam, float(w.max()))


def pressure(cfg: MapConfig, orbits: list[PeriodicOrbit], n: int, t: float) -> PressureSample:
    """P_n(t) = (1/n) log sum over Fix(f^n) of exp(-t S_n log J^u)."""
    return PressureCurve(cfg, orbits, n).sample(t)


@dataclass(frozen=True)
class AtomicMeasure:
    """Invariant measure on periodic orbits; each orbit's weight is spread evenly over its points."""

    support: tuple[PeriodicOrbit, ...]
    weights: np.ndarray
    t: float | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(self.support),) or np.any(w < 0):
            raise GeometryError("weights must be nonnegative, one per orbit")
        if abs(w.sum() - 1.0) > 1e-12:
            raise GeometryError(f"weights sum to {w.sum()}, not 1")

    def point_weights(self) -> np.ndarray:
        return np.concatenate([np.full(o.period, w / o.period) for o, w in zip(self.support, self.weights)])

    def point_log_ju(self) -> np.ndarray:
        return np.concatenate([o.log_ju for o in self.support])


def equilibrium_weights(cfg: MapConfig, orbits: list[PeriodicOrbit], n: int, t: float) -> AtomicMeasure:
    """Gibbs measure on Fix(f^n) for the potential -t log J^u, grouped by orbit."""
    curve = PressureCurve(cfg, orbits, n)
    w = curve.weights(t)
    per_orbit = []
    i = 0
    for o in curve.orbits:
        per_orbit.append(float(w[i: i + o.period].sum()))
        i += o.period
    pw = np.array(per_orbit)
    return AtomicMeasure(tuple(curve.orbits), pw / pw.sum(), t)


def dirac(orbit: PeriodicOrbit) -> AtomicMeasure:
    return AtomicMeasure((orbit,), np.array([1.0]))


def mixture(u: float, first: AtomicMeasure, second: AtomicMeasure) -> AtomicMeasure:
    """u * first + (1 - u) * second."""
    sup = first.support + second.support
    return AtomicMeasure(sup, np.concatenate([u * first.weights, (1.0 - u) * second.weights]))


def lyapunov(cfg: MapConfig, measure: AtomicMeasure) -> float:
    """lambda^u(mu) = mu(log J^u)."""
    return float(sum(w * o.log_multiplier / o.period for o, w in zip(measure.support, measure.weights)))


def free_energy(cfg: MapConfig, measure: AtomicMeasure, n: int, t: float) -> float:
    """(1/n) H(point weights) - t lambda^u for a measure on Fix(f^n).

    The n-step entropy of the point distribution plays the role of h; the
    Gibbs measure maximises this functional with maximum P_n(t).
    """
    pw = measure.point_weights()
    nz = pw[pw > 0]
    return float(-(nz @ np.log(nz)) / n - t * lyapunov(cfg, measure))


# roots


@dataclass(frozen=True)
class ThermoReport:
    t_u: float
    t0_curve: float
    t0_bound: float
    t0_found: bool
    b: float
    eps: float
    n: int
    grid: np.ndarray
    P: np.ndarray
    lambda_u: np.ndarray
    entropy: np.ndarray

    def checks(self) -> dict:
        return {
            "t_u_in_unit_interval": bool(0.0 < self.t_u < 1.0),
            "t0_curve_ge_t_u": bool(self.t0_curve >= self.t_u),
            "t0_curve_ge_t0_bound": bool(self.t0_curve >= self.t0_bound - 1e-6),
        }

    def to_json_dict(self) -> dict:
        return {
            "t_u": self.t_u,
            "t0_curve": self.t0_curve if self.t0_found else "no crossing found in [0, t_max]",
            "t0_bound": self.t0_bound,
            "b": self.b,
            "eps": self.eps,
            "n": self.n,
            "checks": self.checks(),
            "table": [{"t": t, "P_n": p, "lambda_u": l, "h": h}
                      for t, p, l, h in zip(self.grid, self.P, self.lambda_u, self.entropy)],
        }


def t0_lower_bound(t_u: float, eps: float) -> float:
    """log 2 / ((1/t_u) log 2 - (1/2) log(4 - eps)); +inf when the denominator is not positive."""
    den = math.log(2.0) / t_u - 0.5 * math.log(4.0 - eps)
    return math.log(2.0) / den if den > 0 else math.inf


def _first_root(fun, grid: np.ndarray) -> float | None:
    vals = np.array([fun(t) for t in grid])
    idx = np.flatnonzero((vals[:-1] > 0) & (vals[1:] <= 0))
    if idx.size == 0:
        return None
    i = int(idx[0])
    if vals[i + 1] == 0.0:
        return float(grid[i + 1])
    return float(brentq(fun, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15, maxiter=200))


def find_t_roots(cfg: MapConfig, curve: PressureCurve, grid=None, t_max: float = 200.0) -> ThermoReport:
    """t^u (zero of P_n), t_0 from P_n(t) + (t/2) log(4 - eps) and the closed-form lower bound."""
    grid = np.linspace(0.0, 3.0, 61) if grid is None else np.asarray(grid, dtype=float)
    t_u = _first_root(curve, np.linspace(0.0, t_max, 4001))
    if t_u is None:
        raise GeometryError("no zero of P_n in [0, t_max]")
    c = cfg.log_floor
    t0 = _first_root(lambda t: curve(t) + t * c, np.linspace(0.0, t_max, 4001))
    samples = [curve.sample(float(t)) for t in grid]
    return ThermoReport(
        t_u=t_u,
        t0_curve=t0 if t0 is not None else math.inf,
        t0_bound=t0_lower_bound(t_u, cfg.eps),
        t0_found=t0 is not None,
        b=cfg.b,
        eps=cfg.eps,
        n=curve.n,
        grid=grid,
        P=np.array([s.P_n for s in samples]),
        lambda_u=np.array([s.lambda_u for s in samples]),
        entropy=np.array([s.entropy for s in samples]),
    )


# Chebyshev limit


def chebyshev_fixed_points(n: int) -> np.ndarray:
    """Fixed points of f^n for x -> 1 - 2 x^2, via u = -x conjugating to T_2 and T_2^n = T_{2^n}."""
    N = 2 ** n
    th = np.concatenate([2 * np.pi * np.arange(0, (N - 1 + 1) // 2 + 1) / (N - 1),
                         2 * np.pi * np.arange(1, (N + 1) // 2 + 1) / (N + 1)])
    th = th[th <= np.pi + 1e-15]
    return np.unique(np.round(-np.cos(th), 15))


def chebyshev_log_multipliers(n: int) -> np.ndarray:
    """log |(f^n)'| at the fixed points of f^n: n log 4 at x = -1, n log 2 elsewhere."""
    x = chebyshev_fixed_points(n)
    out = np.full(x.size, n * math.log(2.0))
    out[np.isclose(x, -1.0, atol=1e-14)] = n * math.log(4.0)
    return out


def chebyshev_pressure(n: int, t: float) -> float:
    return float(logsumexp(-t * chebyshev_log_multipliers(n)) / n)


# excursions and the drop experiment


@dataclass(frozen=True)
class Excursion:
    start: int
    length: int
    average: float


def excursions(flags, log_ju, periodic: bool = True) -> list[Excursion]:
    """Maximal runs of ``flags`` with the average of log J^u over each run."""
    f = np.asarray(flags, dtype=bool)
    lj = np.asarray(log_ju, dtype=float)
    n = f.size
    if n == 0 or not f.any():
        return []
    if f.all():
        return [Excursion(0, n, float(lj.mean()))]
    out = []
    if periodic:
        start0 = int(np.flatnonzero(~f)[0]) + 1  # first index after a gap
        order = [(start0 + i) % n for i in range(n)]
    else:
        order = list(range(n))
    run: list[int] = []
    for j in order + [None]:
        if j is not None and f[j]:
            run.append(j)
            continue
        if run:
            out.append(Excursion(run[0], len(run), float(lj[run].mean())))
            run = []
    return out


@dataclass(frozen=True)
class ExcursionReport:
    k: int
    M: int
    lower: float
    upper: float
    rows: list

    @property
    def violations(self) -> int:
        return sum(1 for r in self.rows if not r["ok"])


def excursion_average(cfg: MapConfig, regions: RegionSet, orbit: PeriodicOrbit, k: int,
                      M: int | None = None) -> list[dict]:
    """Per-excursion averages of log J^u through V_{k,M} with the window check."""
    M = cfg.M if M is None else M
    lo, hi = cfg.log_floor, regions.Q.log_multiplier
    flags = regions.v_flags(orbit.points, k, M, periodic=True)
    rows = []
    for ex in excursions(flags, orbit.log_ju, periodic=True):
        rows.append({
            "word": str(orbit.word),
            "k": k,
            "M": M,
            "start": ex.start,
            "length": ex.length,
            "average": ex.average,
            "margin_lower": ex.average - lo,
            "margin_upper": hi - ex.average,
            "ok": bool(lo <= ex.average <= hi),
        })
    return rows


def zero_block_family(cfg: MapConfig, regions: RegionSet, ms=range(5, 61)) -> list[PeriodicOrbit]:
    return [periodic_point(cfg, regions, Word((0,) * m + (1,), 0, True)) for m in ms]


def empirical_k0_M0(cfg: MapConfig, regions: RegionSet, family: list[PeriodicOrbit],
                    k_range=range(1, 7), M_range=range(1, 7)) -> tuple[int, int, ExcursionReport]:
    """Smallest (k, M), ordered by k then M, for which the whole family sits in the window
    and at least one excursion is seen."""
    lo, hi = cfg.log_floor, regions.Q.log_multiplier
    for k in k_range:
        for M in M_range:
            rows = [r for o in family for r in excursion_average(cfg, regions, o, k, M)]
            rep = ExcursionReport(k, M, lo, hi, rows)
            if rows and rep.violations == 0:
                return k, M, rep
    raise GeometryError("no (k, M) in range puts every excursion average in the window")


def occupation(regions: RegionSet, orbit: PeriodicOrbit, k: int, M: int) -> float:
    return float(np.mean(regions.v_flags(orbit.points, k, M, periodic=True)))


def conditioned_gibbs(cfg: MapConfig, orbits: list[PeriodicOrbit], n: int, t: float) -> AtomicMeasure:
    """Gibbs measure at t restricted to words whose longest cyclic 0-block is shorter than n/4."""
    mu = equilibrium_weights(cfg, orbits, n, t)
    keep = [i for i, o in enumerate(mu.support) if Word(o.word.symbols * (n // o.period), 0, True).longest_zero_block() < n / 4]
    if not keep:
        raise GeometryError("conditioning removes every orbit")
    w = mu.weights[keep]
    return AtomicMeasure(tuple(mu.support[i] for i in keep), w / w.sum(), t)


def measure_drop_experiment(cfg: MapConfig, regions: RegionSet, family: list[PeriodicOrbit], nu: AtomicMeasure,
                            k: int, M: int) -> list[dict]:
    """Both mixture bounds for each single-orbit measure with u its V_{k,M} occupation fraction."""
    lam_q = regions.Q.log_multiplier
    lam_nu = lyapunov(cfg, nu)
    rows = []
    for o in family:
        u = occupation(regions, o, k, M)
        lam = o.log_multiplier / o.period
        lower = 0.5 * u * math.log(4.0 - cfg.eps) + (1.0 - u) * lam_nu
        upper = u * lam_q + (1.0 - u) * lam_nu
        rows.append({
            "word": str(o.word),
            "m": o.period - 1,
            "u": u,
            "lambda_u": lam,
            "lower": lower,
            "upper": upper,
            "margin_lower": lam - lower,
            "margin_upper": upper - lam,
            "ok": bool(lower <= lam <= upper),
        })
    return rows
