"""Binding to critical orbits: the critical cocycle, contraction scales, bound and fold periods.

The forward orbit of zeta_0 is taken from the stable chain through
f(zeta_0) (it converges to Q), not from iterating f, which loses the orbit
after a couple of dozen steps.  Orbits of nearby points are followed
through their exact difference to the critical orbit, so the tiny offsets
that fix bound periods keep full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from henon_lab import chains
from henon_lab.config import MapConfig
from henon_lab.core import apply, escaped, jacobian, unit
from henon_lab.errors import GeometryError, NumericalError
from henon_lab.manifolds import (
    RegionSet,
    critical_angle,
    critical_return_time,
    stable_direction,
    stable_position,
    unstable_leaf,
)


@dataclass(frozen=True)
class CriticalCocycle:
    """w_i(zeta) for i = 1..H+1 in log-scaled form, with d_i and D_p.

    ``orbit[i-1]`` is f^i(zeta); ``log_w[i-1]`` is log|w_i|; ``log_d[i-1]``
    is log d_i and ``log_D[p-1]`` is log D_p, for i, p = 1..H.
    """

    zeta: np.ndarray
    orbit: np.ndarray
    log_w: np.ndarray
    w_dirs: np.ndarray
    log_d: np.ndarray
    log_D: np.ndarray
    n: float
    tau: float

    @property
    def horizon(self) -> int:
        return len(self.log_D)

    @property
    def w_norms(self) -> np.ndarray:
        return np.exp(self.log_w)

    @property
    def d(self) -> np.ndarray:
        return np.exp(self.log_d)

    @property
    def D(self) -> np.ndarray:
        return np.exp(self.log_D)

    def growth_ratios(self) -> np.ndarray:
        """|w_{i+1}| / |w_i| for i = 1..H."""
        return np.exp(np.diff(self.log_w))

    def slopes(self) -> np.ndarray:
        return np.abs(self.w_dirs[:, 1] / self.w_dirs[:, 0])


def _zeta0_orbit(cfg: MapConfig, regions: RegionSet, length: int) -> np.ndarray:
    """f^1(zeta_0) .. f^length(zeta_0) from the stable chain of alpha_0^+ at height s sqrt(b) zeta_0_x."""
    x0 = float(regions.zeta0[0])
    qx = float(regions.Q.location[0])
    signs = np.array([1.0] + [-1.0] * (length + 24))
    x = chains.sweep(cfg, signs, x0, qx, max_sweeps=40)
    x, res = chains.newton(cfg, x, x0, qx)
    if res > 1e-12:
        raise NumericalError(f"critical orbit chain did not converge (residual {res})")
    return chains.chain_points(cfg, x, x0)[:length]


def critical_cocycle(cfg: MapConfig, regions: RegionSet, zeta=None, horizon: int | None = None) -> CriticalCocycle:
    """w_i(zeta) = Df^{i-1}(f zeta)(1, 0), d_i and D_p along the critical orbit.

    For zeta_0 the horizon defaults to ``binding_horizon``; for other
    critical points the cocycle stops at n(zeta).
    """
    z = regions.zeta0 if zeta is None else np.asarray(zeta, dtype=float)
    is0 = bool(np.linalg.norm(z - regions.zeta0) <= 1e-9)
    H = (cfg.binding_horizon if horizon is None else horizon)
    if is0:
        orbit = _zeta0_orbit(cfg, regions, H + 1)
        n = math.inf
    else:
        n = critical_return_time(cfg, z, regions)
        H = int(min(H, n))
        if H < 1:
            raise GeometryError("critical orbit leaves U immediately")
        pts = [apply(cfg, z)]
        for _ in range(H):
            pts.append(apply(cfg, pts[-1]))
        orbit = np.array(pts)
    log_w = np.empty(H + 1)
    dirs = np.empty((H + 1, 2))
    v = np.array([1.0, 0.0])
    log_w[0] = 0.0
    dirs[0] = v
    for i in range(H):
        w = jacobian(cfg, orbit[i]) @ v
        nw = math.hypot(w[0], w[1])
        log_w[i + 1] = log_w[i] + math.log(nw)
        v = w / nw
        dirs[i + 1] = v
    log_d = log_w[1:] - 2.0 * log_w[:-1]
    # D_p = tau / sum_{i<=p} d_i^{-1}
    log_D = np.array([math.log(cfg.tau) - logsumexp(-log_d[:p]) for p in range(1, H + 1)])
    return CriticalCocycle(z, orbit, log_w, dirs, log_d, log_D, n, cfg.tau)


def contraction_scale(cc: CriticalCocycle, p: int) -> float:
    """D_p(zeta)."""
    if p < 1 or p > cc.horizon:
        raise GeometryError(f"p = {p} outside [1, {cc.horizon}] (beyond n(zeta) or the horizon)")
    return float(math.exp(cc.log_D[p - 1]))


@dataclass(frozen=True)
class ScaleReport:
    p0: int | None
    lower_margin: np.ndarray
    upper_margin: np.ndarray
    wD_over_tau: np.ndarray
    ratio_min: float
    ratio_max: float
    slope_max: float
    D_decreasing: bool


def scale_report(cfg: MapConfig, cc: CriticalCocycle) -> ScaleReport:
    """Growth ratios and both contraction-scale bounds along the cocycle.

    Margins are logarithmic: positive means the inequality holds.  p0 is
    the smallest p from which the two-sided D_p bound holds up to the horizon.
    """
    H = cc.horizon
    p = np.arange(1, H + 1)
    lower = cc.log_D + p * math.log(cfg.lambda2 + cfg.eps / 2.0)
    upper = -p * math.log(cfg.lambda1) - cc.log_D
    ok = (lower >= 0) & (upper >= 0)
    p0 = None
    for k in range(H - 1, -1, -1):
        if not ok[k]:
            break
        p0 = k + 1
    wD = np.exp(cc.log_w[:H] + cc.log_D) / cfg.tau
    r = cc.growth_ratios()
    return ScaleReport(p0, lower, upper, wD, float(r.min()), float(r.max()),
                       float(cc.slopes()[:H].max()), bool(np.all(np.diff(cc.log_D) < 0)))


# strips, bound and fold periods


def leaf_shift(cfg: MapConfig, anchor, dy: float, step: float = 1e-4) -> float:
    """x(anchor_y + dy) - anchor_x along the integral curve of the stable-direction field (classical RK4).

    Integrated in displacement form so that small shifts keep full relative precision.
    """
    if dy == 0.0:
        return 0.0
    ax, ay = float(anchor[0]), float(anchor[1])
    nsteps = max(1, int(math.ceil(abs(dy) / step)))
    h = dy / nsteps

    def slope(u, v):
        e = stable_direction(cfg, np.array([ax + u, ay + v]), allow_truncate=True)
        return e[0] / e[1]

    u, v = 0.0, 0.0
    for _ in range(nsteps):
        k1 = slope(u, v)
        k2 = slope(u + 0.5 * h * k1, v + 0.5 * h)
        k3 = slope(u + 0.5 * h * k2, v + 0.5 * h)
        k4 = slope(u + h * k3, v + h)
        u += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        v += h
    return u


@dataclass(frozen=True)
class Approach:
    """A point z on a curve through zeta, described relative to zeta without cancellation."""

    delta: np.ndarray
    tangent: np.ndarray
    orbit_delta: np.ndarray = field(repr=False)

    @property
    def distance(self) -> float:
        return float(np.hypot(*self.delta))


def _step_delta(cfg: MapConfig, p, dlt):
    """f(p + dlt) - f(p), exactly rearranged."""
    dx, dy = dlt[0], dlt[1]
    return np.array([-cfg.a * (2.0 * p[0] * dx + dx * dx) + cfg.sqrt_b * dy, cfg.s * cfg.sqrt_b * dx])


def approach_on_lower_side(cfg: MapConfig, regions: RegionSet, cc: CriticalCocycle, offset: float) -> Approach:
    """z on the lower unstable side at abscissa zeta_x + offset, with its orbit offsets to the critical orbit."""
    from henon_lab.manifolds import unstable_side_curve

    zx = float(regions.zeta0[0])
    curve = unstable_side_curve(cfg, [zx, zx + offset], "lower")
    dy = float(curve.vertices[1, 1] - curve.vertices[0, 1])
    delta = np.array([offset, dy])
    return approach(cfg, cc, delta, curve.tangents[1])


def approach(cfg: MapConfig, cc: CriticalCocycle, delta, tangent) -> Approach:
    delta = np.asarray(delta, dtype=float)
    H = cc.horizon
    od = np.empty((H + 1, 2))
    od[0] = _step_delta(cfg, cc.zeta, delta)
    for i in range(H):
        od[i + 1] = _step_delta(cfg, cc.orbit[i], od[i])
        if not np.all(np.isfinite(od[i + 1])) or np.max(np.abs(od[i + 1])) > 10.0:
            od = od[: i + 2]
            break
    return Approach(delta, unit(tangent), od)


def strip_offset(cfg: MapConfig, regions: RegionSet, cc: CriticalCocycle, ap: Approach) -> float:
    """|x - x(y)| for f z = (x, y) against the leaf through f zeta.

    For zeta_0 the leaf is alpha_0^+; its shift between the heights of
    f zeta and f z is taken to second order from the chain sensitivity, so
    the first-order terms cancel exactly as they should at a tangency.
    """
    d1 = ap.orbit_delta[0]
    if math.isinf(cc.n):
        qx = float(regions.Q.location[0])
        x0 = float(cc.zeta[0])
        fs = np.array([1.0] + [-1.0] * cfg.chain_depth)
        x = chains.sweep(cfg, fs, x0, qx, max_sweeps=20)
        x, _ = chains.newton(cfg, x, x0, qx)
        sens = chains.boundary_sensitivity(cfg, x, "left")[0]
        h = 1e-4
        xp = stable_position(cfg, x0 + h, [1.0], qx)
        xm = stable_position(cfg, x0 - h, [1.0], qx)
        curv = (xp - 2.0 * x[0] + xm) / (h * h)
        du = d1[1] / (cfg.s * cfg.sqrt_b)  # shift of the chain's left boundary
        shift = sens * du + 0.5 * curv * du * du
        return float(abs(d1[0] - shift))
    return float(abs(d1[0] - leaf_shift(cfg, cc.orbit[0], d1[1])))


def bound_period(cfg: MapConfig, cc: CriticalCocycle, offset: float) -> int:
    """The p with D_p < offset <= D_{p-1} (D_0 = +inf)."""
    if offset <= 0.0:
        raise GeometryError("z on the critical leaf: no bound period")
    lo = math.log(offset)
    below = np.flatnonzero(cc.log_D < lo)
    if below.size == 0:
        if math.isinf(cc.n):
            raise NumericalError("binding horizon too short for this distance")
        raise GeometryError("z too close to zeta: no bound period (|x - x(y)| <= D_n(zeta))")
    return int(below[0]) + 1


def fold_period(cfg: MapConfig, cc: CriticalCocycle, distance: float, p: int) -> int:
    """min{1 <= i < p : |zeta - z|^beta |w_{j+1}| >= 1 for all i <= j < p}."""
    if p < 2:
        raise GeometryError("fold period needs p >= 2")
    lb = cfg.beta * math.log(distance)
    q = None
    for i in range(p - 1, 0, -1):
        if lb + cc.log_w[i] >= 0.0:  # log_w[i] = log |w_{i+1}|
            q = i
        else:
            break
    if q is None:
        raise GeometryError("fold period undefined (condition fails at j = p - 1)")
    return q


@dataclass(frozen=True)
class BindingRecord:
    zeta: np.ndarray
    delta: np.ndarray
    distance: float
    offset: float
    p: int
    q: int
    D_p: float
    log_growth: np.ndarray
    slope_p: float
    checks: dict
    approx_constant: float

    def ok(self, items: str = "abcdef") -> bool:
        return all(self.checks[k]["pass"] for k in items)

    def to_json_dict(self) -> dict:
        return {
            "zeta": self.zeta.tolist(),
            "delta": self.delta.tolist(),
            "distance": self.distance,
            "strip_offset": self.offset,
            "p": self.p,
            "q": self.q,
            "D_p": self.D_p,
            "log_norm_Dfp_v": float(self.log_growth[self.p - 1]),
            "slope_p": self.slope_p,
            "checks": self.checks,
            "approx_constant": self.approx_constant,
            "approx_constant_note": "test constant for the two-sided comparison (c); not a value from the theory",
        }


def tangent_growth(cfg: MapConfig, cc: CriticalCocycle, ap: Approach, steps: int) -> tuple[np.ndarray, np.ndarray]:
    """log |Df^i v(z)| for i = 1..steps and the direction after the last step."""
    z = cc.zeta + ap.delta
    v = ap.tangent.copy()
    logs = np.empty(steps)
    total = 0.0
    for i in range(steps):
        p = z if i == 0 else cc.orbit[i - 1] + ap.orbit_delta[i - 1]
        w = jacobian(cfg, p) @ v
        nw = math.hypot(w[0], w[1])
        total += math.log(nw)
        logs[i] = total
        v = w / nw
    return logs, v


def _check(passed: bool, margin: float, **extra) -> dict:
    out = {"pass": bool(passed), "margin": float(margin)}
    out.update(extra)
    return out


def verify_recovery(cfg: MapConfig, regions: RegionSet, cc: CriticalCocycle, ap: Approach) -> BindingRecord:
    """Bound and fold periods of z and the six recovery estimates with numeric margins.

    Margins are logarithmic where the statement is multiplicative, and in
    units of periods for the two period sandwiches.
    """
    dist = ap.distance
    off = strip_offset(cfg, regions, cc, ap)
    p = bound_period(cfg, cc, off)
    q = fold_period(cfg, cc, dist, p)
    L = math.log(1.0 / dist)
    logs, vp = tangent_growth(cfg, cc, ap, p)
    checks = {}
    lo_a, hi_a = 2.0 * L / math.log(5.0), 3.0 * L / math.log(cfg.lambda1)
    checks["a"] = _check(lo_a <= p <= hi_a, min(p - lo_a, hi_a - p), lower=lo_a, upper=hi_a)
    lo_b = cfg.beta * L / math.log(cfg.lambda2)
    hi_b = cfg.beta * L / math.log(cfg.lambda1) + 1.0
    checks["b"] = _check(lo_b <= q <= hi_b, min(q - lo_b, hi_b - q), lower=lo_b, upper=hi_b)
    C = cfg.approx_constant
    idx = np.arange(q + 1, p + 1)
    if idx.size:
        # |Df^i v| / (|zeta - z| |w_i|), i = q+1..p
        ratio = logs[idx - 1] - (math.log(dist) + cc.log_w[idx - 1])
        m = float(min(math.log(C) - np.max(ratio), np.min(ratio) + math.log(C)))
        checks["c"] = _check(m >= 0, m, ratio_min=float(np.exp(ratio.min())), ratio_max=float(np.exp(ratio.max())))
    else:
        checks["c"] = _check(True, math.inf, ratio_min=math.nan, ratio_max=math.nan)
    if q > 1:
        m = float(-np.max(logs[: q - 1]))
        checks["d"] = _check(m > 0, m)
    else:
        checks["d"] = _check(True, math.inf, vacuous=True)
    me = float(logs[p - 1] - 0.5 * p * math.log(4.0 - cfg.eps))
    checks["e"] = _check(me > 0, me)
    slope_p = abs(vp[1] / vp[0]) if vp[0] != 0 else math.inf
    checks["f"] = _check(slope_p < cfg.b4, math.log(cfg.b4) - math.log(slope_p) if slope_p > 0 else math.inf)
    return BindingRecord(cc.zeta, ap.delta, dist, off, p, q, contraction_scale(cc, p), logs, slope_p, checks, C)


def dyadic_records(cfg: MapConfig, regions: RegionSet, cc: CriticalCocycle, js=range(8, 25),
                   sides=(1, -1)) -> list[BindingRecord]:
    """Records for z on the lower side of R at distances ~2^-j on both sides of zeta_0."""
    out = []
    for j in js:
        for sgn in sides:
            ap = approach_on_lower_side(cfg, regions, cc, sgn * 2.0 ** (-j))
            out.append(verify_recovery(cfg, regions, cc, ap))
    return out


# bound/free structure along orbits


@dataclass(frozen=True)
class Segment:
    kind: str
    start: int
    length: int
    log_growth: float
    bound: float
    closed: bool

    @property
    def checked(self) -> bool:
        """Bound segments cut off by the end of a finite orbit carry no estimate."""
        return self.kind == "free" or self.closed

    @property
    def margin(self) -> float:
        return self.log_growth - self.bound

    @property
    def ok(self) -> bool:
        return not self.checked or self.margin >= 0.0

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "start": self.start, "length": self.length, "log_growth": self.log_growth,
                "log_bound": self.bound, "closed": self.closed, "checked": self.checked, "ok": self.ok}


def leaf_critical_point(cfg: MapConfig, leaf, window: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """The critical point of an unstable leaf crossing |x| < window (default 2 delta), by Brent's method."""
    w = 2.0 * cfg.delta if window is None else window

    def ang(X):
        (pt,), (tg,) = leaf.evaluator(X)
        return critical_angle(cfg, pt, tg)[0]

    fa, fb = ang(-w), ang(w)
    if np.sign(fa) == np.sign(fb):
        raise GeometryError("no critical point on the leaf inside the critical window")
    X = brentq(ang, -w, w, xtol=1e-15, rtol=1e-15)
    (pt,), (tg,) = leaf.evaluator(X)
    return pt, tg


@dataclass(frozen=True)
class ReturnBinding:
    index: int
    zeta: np.ndarray
    distance: float
    offset: float
    p: int
    n_zeta: float


def _x_sequence(cfg: MapConfig, points) -> np.ndarray:
    """x_{-1}, x_0, ..., x_{N-1} of an orbit given as points."""
    pts = np.asarray(points, dtype=float)
    return np.concatenate(([pts[0, 1] / (cfg.s * cfg.sqrt_b)], pts[:, 0]))


def bind_return(cfg: MapConfig, regions: RegionSet, points, i: int, depth: int = 24,
                cc0: CriticalCocycle | None = None) -> ReturnBinding:
    """Bound period of the return ``points[i]`` against the critical point of its own unstable leaf.

    The leaf is the set of points sharing the branch signs of the last
    ``depth`` past iterates.  Leaves through points very close to the
    tangency bind to zeta_0 itself.
    """
    xs = _x_sequence(cfg, points)
    N = min(depth, i)
    if N < 2:
        raise GeometryError("return too early in the orbit to identify its unstable leaf")
    j = i + 1
    past = xs[j - N: j]
    signs = np.where(past < 0, -1.0, 1.0)
    z = np.asarray(points[i], dtype=float)
    leaf = unstable_leaf(cfg, signs, float(xs[j - N - 1]), [z[0]])
    zeta, _ = leaf_critical_point(cfg, leaf)
    tz = leaf.tangents[0]
    if np.linalg.norm(zeta - regions.zeta0) <= 1e-9:
        cc = cc0 if cc0 is not None else critical_cocycle(cfg, regions)
        delta = z - regions.zeta0
    else:
        cc = critical_cocycle(cfg, regions, zeta)
        delta = z - zeta
    ap = approach(cfg, cc, delta, tz)
    off = strip_offset(cfg, regions, cc, ap)
    p = bound_period(cfg, cc, off)
    return ReturnBinding(i, cc.zeta, ap.distance, off, p, cc.n)


def bound_free_decompose(cfg: MapConfig, regions: RegionSet, points, log_ju, start: int = 0,
                         periodic: bool = False, cc0: CriticalCocycle | None = None) -> list[Segment]:
    """Split an orbit into free and bound segments and attach the derivative estimates.

    Points before ``start`` only supply the past that fixes unstable leaves.
    Each visit to I(delta) outside a bound period is a free return; its
    bound period comes from the critical point of its own leaf.  Free
    segments ending at a return must expand by sigma^L, and a free segment
    cut off by the end of a finite orbit by delta sigma^L.  Bound segments
    must expand by (4 - eps)^{p/2}.  ``log_ju`` holds log J^u at each point.
    A periodic orbit is unrolled three times and the segments meeting the
    middle copy are reported, so its decomposition repeats with the orbit.
    """
    pts = np.asarray(points, dtype=float)
    lj = np.asarray(log_ju, dtype=float)
    n = len(pts)
    if periodic:
        pts = np.tile(pts, (3, 1))
        lj = np.tile(lj, 3)
        start = max(start, 2)
    N = len(pts)
    inI = regions.in_I(pts)
    csum = np.concatenate(([0.0], np.cumsum(lj)))
    ls, lf = math.log(cfg.sigma), 0.5 * math.log(4.0 - cfg.eps)
    segs = []
    i = free_start = start
    while i < N:
        if not inI[i]:
            i += 1
            continue
        L = i - free_start
        if L > 0:
            segs.append(Segment("free", free_start, L, float(csum[i] - csum[free_start]), L * ls, True))
        rb = bind_return(cfg, regions, pts, i, cc0=cc0)
        end = min(i + rb.p, N)
        segs.append(Segment("bound", i, rb.p, float(csum[end] - csum[i]), rb.p * lf, end == i + rb.p))
        i = free_start = i + rb.p
    if free_start < N:
        L = N - free_start
        segs.append(Segment("free", free_start, L, float(csum[N] - csum[free_start]),
                            L * ls + math.log(cfg.delta), False))
    if periodic:
        segs = [s for s in segs if s.start < 2 * n and s.start + s.length > n]
    return segs


def free_expansion_check(cfg: MapConfig, regions: RegionSet, z, v, n: int) -> tuple[bool, float]:
    """|Df^n v| >= delta sigma^n |v| for orbits outside I(delta) inside R; returns (applies, log margin)."""
    p = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    total = 0.0
    for _ in range(n):
        if bool(regions.in_I(p)) or not bool(regions.in_R(p, 1e-9)) or escaped(cfg, p):
            return False, math.nan
        w = jacobian(cfg, p) @ v
        nw = math.hypot(w[0], w[1])
        total += math.log(nw)
        v = w / nw
        p = apply(cfg, p)
    return True, total - (math.log(cfg.delta) + n * math.log(cfg.sigma))
