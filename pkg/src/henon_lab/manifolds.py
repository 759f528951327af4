"""Invariant manifolds, the first-tangency parameter a*, regions and critical points.

Two independent representations of manifolds live here:

* graph form, computed through orbit chains: a point of an unstable side
  of R over abscissa X is pinned by its backward orbit converging to the
  saddle, and a stable curve at a given height by its forward orbit.
  These are accurate to rounding and drive a*, zeta_0 and the regions;
* grown polylines (:func:`grow_unstable`, :func:`grow_stable`), obtained by
  iterating a short eigen-segment with adaptive refinement.  They are the
  cross-check and the exported curve data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from henon_lab import chains
from henon_lab.config import MapConfig
from henon_lab.core import (
    Saddle,
    angle_between,
    apply,
    apply_inverse,
    escaped,
    fixed_saddles,
    jacobian,
    unit,
    unstable_saddle,
)
from henon_lab.errors import EscapeError, GeometryError, NumericalError


# graph form: unstable sides


def _sign(v: float) -> float:
    return 1.0 if v > 0 else -1.0


def unstable_signs(cfg: MapConfig, branch: str = "lower", past=(), saddle: Saddle | None = None) -> np.ndarray:
    """Branch signs of the backward chain of an unstable leaf, oldest first.

    ``upper`` is the branch of W^u through the saddle, ``lower`` the folded
    branch (the unstable side of R carrying the tangency).  ``past`` lists
    signs of x_{-k}, ..., x_{-1}; a nonempty past selects the image under
    f^k of that side restricted to the given branches.
    """
    sad = saddle if saddle is not None else unstable_saddle(cfg)
    ss = _sign(sad.location[0])
    signs = [ss] * cfg.chain_depth
    if branch == "lower":
        signs[-1] = -ss
    elif branch != "upper":
        raise ValueError(f"unknown branch {branch!r}")
    return np.array(signs + [float(v) for v in past])


def unstable_preimage_chain(cfg: MapConfig, X, branch: str = "lower", past=(), saddle: Saddle | None = None):
    """Backward chains (x_{-N}, ..., x_{-1}) of the leaf points over abscissa X."""
    sad = saddle if saddle is not None else unstable_saddle(cfg)
    signs = unstable_signs(cfg, branch, past, sad)
    return chains.sweep(cfg, signs, sad.location[0], X, tol=1e-16, max_sweeps=12)


def unstable_side(cfg: MapConfig, X, branch: str = "lower", past=(), saddle: Saddle | None = None):
    """Height y of an unstable side (or of its k-th image, via ``past``) over abscissa X."""
    ch = unstable_preimage_chain(cfg, X, branch, past, saddle)
    return cfg.s * cfg.sqrt_b * ch[..., -1]


def side_gap(cfg: MapConfig, X: float, past=()) -> float:
    """Vertical distance between the upper and lower leaves with a common past, at full relative precision."""
    sad = unstable_saddle(cfg)
    up = unstable_preimage_chain(cfg, X, "upper", past)
    lo = unstable_preimage_chain(cfg, X, "lower", past)
    up, _ = chains.newton(cfg, up, sad.location[0], X)
    lo, _ = chains.newton(cfg, lo, sad.location[0], X)
    d = chains.linear_gap(cfg, up, lo, cfg.chain_depth)
    return abs(cfg.sqrt_b * d[-1])


def unstable_side_points(cfg: MapConfig, X, branch: str = "lower") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.stack([X, unstable_side(cfg, X, branch)], axis=-1)


# graph form: stable curves


def stable_position(cfg: MapConfig, x_prev, future_signs, target: float):
    """Abscissa of the stable curve with the given future branch signs at height s sqrt(b) x_prev.

    The future is padded with the sign of ``target`` (the saddle the curve
    belongs to) up to the chain depth.
    """
    fs = list(future_signs)
    pad = max(cfg.chain_depth - len(fs), 8)
    signs = np.array(fs + [_sign(target)] * pad, dtype=float)
    ch = chains.sweep(cfg, signs, x_prev, target, tol=1e-16, max_sweeps=12)
    return ch[..., 0]


def stable_x_at(cfg: MapConfig, y, future_signs, target: float):
    """Abscissa of a stable curve at height y."""
    return stable_position(cfg, np.asarray(y, float) / (cfg.s * cfg.sqrt_b), future_signs, target)


def clearance_profile(cfg: MapConfig, X):
    """Signed horizontal offset of f(z) from alpha_0^+ for z on the lower unstable side.

    Positive means f(z) lies beyond alpha_0^+, i.e. z is inside the escape lens.
    """
    _, q = fixed_saddles(cfg)
    X = np.asarray(X, dtype=float)
    xm1 = unstable_preimage_chain(cfg, X, "lower")[..., -1]
    x1 = 1.0 - cfg.a * X * X + cfg.s * cfg.b * xm1
    return x1 - stable_position(cfg, X, [1.0], q.location[0])


@dataclass(frozen=True)
class Clearance:
    value: float
    x_apex: float


def clearance(cfg: MapConfig, window: float | None = None) -> Clearance:
    """g(a): maximum of the clearance profile over |X| < window (default 2 delta).

    Sign convention: g > 0 for a > a* (the fold of W^u crosses the W^s(Q)
    parabola transversally, horseshoe side), g < 0 below a*.
    """
    w = 2.0 * cfg.delta if window is None else window
    res = minimize_scalar(lambda X: -float(clearance_profile(cfg, X)), bounds=(-w, w),
                          method="bounded", options={"xatol": 1e-13, "maxiter": 500})
    x = float(res.x)
    if abs(abs(x) - w) < 1e-9:
        raise GeometryError("fold apex found on the window edge; ambiguous fold")
    return Clearance(float(-res.fun), x)


@dataclass(frozen=True)
class TangencyResult:
    a_star: float
    bracket: tuple[float, float]
    g_lo: float
    g_hi: float
    zeta0: np.ndarray
    iterations: int
    sign_convention: str = "g(a) > 0 above a* (transverse, horseshoe side); returned a* is the upper bracket end"


def find_first_tangency(cfg: MapConfig, a_bracket: tuple[float, float] = (1.9, 2.2),
                        width: float = 1e-10, max_iter: int = 200) -> TangencyResult:
    """Bisection on the fold clearance g(a) for the first tangency parameter.

    Bisection continues past ``width`` while g still resolves the sign, so
    the bracket ends up a few ulps wide; the upper end is returned so that
    the map is on the horseshoe side of the tangency.
    """
    lo, hi = map(float, a_bracket)
    g_lo = clearance(cfg.replace(a=lo)).value
    g_hi = clearance(cfg.replace(a=hi)).value
    if not (g_lo < 0.0 < g_hi):
        raise NumericalError(f"no sign change of the clearance on [{lo}, {hi}]: g = ({g_lo}, {g_hi})")
    it = 0
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        g_mid = clearance(cfg.replace(a=mid)).value
        it += 1
        if g_mid > 0.0:
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid
        if hi - lo <= width and hi - lo <= 4.0 * math.ulp(hi):
            break
    if hi - lo > width:
        raise NumericalError(f"bracket did not shrink below {width}")
    c = clearance(cfg.replace(a=hi))
    at = cfg.replace(a=hi)
    z0 = np.array([c.x_apex, float(unstable_side(at, c.x_apex, "lower"))])
    return TangencyResult(hi, (lo, hi), g_lo, g_hi, z0, it)


def parabola_y(cfg: MapConfig, X):
    """The W^s(Q) parabola f^{-1}(alpha_0^+) as a graph y(X); its apex region is the lens boundary."""
    _, q = fixed_saddles(cfg)
    X = np.asarray(X, dtype=float)
    xr = stable_position(cfg, X, [1.0], q.location[0])
    return (xr - 1.0 + cfg.a * X * X) / cfg.sqrt_b


# polylines


@dataclass(frozen=True)
class Curve:
    """Polyline with unit tangents; ``evaluator`` (if any) maps parameters to exact points and tangents."""

    vertices: np.ndarray
    tangents: np.ndarray
    params: np.ndarray
    source: dict
    partial: bool = False
    evaluator: object = field(default=None, compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)

    @property
    def arclength(self) -> float:
        return float(self.segment_lengths.sum())

    def turning_angles(self) -> np.ndarray:
        t = self.tangents
        c = np.abs(np.sum(t[1:] * t[:-1], axis=1))
        sn = np.abs(t[1:, 0] * t[:-1, 1] - t[1:, 1] * t[:-1, 0])
        return np.arctan2(sn, c)

    def curvature(self) -> np.ndarray:
        """Discrete curvature: tangent turning per unit length on each segment."""
        seg = self.segment_lengths
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(seg > 0, self.turning_angles() / seg, 0.0)
        return k

    def slopes(self) -> np.ndarray:
        t = self.tangents
        with np.errstate(divide="ignore"):
            return np.where(t[:, 0] != 0, np.abs(t[:, 1] / np.where(t[:, 0] != 0, t[:, 0], 1.0)), np.inf)

    def is_c2b(self, cfg: MapConfig) -> bool:
        cap = cfg.b4
        return bool(np.all(self.slopes() <= cap) and np.all(self.curvature() <= cap))

    def distance_to(self, z) -> float:
        """Euclidean distance from z to the polyline."""
        z = np.asarray(z, dtype=float)
        a, b = self.vertices[:-1], self.vertices[1:]
        ab = b - a
        L2 = np.sum(ab * ab, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.clip(np.where(L2 > 0, np.sum((z - a) * ab, axis=1) / L2, 0.0), 0.0, 1.0)
        proj = a + t[:, None] * ab
        return float(np.min(np.linalg.norm(proj - z, axis=1)))

    def rows(self) -> np.ndarray:
        return np.hstack([self.vertices, self.tangents])


def _signed_angle(u, v) -> np.ndarray:
    """Signed angle from line u to line v, in (-pi/2, pi/2]."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    ang = np.arctan2(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0], np.sum(u * v, axis=-1))
    return np.where(ang > np.pi / 2, ang - np.pi, np.where(ang <= -np.pi / 2, ang + np.pi, ang))


def _grow(cfg: MapConfig, saddle: Saddle, kind: str, arclength_budget: float, curvature_cap: float,
          side: int, seed_length: float, max_vertices: int) -> Curve:
    if kind == "unstable":
        step, lam, v0 = apply, saddle.eig_u, saddle.vec_u
    else:
        step, lam, v0 = apply_inverse, 1.0 / saddle.eig_s, saddle.vec_s
    reps = 2 if lam < 0 else 1
    L = abs(lam) ** reps
    base = saddle.location
    spacing = cfg.max_spacing
    box = cfg.escape_box

    def push(pts, vec):
        if kind == "unstable":
            J = jacobian(cfg, pts)
            new_pts = apply(cfg, pts)
        else:
            new_pts = apply_inverse(cfg, pts)
            J = np.linalg.inv(jacobian(cfg, new_pts))
        vec = np.einsum("...ij,...j->...i", J, vec)
        return new_pts, vec / np.linalg.norm(vec, axis=-1, keepdims=True)

    def evaluate(params):
        params = np.atleast_1d(np.asarray(params, dtype=float))
        k = np.floor(params).astype(int)
        u = params - k
        t = seed_length * L ** u
        pts = base + side * t[:, None] * v0
        vec = np.broadcast_to(side * v0, pts.shape).copy()
        for j in range(int(k.max(initial=0)) * reps):
            m = k * reps > j
            if not np.any(m):
                break
            with np.errstate(over="ignore", invalid="ignore"):
                p2, v2 = push(pts[m], vec[m])
            pts[m], vec[m] = p2, v2
        return pts, vec

    verts = [base[None, :]]
    tans = [(side * v0)[None, :]]
    pars = [np.array([-np.inf])]
    total = 0.0
    partial = False
    k = 0
    last = base
    while total < arclength_budget:
        u = np.linspace(0.0, 1.0, 17)
        for _ in range(60):
            pts, vec = evaluate(k + u)
            if not np.all(np.isfinite(pts)):
                break
            seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
            turn = np.abs(_signed_angle(vec[:-1], vec[1:]))
            bad = ((seg > spacing) | (turn > curvature_cap)) & (np.diff(u) > 1e-15)
            if not np.any(bad) or u.size > max_vertices:
                break
            mids = 0.5 * (u[:-1] + u[1:])[bad]
            u = np.sort(np.concatenate((u, mids)))
        out = np.any(np.abs(pts) > box, axis=1) | ~np.all(np.isfinite(pts), axis=1)
        if np.any(out):
            cut = int(np.argmax(out))
            pts, vec, u = pts[:cut], vec[:cut], u[:cut]
            partial = True
        seg = np.linalg.norm(np.diff(np.vstack([last[None, :], pts]), axis=0), axis=1)
        cum = total + np.cumsum(seg)
        keep = cum <= arclength_budget
        if not np.all(keep):
            n_keep = int(np.argmin(keep))
            pts, vec, u, cum = pts[:n_keep + 1], vec[:n_keep + 1], u[:n_keep + 1], cum[:n_keep + 1]
        verts.append(pts[1:] if k > 0 else pts)
        tans.append(vec[1:] if k > 0 else vec)
        pars.append((k + u)[1:] if k > 0 else k + u)
        if len(pts):
            total = float(cum[-1])
            last = pts[-1]
        if partial or sum(len(v) for v in verts) > max_vertices:
            partial = True
            break
        if not np.all(keep):
            break
        k += 1
    source = {"kind": kind, "saddle": saddle.label, "side": side, "iterates": k * reps,
              "seed_length": seed_length, "curvature_cap": curvature_cap}
    return Curve(np.vstack(verts), np.vstack(tans), np.concatenate(pars), source, partial,
                 lambda p: evaluate(p))


def grow_unstable(cfg: MapConfig, saddle: Saddle, arclength_budget: float = 2.0,
                  curvature_cap: float | None = None, side: int = 1,
                  seed_length: float = 1e-8, max_vertices: int = 400_000) -> Curve:
    """Grow one branch of W^u(saddle) by iterating a fundamental domain with adaptive refinement.

    Parameter k + u denotes the image under the k-th iterate (of f, or of f^2
    for a negative multiplier) of the seed point at distance seed_length*L^u
    along the eigenvector.  ``partial`` marks curves cut short by escape or
    the vertex budget rather than the arclength budget.
    """
    cap = cfg.turn_cap if curvature_cap is None else curvature_cap
    return _grow(cfg, saddle, "unstable", arclength_budget, cap, side, seed_length, max_vertices)


def grow_stable(cfg: MapConfig, saddle: Saddle, arclength_budget: float = 2.0,
                curvature_cap: float | None = None, side: int = 1,
                seed_length: float = 1e-8, max_vertices: int = 400_000) -> Curve:
    """Grow one branch of W^s(saddle) by backward iteration; see :func:`grow_unstable`."""
    if cfg.b <= 0.0:
        raise GeometryError("stable manifolds need an invertible map (b > 0)")
    cap = cfg.turn_cap if curvature_cap is None else curvature_cap
    return _grow(cfg, saddle, "stable", arclength_budget, cap, side, seed_length, max_vertices)


def unstable_side_curve(cfg: MapConfig, X, branch: str = "lower", past=()) -> Curve:
    """An unstable side (or leaf) sampled at abscissae X with exact tangents."""
    sad = unstable_saddle(cfg)
    signs = unstable_signs(cfg, branch, past, sad)
    return unstable_leaf(cfg, signs, sad.location[0], X,
                         {"kind": "unstable-side", "branch": branch, "past": list(past)})


def unstable_leaf(cfg: MapConfig, signs, left: float, X, source: dict | None = None) -> Curve:
    """The unstable leaf of points whose backward chain has the given branch signs (oldest first)
    and starts from ``left``, sampled at abscissae X."""
    signs = np.asarray(signs, dtype=float)

    def evaluate(params):
        params = np.atleast_1d(np.asarray(params, dtype=float))
        pts = np.empty((params.size, 2))
        tans = np.empty((params.size, 2))
        seeds = chains.sweep(cfg, signs, left, params, max_sweeps=12)
        for i, (X_i, seed) in enumerate(zip(params, seeds)):
            ch, _ = chains.newton(cfg, seed, left, X_i)
            dx = chains.boundary_sensitivity(cfg, ch, "right")
            pts[i] = (X_i, cfg.s * cfg.sqrt_b * ch[-1])
            tans[i] = unit(np.array([1.0, cfg.s * cfg.sqrt_b * dx[-1]]))
        return pts, tans

    X = np.asarray(X, dtype=float)
    pts, tans = evaluate(X)
    return Curve(pts, tans, X, source if source is not None else {"kind": "unstable-leaf"}, False, evaluate)


def stable_curve(cfg: MapConfig, y, future_signs, target: float, label: str) -> Curve:
    """A stable curve sampled at heights y, parametrised by height."""
    fs = list(future_signs)
    pad = max(cfg.chain_depth - len(fs), 8)
    signs = np.array(fs + [_sign(target)] * pad, dtype=float)
    rb = cfg.s * cfg.sqrt_b

    def evaluate(params):
        params = np.atleast_1d(np.asarray(params, dtype=float))
        pts = np.empty((params.size, 2))
        tans = np.empty((params.size, 2))
        seeds = chains.sweep(cfg, signs, params / rb, target, max_sweeps=12)
        for i, (y_i, seed) in enumerate(zip(params, seeds)):
            ch, _ = chains.newton(cfg, seed, y_i / rb, target)
            dx = chains.boundary_sensitivity(cfg, ch, "left")
            pts[i] = (ch[0], y_i)
            tans[i] = unit(np.array([dx[0] / rb, 1.0]))
        return pts, tans

    y = np.asarray(y, dtype=float)
    pts, tans = evaluate(y)
    return Curve(pts, tans, y, {"kind": "stable", "label": label}, False, evaluate)


# stable direction and critical points


def stable_direction(cfg: MapConfig, z, n_contr: int | None = None, allow_truncate: bool = False) -> np.ndarray:
    """Most contracted direction of Df^n(z): right singular vector of the smallest singular value.

    With ``allow_truncate`` an orbit escaping before n steps uses the
    longest available product (at least one step).
    """
    n = cfg.n_contr if n_contr is None else n_contr
    z = np.asarray(z, dtype=float)
    m = np.eye(2)
    p = z.copy()
    for i in range(n):
        m = jacobian(cfg, p) @ m
        m /= np.max(np.abs(m))
        p = apply(cfg, p)
        if escaped(cfg, p):
            if allow_truncate and i >= 1:
                break
            raise EscapeError(f"orbit escaped at step {i + 1} while computing the stable direction", i + 1)
    # the smallest-singular direction is orthogonal to the dominant row space
    _, _, vt = np.linalg.svd(m)
    v = vt[1]
    return -v if v[1] < 0 else v


@dataclass(frozen=True)
class CriticalPoint:
    zeta: np.ndarray
    tangent: np.ndarray
    param: float
    host: str
    n: float
    w_norms: np.ndarray | None = None

    @property
    def is_tangency(self) -> bool:
        return math.isinf(self.n)


def critical_angle(cfg: MapConfig, points, tangents) -> np.ndarray:
    """Signed angle between Df(z)*tangent and the numerical stable direction at f(z)."""
    points = np.atleast_2d(points)
    tangents = np.atleast_2d(tangents)
    out = np.empty(len(points))
    for i, (z, t) in enumerate(zip(points, tangents)):
        img = jacobian(cfg, z) @ t
        es = stable_direction(cfg, apply(cfg, z), allow_truncate=True)
        out[i] = _signed_angle(img, es)
    return out


def find_critical_points(cfg: MapConfig, curve: Curve, window: float | None = None,
                         tol: float = 1e-10, regions: "RegionSet | None" = None) -> list[CriticalPoint]:
    """Critical points on a curve: zeros of :func:`critical_angle` along the curve.

    Only vertices with |x| < window (default 2 delta) are scanned; roots are
    refined by bisection on the curve parameter until the bracketing points
    are within ``tol``.  A curve crossing the window must carry exactly one.
    """
    if curve.evaluator is None:
        raise GeometryError("critical points need a curve with an exact evaluator")
    w = 2.0 * cfg.delta if window is None else window
    idx = np.flatnonzero(np.abs(curve.vertices[:, 0]) < w)
    if idx.size < 2:
        raise GeometryError("curve does not cross the critical window")
    ang = critical_angle(cfg, curve.vertices[idx], curve.tangents[idx])
    roots = []
    for i in range(idx.size - 1):
        a0, a1 = ang[i], ang[i + 1]
        if idx[i + 1] != idx[i] + 1 or np.sign(a0) == np.sign(a1) or max(abs(a0), abs(a1)) > 1.0:
            continue
        lo, hi = curve.params[idx[i]], curve.params[idx[i + 1]]
        s_lo = np.sign(a0)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            (pm,), (tm,) = curve.evaluator(mid)
            am = critical_angle(cfg, pm, tm)[0]
            if np.sign(am) == s_lo:
                lo = mid
            else:
                hi = mid
            (pl,), _ = curve.evaluator(lo)
            (ph,), _ = curve.evaluator(hi)
            if np.linalg.norm(pl - ph) <= tol:
                break
        (pz,), (tz,) = curve.evaluator(0.5 * (lo + hi))
        roots.append((0.5 * (lo + hi), pz, tz))
    if not roots:
        raise GeometryError("no critical point on the curve")
    if len(roots) > 1:
        raise GeometryError(f"{len(roots)} critical points on one component")
    host = curve.source.get("kind", "curve") + ":" + str(curve.source.get("branch", curve.source.get("label", "")))
    out = []
    for param, pz, tz in roots:
        n = critical_return_time(cfg, pz, regions) if regions is not None else math.nan
        out.append(CriticalPoint(pz, tz, float(param), host, n))
    return out


def critical_return_time(cfg: MapConfig, zeta, regions: "RegionSet") -> float:
    """n(zeta): number of consecutive iterates f zeta, f^2 zeta, ... inside U; +inf for zeta_0."""
    if np.linalg.norm(np.asarray(zeta) - regions.zeta0) <= 1e-9:
        return math.inf
    p = np.asarray(zeta, dtype=float)
    pts = []
    for _ in range(cfg.horizon):
        p = apply(cfg, p)
        if escaped(cfg, p):
            break
        pts.append(p)
    if not pts:
        return 0.0
    inside = regions.in_U(np.array(pts))
    return float(len(pts) if inside.all() else int(np.argmin(inside)))


# regions


_ALPHA = {
    "alpha0-": ((), "Q"),
    "alpha0+": ((1.0,), "Q"),
    "alpha1+": ((), "P"),
    "alpha1-": ((-1.0,), "P"),
}


@dataclass(frozen=True)
class RegionSet:
    """R, S, Theta, I(delta), R_0, R_1, S_1..S_4 and the V_{k,M} neighbourhoods at a = a*.

    Regions are exposed as vectorised membership predicates on points of
    shape (..., 2).  Stable sides and the alpha curves are evaluated in
    graph form (x as a function of y), unstable sides as y over x.
    """

    cfg: MapConfig
    tangency: TangencyResult
    P: Saddle
    Q: Saddle
    zeta0: np.ndarray
    zeta0_tangent: np.ndarray

    # curves
    def alpha_x(self, name: str, y) -> np.ndarray:
        if name.startswith("alpha_tilde_"):
            k = int(name.rsplit("_", 1)[1])
            future, target = (-1.0,) * k, "P"
        else:
            future, target = _ALPHA[name]
        sad = self.P if target == "P" else self.Q
        return stable_x_at(self.cfg, y, future, sad.location[0])

    def upper_y(self, X) -> np.ndarray:
        return unstable_side(self.cfg, X, "upper")

    def lower_y(self, X) -> np.ndarray:
        return unstable_side(self.cfg, X, "lower")

    # predicates
    def in_R(self, z, tol: float = 1e-12) -> np.ndarray:
        """Closed R, widened by ``tol`` (P and Q lie on its boundary)."""
        z = np.asarray(z, dtype=float)
        x, y = z[..., 0], z[..., 1]
        lo, up = self.lower_y(x), self.upper_y(x)
        inside_u = (y >= np.minimum(lo, up) - tol) & (y <= np.maximum(lo, up) + tol)
        inside_s = (x >= self.alpha_x("alpha0-", y) - tol) & (x <= self.alpha_x("alpha0+", y) + tol)
        return inside_u & inside_s

    def _beyond(self, z) -> np.ndarray:
        fz = apply(self.cfg, z)
        return fz[..., 0] > self.alpha_x("alpha0+", fz[..., 1])

    def in_S(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return self.in_R(z) & self._beyond(z)

    def in_theta(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        x, y = z[..., 0], z[..., 1]
        return self.in_R(z) & (x >= self.alpha_x("alpha1-", y)) & (x <= self.alpha_x("alpha1+", y))

    def in_I(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return (np.abs(z[..., 0]) < self.cfg.delta) & (np.abs(z[..., 1]) < self.cfg.b4)

    def in_U(self, z) -> np.ndarray:
        """Tubes of half-width 22 tau around alpha_0^- and alpha_0^+."""
        z = np.asarray(z, dtype=float)
        x, y = z[..., 0], z[..., 1]
        w = 22.0 * self.cfg.tau
        near_y = np.abs(y) <= 2.0 * self.cfg.sqrt_b
        return near_y & ((np.abs(x - self.alpha_x("alpha0-", y)) < w) | (np.abs(x - self.alpha_x("alpha0+", y)) < w))

    def symbol(self, z) -> np.ndarray:
        """0 left of zeta_0, 1 right; -1 within the ambiguity tolerance of zeta_0's abscissa."""
        x = np.asarray(z, dtype=float)[..., 0]
        d = x - self.zeta0[0]
        return np.where(np.abs(d) <= self.cfg.ambiguity_tol, -1, np.where(d < 0, 0, 1))

    def which_R(self, z) -> np.ndarray:
        """0 for R_0, 1 for R_1, -1 outside R or inside S."""
        z = np.asarray(z, dtype=float)
        ok = self.in_R(z) & ~self._beyond(z)
        return np.where(ok, np.where(z[..., 0] < self.zeta0[0], 0, 1), -1)

    def which_S(self, z) -> np.ndarray:
        """Index 1..4 of the transition rectangle containing z, 0 if none."""
        z = np.asarray(z, dtype=float)
        x, y = z[..., 0], z[..., 1]
        r = self.which_R(z)
        left = x < self.alpha_x("alpha1-", y)
        right = x > self.alpha_x("alpha1+", y)
        out = np.where(left, 1, np.where(right, 4, np.where(r == 0, 2, 3)))
        return np.where(r < 0, 0, out)

    def left_of_alpha1_minus(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return z[..., 0] < self.alpha_x("alpha1-", z[..., 1])

    def v_flags(self, points, k: int, M: int | None = None, periodic: bool = True) -> np.ndarray:
        """Membership of orbit points in V_{k,M} = union_{i<=Mk} f^i V~_{2Mk}.

        z is in V~_L iff z, ..., f^{L-1} z all lie left of alpha_1^-, so
        membership is read off the orbit itself, which stays resolvable
        long after V~_L has become thinner than double precision.
        """
        M = self.cfg.M if M is None else M
        pts = np.asarray(points, dtype=float)
        n = len(pts)
        a1 = self.left_of_alpha1_minus(pts)
        L = 2 * M * k
        if periodic:
            reps = (L + M * k) // n + 2
            a1x = np.tile(a1, reps + 1)
        else:
            a1x = a1
        m = a1x.size
        run = np.zeros(m + 1, dtype=int)
        for j in range(m - 1, -1, -1):
            run[j] = run[j + 1] + 1 if a1x[j] else 0
        vt = run[:m] >= L
        off = (reps * n) if periodic else 0
        out = np.zeros(n, dtype=bool)
        for j in range(n):
            jj = j + off
            lo = max(jj - M * k, 0)
            out[j] = bool(np.any(vt[lo:jj + 1]))
        return out

    def check_zeta0(self) -> dict:
        """zeta_0 in I(delta), and R_0, R_1 meet only at zeta_0 (lens apex on the lower side)."""
        X = self.zeta0[0] + np.linspace(-2e-3, 2e-3, 401)
        gap = parabola_y(self.cfg, X) - self.lower_y(X)
        i = int(np.argmin(np.abs(gap)))
        return {
            "zeta0_in_I": bool(self.in_I(self.zeta0)),
            "min_gap": float(np.min(gap)),
            "gap_argmin_x": float(X[i]),
            "contact_offset": float(abs(X[i] - self.zeta0[0])),
        }

    def to_json_dict(self) -> dict:
        c = self.cfg
        return {
            "a_star": self.tangency.a_star,
            "bracket": list(self.tangency.bracket),
            "sign_convention": self.tangency.sign_convention,
            "b": c.b,
            "s": c.s,
            "zeta0": self.zeta0.tolist(),
            "zeta0_tangent": self.zeta0_tangent.tolist(),
            "P": self.P.location.tolist(),
            "Q": self.Q.location.tolist(),
            "eig_u_P": self.P.eig_u,
            "eig_u_Q": self.Q.eig_u,
            "I_delta": [[-c.delta, c.delta], [-c.b4, c.b4]],
            "U_halfwidth": 22.0 * c.tau,
            "tangency_saddle": unstable_saddle(c).label,
            "checks": self.check_zeta0(),
        }

    def boundary_curves(self, n: int = 201) -> dict[str, Curve]:
        """Sides of R and the alpha curves as exportable polylines."""
        c = self.cfg
        xl = float(self.alpha_x("alpha0-", 0.0))
        xr = float(self.alpha_x("alpha0+", 0.0))
        X = np.linspace(xl, xr, n)
        h = 1.5 * c.sqrt_b
        Y = np.linspace(-h, h, n)
        out = {
            "upper": unstable_side_curve(c, X, "upper"),
            "lower": unstable_side_curve(c, X, "lower"),
        }
        for name, (future, target) in _ALPHA.items():
            sad = self.P if target == "P" else self.Q
            out[name] = stable_curve(c, Y, future, sad.location[0], name)
        return out


def build_regions(cfg: MapConfig, tangency: TangencyResult | None = None,
                  a_bracket: tuple[float, float] = (1.9, 2.2)) -> RegionSet:
    """Regions at a = a*; zeta_0 is refined as the critical point of the lower unstable side."""
    t = tangency if tangency is not None else find_first_tangency(cfg, a_bracket)
    c = cfg.replace(a=t.a_star)
    p, q = fixed_saddles(c)
    x0 = float(t.zeta0[0])
    lo = unstable_side_curve(c, x0 + np.linspace(-1e-3, 1e-3, 21), "lower")
    cp = find_critical_points(c, lo)[0]
    if np.linalg.norm(cp.zeta - t.zeta0) > 1e-6:
        raise GeometryError("critical point of the lower side disagrees with the fold apex")
    regions = RegionSet(c, t, p, q, cp.zeta, cp.tangent)
    if not bool(regions.in_I(cp.zeta)):
        raise GeometryError("zeta_0 is outside I(delta)")
    return regions


def curve_csv(curve: Curve) -> str:
    from henon_lab.io import fmt

    lines = ["x,y,tx,ty"]
    for row in curve.rows():
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"
