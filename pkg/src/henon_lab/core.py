"""The Hénon family, its inverse, derivative cocycles and the two fixed saddles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from henon_lab.config import MapConfig
from henon_lab.errors import ConfigError, EscapeError, NumericalError

def apply(cfg: MapConfig, z):
    z = np.asarray(z, dtype=float)
    x, y = z[..., 0], z[..., 1]
    rb = cfg.sqrt_b
    return np.stack([1.0 - cfg.a * x * x + rb * y, cfg.s * rb * x], axis=-1)


def apply_inverse(cfg: MapConfig, z):
    if cfg.b <= 0.0:
        raise ConfigError("the map is not invertible at b = 0")
    z = np.asarray(z, dtype=float)
    xp, yp = z[..., 0], z[..., 1]
    rb = cfg.sqrt_b
    x = yp / (cfg.s * rb)
    return np.stack([x, (xp - 1.0 + cfg.a * x * x) / rb], axis=-1)


def jacobian(cfg: MapConfig, z) -> np.ndarray:
    """Df(z) = [[-2 a x, sqrt(b)], [s sqrt(b), 0]]; shape (..., 2, 2)."""
    z = np.asarray(z, dtype=float)
    x = z[..., 0]
    rb = cfg.sqrt_b
    out = np.empty(x.shape + (2, 2))
    out[..., 0, 0] = -2.0 * cfg.a * x
    out[..., 0, 1] = rb
    out[..., 1, 0] = cfg.s * rb
    out[..., 1, 1] = 0.0
    return out


def det(m) -> float:
    m = np.asarray(m, dtype=float)
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def op_norm(m) -> float:
    return float(np.linalg.norm(np.asarray(m, dtype=float), 2))


def slope(v) -> float:
    """|v_y / v_x|; +inf for vertical vectors."""
    vx, vy = float(v[0]), float(v[1])
    return math.inf if vx == 0.0 else abs(vy / vx)


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def angle_between(u, v) -> float:
    """Angle between the lines spanned by u and v, in [0, pi/2]."""
    u, v = unit(u), unit(v)
    c = abs(float(u[0] * v[0] + u[1] * v[1]))
    s = abs(float(u[0] * v[1] - u[1] * v[0]))
    return math.atan2(s, c)


def escaped(cfg: MapConfig, z) -> bool:
    z = np.asarray(z, dtype=float)
    return not (np.all(np.isfinite(z)) and np.all(np.abs(z) <= cfg.escape_box))


def orbit(cfg: MapConfig, z, n: int) -> np.ndarray:
    """Points z, f z, ..., f^n z (n >= 0) or z, f^-1 z, ... (n < 0); raises on escape."""
    step = apply if n >= 0 else apply_inverse
    pts = np.empty((abs(n) + 1, 2))
    pts[0] = z
    for i in range(abs(n)):
        pts[i + 1] = step(cfg, pts[i])
        if escaped(cfg, pts[i + 1]):
            raise EscapeError(f"orbit left [-{cfg.escape_box}, {cfg.escape_box}]^2 at step {i + 1}", i + 1)
    return pts


def cocycle(cfg: MapConfig, z, n: int) -> np.ndarray:
    """Df^n(z) for signed n, as an ordered product of Jacobians along the orbit.

    Negative n gives Df^{n}(z) = (Df^{|n|}(f^{n} z))^{-1}.  Entries grow like
    4^|n|, so |n| is capped at the configured horizon; longer products go
    through :func:`push_vector`.
    """
    if abs(n) > cfg.horizon:
        raise NumericalError(f"|n| = {abs(n)} exceeds cocycle horizon {cfg.horizon}")
    if n == 0:
        return np.eye(2)
    if n > 0:
        pts = orbit(cfg, z, n)
        m = np.eye(2)
        for p in pts[:-1]:
            m = jacobian(cfg, p) @ m
        return m
    pts = orbit(cfg, z, n)
    m = np.eye(2)
    for p in pts[1:]:
        m = m @ jacobian(cfg, p)
    return np.linalg.inv(m)


def push_vector(cfg: MapConfig, points, v) -> tuple[np.ndarray, float, np.ndarray]:
    """Push v along the orbit segment ``points[0] -> points[-1]`` with per-step normalisation.

    Returns (unit image vector, log of the norm growth, per-step log growths).
    Overflow-safe for any length.
    """
    v = unit(v)
    logs = np.empty(len(points) - 1)
    for i, p in enumerate(points[:-1]):
        w = jacobian(cfg, p) @ v
        nw = math.hypot(w[0], w[1])
        logs[i] = math.log(nw)
        v = w / nw
    return v, float(logs.sum()), logs


@dataclass(frozen=True)
class Saddle:
    label: str
    location: np.ndarray
    eig_u: float
    eig_s: float
    vec_u: np.ndarray
    vec_s: np.ndarray

    @property
    def log_multiplier(self) -> float:
        return math.log(abs(self.eig_u))


def _eig_data(cfg: MapConfig, z) -> tuple[float, float, np.ndarray, np.ndarray]:
    J = jacobian(cfg, z)
    tr = J[0, 0] + J[1, 1]
    dt = det(J)
    disc = tr * tr - 4.0 * dt
    if disc <= 0.0:
        raise NumericalError("fixed point is not a saddle (complex eigenvalues)")
    r = math.sqrt(disc)
    # avoid cancellation for the small root
    big = 0.5 * (tr + math.copysign(r, tr))
    small = dt / big if big != 0.0 else 0.0
    vecs = []
    for lam in (big, small):
        # (J - lam I) v = 0 using the first row: (J00 - lam) v0 + J01 v1 = 0
        v = np.array([J[0, 1], lam - J[0, 0]])
        if abs(v[0]) + abs(v[1]) == 0.0:
            v = np.array([lam - J[1, 1], J[1, 0]])
        v = unit(v)
        if v[0] < 0 or (v[0] == 0 and v[1] < 0):
            v = -v
        vecs.append(v)
    if not (abs(big) > 1.0 > abs(small)):
        raise NumericalError(f"fixed point is not a saddle: eigenvalues {big}, {small}")
    return big, small, vecs[0], vecs[1]


def fixed_saddles(cfg: MapConfig) -> tuple[Saddle, Saddle]:
    """The saddles P (near (1/2, 0)) and Q (near (-1, 0)) from a x^2 + (1 - s b) x - 1 = 0."""
    a, c = cfg.a, 1.0 - cfg.s * cfg.b
    if a <= 0.0:
        raise NumericalError("no saddle pair for a <= 0")
    disc = c * c + 4.0 * a
    if disc < 0.0:
        raise NumericalError("complex fixed points: no saddles")
    r = math.sqrt(disc)
    xq = (-c - r) / (2.0 * a)
    xp = -1.0 / (a * xq)  # product of the roots is -1/a
    out = []
    for label, x in (("P", xp), ("Q", xq)):
        loc = np.array([x, cfg.s * cfg.sqrt_b * x])
        eu, es, vu, vs = _eig_data(cfg, loc)
        out.append(Saddle(label, loc, float(eu), float(es), vu, vs))
    return out[0], out[1]


def unstable_saddle(cfg: MapConfig) -> Saddle:
    """The saddle whose unstable manifold carries the tangency: Q if orientation preserving, else P."""
    p, q = fixed_saddles(cfg)
    return q if orientation_preserving(cfg) else p


def orientation_preserving(cfg: MapConfig) -> bool:
    # det Df = -s b
    return cfg.s == -1
