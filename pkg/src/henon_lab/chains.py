"""Orbit chains: orbits written as scalar sequences.

With y_n = s sqrt(b) x_{n-1} the map becomes the second-order recurrence

    x_{n+1} = 1 - a x_n^2 + s b x_{n-1},

so an orbit segment is a sequence (x_k) and the point at index k is
z_k = (x_k, s sqrt(b) x_{k-1}).  Prescribing the branch sign of every x_k
and two boundary values turns invariant-manifold points, coded points and
periodic orbits into one boundary value problem.  It is seeded by the
inverse-branch sweep x_k = sign_k sqrt((1 + s b x_{k-1} - x_{k+1}) / a),
which contracts away from the fold, and finished by Newton on the
tridiagonal (or cyclic) residual system.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from henon_lab.config import MapConfig
from henon_lab.errors import NumericalError


def residual(cfg: MapConfig, x, left=None, right=None, periodic=False) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if periodic:
        xl, xr = np.roll(x, 1), np.roll(x, -1)
    else:
        xl = np.concatenate(([left], x[:-1]))
        xr = np.concatenate((x[1:], [right]))
    return xr - 1.0 + cfg.a * x * x - cfg.s * cfg.b * xl


def sweep(cfg: MapConfig, signs, left, right, x=None, max_sweeps: int = 60, tol: float = 0.0):
    """Inverse-branch sweeps, vectorised over a batch of boundary values.

    ``left``/``right`` broadcast to a batch shape B; returns x with shape B + (N,).
    Negative square-root arguments (points past the fold) are clamped to zero.
    """
    signs = np.asarray(signs, dtype=float)
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    batch = np.broadcast_shapes(left.shape, right.shape)
    n = signs.size
    if x is None:
        x = np.broadcast_to(signs * 0.75, batch + (n,)).copy()
    else:
        x = np.array(np.broadcast_to(x, batch + (n,)), dtype=float)
    a, sb = cfg.a, cfg.s * cfg.b
    left = np.broadcast_to(left, batch)
    right = np.broadcast_to(right, batch)
    for _ in range(max_sweeps):
        old = x.copy()
        for k in range(n - 1, -1, -1):
            xl = left if k == 0 else x[..., k - 1]
            xr = right if k == n - 1 else x[..., k + 1]
            arg = (1.0 + sb * xl - xr) / a
            x[..., k] = signs[k] * np.sqrt(np.maximum(arg, 0.0))
        if np.max(np.abs(x - old), initial=0.0) <= tol:
            break
    return x


def sweep_periodic(cfg: MapConfig, signs, x=None, max_sweeps: int = 400, tol: float = 1e-15):
    signs = np.asarray(signs, dtype=float)
    n = signs.size
    x = signs * 0.75 if x is None else np.array(x, dtype=float)
    a, sb = cfg.a, cfg.s * cfg.b
    for _ in range(max_sweeps):
        old = x.copy()
        for k in range(n - 1, -1, -1):
            arg = (1.0 + sb * x[k - 1] - x[(k + 1) % n]) / a
            x[k] = signs[k] * np.sqrt(max(arg, 0.0))
        if np.max(np.abs(x - old)) <= tol:
            break
    return x


def newton(cfg: MapConfig, x, left=None, right=None, periodic=False,
           max_iter: int = 60, tol: float = 1e-15) -> tuple[np.ndarray, float]:
    """Damped Newton on the chain residual.  Returns (x, max |residual|)."""
    x = np.array(x, dtype=float)
    n = x.size
    a, sb = cfg.a, cfg.s * cfg.b
    F = residual(cfg, x, left, right, periodic)
    fn = np.max(np.abs(F))
    for _ in range(max_iter):
        if periodic:
            J = np.diag(2.0 * a * x)
            idx = np.arange(n)
            J[idx, (idx + 1) % n] += 1.0
            J[idx, (idx - 1) % n] -= sb
            try:
                dx = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError as exc:
                raise NumericalError("singular chain Jacobian") from exc
        else:
            ab = np.zeros((3, n))
            ab[0, 1:] = 1.0
            ab[1, :] = 2.0 * a * x
            ab[2, :-1] = -sb
            try:
                dx = solve_banded((1, 1), ab, -F)
            except np.linalg.LinAlgError as exc:
                raise NumericalError("singular chain Jacobian") from exc
        if not np.all(np.isfinite(dx)):
            raise NumericalError("non-finite Newton step")
        step = 1.0
        while True:
            xn = x + step * dx
            Fn = residual(cfg, xn, left, right, periodic)
            fnn = np.max(np.abs(Fn))
            if fnn < fn or step < 1e-6 or fnn <= tol:
                break
            step *= 0.5
        done = np.max(np.abs(step * dx)) <= 1e-15 * max(1.0, np.max(np.abs(x)))
        x, F, fn = xn, Fn, fnn
        if done or fn == 0.0:
            break
    return x, float(fn)


def chain_points(cfg: MapConfig, x, left=None, periodic=False) -> np.ndarray:
    """Points z_k = (x_k, s sqrt(b) x_{k-1}) of a solved chain."""
    x = np.asarray(x, dtype=float)
    if periodic:
        prev = np.roll(x, 1, axis=-1)
    else:
        prev = np.concatenate((np.broadcast_to(np.asarray(left, float)[..., None], x.shape[:-1] + (1,)),
                               x[..., :-1]), axis=-1)
    return np.stack([x, cfg.s * cfg.sqrt_b * prev], axis=-1)


def boundary_sensitivity(cfg: MapConfig, x, side: str = "right") -> np.ndarray:
    """d x / d(boundary value) for a solved open chain (implicit function theorem)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    sb = cfg.s * cfg.b
    ab = np.zeros((3, n))
    ab[0, 1:] = 1.0
    ab[1, :] = 2.0 * cfg.a * x
    ab[2, :-1] = -sb
    rhs = np.zeros(n)
    if side == "right":
        rhs[-1] = -1.0
    else:
        rhs[0] = sb
    return solve_banded((1, 1), ab, rhs)


def linear_gap(cfg: MapConfig, x_up, x_lo, start: int) -> np.ndarray:
    """Difference x_up - x_lo of two open chains sharing the right boundary, without cancellation.

    Entries from ``start`` on satisfy the exact linear recurrence
    d_{k+1} + a (x_up_k + x_lo_k) d_k - s b d_{k-1} = 0 with d_{start-1}
    taken from the direct difference and d_N = 0, so tiny gaps keep full
    relative precision.
    """
    x_up = np.asarray(x_up, dtype=float)
    x_lo = np.asarray(x_lo, dtype=float)
    d0 = x_up[start - 1] - x_lo[start - 1]
    m = x_up.size - start
    if m <= 0:
        return np.array([d0])
    sb = cfg.s * cfg.b
    ab = np.zeros((3, m))
    ab[0, 1:] = 1.0
    ab[1, :] = cfg.a * (x_up[start:] + x_lo[start:])
    ab[2, :-1] = -sb
    rhs = np.zeros(m)
    rhs[0] = sb * d0
    return np.concatenate(([d0], solve_banded((1, 1), ab, rhs)))
