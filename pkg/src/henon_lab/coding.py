"""Symbolic coding of the non-wandering set by the two-symbol shift.

Symbol 0 means left of zeta_0 (the component R_0 containing Q), symbol 1
right of it.  Points are realised as orbit chains whose branch signs follow
the word; because zeta_0 sits slightly off x = 0, the branch sign and the
symbol can disagree for orbits passing very close to the tangency, so every
solution is re-encoded and, if needed, re-solved with adjusted branches.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from henon_lab import chains
from henon_lab.config import MapConfig
from henon_lab.core import apply, escaped, jacobian
from henon_lab.errors import ConfigError, EscapeError, IncompleteEnumerationError, NumericalError
from henon_lab.manifolds import RegionSet, stable_x_at, unstable_side

DEPTH_CAP = 30


@dataclass(frozen=True)
class Word:
    symbols: tuple[int, ...]
    anchor: int = 0
    periodic: bool = False

    def __post_init__(self):
        if not self.symbols:
            raise ConfigError("empty word")
        if any(s not in (0, 1) for s in self.symbols):
            raise ConfigError(f"symbols must be 0 or 1: {self.symbols}")

    @classmethod
    def parse(cls, text: str, periodic: bool = False, anchor: int = 0) -> "Word":
        return cls(tuple(int(c) for c in text.strip()), anchor, periodic)

    def __str__(self) -> str:
        return "".join(map(str, self.symbols))

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def signs(self) -> np.ndarray:
        return np.where(np.array(self.symbols) == 0, -1.0, 1.0)

    def rotate(self, k: int) -> "Word":
        k %= len(self)
        return Word(self.symbols[k:] + self.symbols[:k], self.anchor, self.periodic)

    def canonical(self) -> "Word":
        """Rotation-minimal representative."""
        best = min(self.symbols[k:] + self.symbols[:k] for k in range(len(self)))
        return Word(best, 0, self.periodic)

    @property
    def minimal_period(self) -> int:
        n = len(self)
        for d in range(1, n + 1):
            if n % d == 0 and self.symbols == self.symbols[d:] + self.symbols[:d]:
                return d
        return n

    def longest_zero_block(self) -> int:
        s = str(self) * (2 if self.periodic else 1)
        best = max((len(b) for b in s.split("1")), default=0)
        return min(best, len(self))


@dataclass(frozen=True)
class PeriodicOrbit:
    word: Word
    points: np.ndarray
    multiplier: float
    log_ju: np.ndarray
    residual: float
    ambiguous: bool = False
    branch_signs: tuple[int, ...] = field(default=(), repr=False)

    @property
    def period(self) -> int:
        return len(self.word)

    @property
    def log_multiplier(self) -> float:
        return float(np.sum(self.log_ju))

    @property
    def logJu_sum(self) -> float:
        return self.log_multiplier

    def to_json_dict(self) -> dict:
        return {
            "word": str(self.word),
            "period": self.period,
            "points": self.points.tolist(),
            "multiplier": self.multiplier,
            "logJu_sum": self.log_multiplier,
            "residual": self.residual,
            "ambiguous": self.ambiguous,
        }


def necklaces(n: int) -> list[Word]:
    """Primitive necklaces of length n (rotation-minimal, aperiodic words), sorted."""
    out = []
    for bits in itertools.product((0, 1), repeat=n):
        w = Word(bits, 0, True)
        if w.canonical().symbols == bits and w.minimal_period == n:
            out.append(w)
    return out


# multipliers and unstable directions on periodic orbits


def cycle_unstable(cfg: MapConfig, points) -> tuple[float, np.ndarray, np.ndarray]:
    """Unstable multiplier, per-point unstable directions and per-point log J^u on a cycle.

    The period product is accumulated with rescaling; the top eigenvalue of
    the 2x2 product follows from trace and determinant without cancellation.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    m = np.eye(2)
    logscale = 0.0
    for p in pts:
        m = jacobian(cfg, p) @ m
        s = np.max(np.abs(m))
        m /= s
        logscale += math.log(s)
    tr = m[0, 0] + m[1, 1]
    dt = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = tr * tr - 4.0 * dt
    if disc < 0:
        raise NumericalError("complex multipliers on a periodic orbit")
    big = 0.5 * (tr + math.copysign(math.sqrt(disc), tr))
    # eigenvector for `big`
    r0 = np.array([m[0, 1], big - m[0, 0]])
    r1 = np.array([big - m[1, 1], m[1, 0]])
    v = r0 if np.linalg.norm(r0) >= np.linalg.norm(r1) else r1
    v = v / np.linalg.norm(v)
    dirs = np.empty((n, 2))
    logs = np.empty(n)
    for i, p in enumerate(pts):
        dirs[i] = v
        w = jacobian(cfg, p) @ v
        nw = math.hypot(w[0], w[1])
        logs[i] = math.log(nw)
        v = w / nw
    mult = math.copysign(math.exp(min(logscale + math.log(abs(big)), 700.0)), big)
    return mult, dirs, logs


def _solve_cycle(cfg: MapConfig, signs) -> tuple[np.ndarray, float]:
    x = chains.sweep_periodic(cfg, signs)
    return chains.newton(cfg, x, periodic=True)


def _cycle_points(cfg: MapConfig, x) -> np.ndarray:
    return chains.chain_points(cfg, x, periodic=True)


def shooting_residual(cfg: MapConfig, points) -> float:
    """max_i |f(z_i) - z_{i+1}| around the cycle."""
    pts = np.asarray(points, dtype=float)
    return float(np.max(np.linalg.norm(apply(cfg, pts) - np.roll(pts, -1, axis=0), axis=1)))


def periodic_point(cfg: MapConfig, regions: RegionSet, word: Word | str) -> PeriodicOrbit:
    """The periodic orbit coded by a periodic word, points[0] carrying symbol word[0].

    The chain is first solved with branch signs equal to the word.  If the
    re-encoded itinerary differs (a point lies between x = 0 and zeta_0),
    0-positions nearest the fold are switched to the positive branch, one
    and then two at a time, until the itinerary matches.
    """
    if isinstance(word, str):
        word = Word.parse(word, periodic=True)
    n = len(word)
    if n > max(cfg.n_max, 64):
        raise ConfigError(f"period {n} exceeds the enumeration cap")
    target = np.array(word.symbols)
    base = word.signs
    x, res = _solve_cycle(cfg, base)
    tried = [base]
    if not _matches(regions, x, target):
        zeros = [i for i in range(n) if target[i] == 0]
        zeros.sort(key=lambda i: abs(x[i]))
        near = zeros[: min(6, len(zeros))]
        candidates = [(i,) for i in near] + list(itertools.combinations(near, 2))
        for flip in candidates:
            sg = base.copy()
            sg[list(flip)] = 1.0
            xs, rs = _solve_cycle(cfg, sg)
            tried.append(sg)
            if _matches(regions, xs, target):
                x, res, base = xs, rs, sg
                break
        else:
            raise NumericalError(f"no branch assignment realises the itinerary of {word}")
    pts = _cycle_points(cfg, x)
    if res > cfg.newton_tol * 10 or not np.all(np.isfinite(pts)):
        raise NumericalError(f"Newton failed for {word}: residual {res}")
    mult, _, logs = cycle_unstable(cfg, pts)
    amb = bool(np.any(regions.symbol(pts) < 0))
    return PeriodicOrbit(word, pts, abs(mult), logs, shooting_residual(cfg, pts), amb,
                         tuple(int(v) for v in base))


def _matches(regions: RegionSet, x, target) -> bool:
    if not np.all(np.isfinite(x)):
        return False
    sym = regions.symbol(np.stack([x, np.zeros_like(x)], axis=-1))
    return bool(np.all((sym == target) | (sym < 0)))


def enumerate_periodic(cfg: MapConfig, regions: RegionSet, n: int) -> list[PeriodicOrbit]:
    """One orbit per primitive necklace of every period d dividing n, sorted by (period, word).

    The total number of points must equal 2^n; duplicated point sets and
    failed words raise :class:`IncompleteEnumerationError`.
    """
    if n < 1 or n > cfg.n_max:
        raise ConfigError(f"n must lie in [1, {cfg.n_max}]")
    orbits, missing = [], []
    for d in range(1, n + 1):
        if n % d:
            continue
        for w in necklaces(d):
            try:
                orbits.append(periodic_point(cfg, regions, w))
            except (NumericalError, EscapeError):
                missing.append(str(w))
    seen = {}
    dups = []
    for o in orbits:
        key = tuple(sorted(tuple(np.round(p, 9)) for p in o.points))
        if key in seen:
            dups.append((seen[key], str(o.word)))
        seen[key] = str(o.word)
    count = sum(o.period for o in orbits)
    if missing or dups or count != 2 ** n:
        raise IncompleteEnumerationError(
            f"period {n}: {count} points of {2 ** n}; missing {missing[:10]}, duplicates {dups[:10]}",
            missing=missing)
    return orbits


def fixed_point_count(orbits: list[PeriodicOrbit]) -> int:
    return sum(o.period for o in orbits)


# decode and encode


def decode_chain(cfg: MapConfig, symbols, anchor: int) -> tuple[np.ndarray, float]:
    """Chain for a finite window of symbols (zero boundary values); returns (x, residual)."""
    signs = np.where(np.asarray(symbols) == 0, -1.0, 1.0)
    x = chains.sweep(cfg, signs, 0.0, 0.0, max_sweeps=40)
    x, res = chains.newton(cfg, x, 0.0, 0.0)
    return x, res


def decode(cfg: MapConfig, regions: RegionSet | None, word: Word | str, depth: int = DEPTH_CAP) -> np.ndarray:
    """Approximate pi(omega) for a two-sided word with ``depth`` symbols on each side of the anchor.

    The point is the intersection of the unstable leaf fixed by the past and
    the stable curve fixed by the future, realised as one open chain; the
    truncation error decays like 2^-depth.
    """
    if isinstance(word, str):
        word = Word.parse(word)
    sym = np.array(word.symbols)
    a = word.anchor
    if a < depth or len(sym) - a < depth:
        raise ConfigError(f"word must carry {depth} symbols on each side of the anchor")
    window = sym[a - depth: a + depth]
    x, _ = decode_chain(cfg, window, depth)
    return np.array([x[depth], cfg.s * cfg.sqrt_b * x[depth - 1]])


def encode(cfg: MapConfig, regions: RegionSet, z, n: int) -> tuple[Word, np.ndarray]:
    """Itinerary of z for n steps and a per-step ambiguity flag.

    Raises :class:`EscapeError` once the orbit leaves R (the point is not in K).
    """
    p = np.asarray(z, dtype=float)
    syms, amb = [], []
    for i in range(n):
        if escaped(cfg, p) or not bool(regions.in_R(p, tol=1e-9)):
            raise EscapeError(f"orbit left R at step {i}", i)
        s = int(regions.symbol(p))
        amb.append(s < 0)
        syms.append(0 if s <= 0 else 1)
        p = apply(cfg, p)
    return Word(tuple(syms)), np.array(amb)


def semiconjugacy_residual(cfg: MapConfig, regions: RegionSet | None, rng: np.random.Generator,
                           count: int = 1000, depth: int = DEPTH_CAP) -> np.ndarray:
    """|f(pi(omega)) - pi(sigma omega)| for random words."""
    out = np.empty(count)
    for i in range(count):
        sym = rng.integers(0, 2, size=2 * depth + 1)
        w = Word(tuple(int(v) for v in sym), depth)
        ws = Word(tuple(int(v) for v in sym), depth + 1)
        z = decode(cfg, regions, w, depth)
        zs = decode(cfg, regions, ws, depth)
        out[i] = float(np.linalg.norm(apply(cfg, z) - zs))
    return out


# cylinders


_R_FUTURES = {
    0: ((), (-1.0, 1.0)),      # alpha_0^- and the left arm of the lens
    1: ((1.0, 1.0), (1.0,)),   # right arm of the lens and alpha_0^+
}


def cylinder_boundaries(regions: RegionSet, word: Word | str):
    """Future sign sequences of the left and right stable boundaries of [w_0 ... w_{n-1}]."""
    if isinstance(word, str):
        word = Word.parse(word)
    if len(word) > DEPTH_CAP:
        raise ConfigError(f"cylinder depth {len(word)} exceeds cap {DEPTH_CAP}")
    head = tuple(float(v) for v in word.signs[:-1])
    left_f, right_f = _R_FUTURES[word.symbols[-1]]
    lf, rf = head + left_f, head + right_f
    if _boundary_x(regions, lf, 0.0) > _boundary_x(regions, rf, 0.0):
        lf, rf = rf, lf
    return lf, rf


def _boundary_x(regions: RegionSet, future, y):
    return stable_x_at(regions.cfg, y, future, regions.Q.location[0])


def in_cylinder(regions: RegionSet, word: Word | str, z, tol: float = 1e-12) -> np.ndarray:
    lf, rf = cylinder_boundaries(regions, word)
    z = np.asarray(z, dtype=float)
    y = z[..., 1]
    xl = _boundary_x(regions, lf, y)
    xr = _boundary_x(regions, rf, y)
    return regions.in_R(z, tol) & (z[..., 0] >= np.minimum(xl, xr) - tol) & (z[..., 0] <= np.maximum(xl, xr) + tol)


def cylinder_width(regions: RegionSet, word: Word | str, y: float) -> float:
    lf, rf = cylinder_boundaries(regions, word)
    return float(abs(_boundary_x(regions, rf, y) - _boundary_x(regions, lf, y)))


@dataclass(frozen=True)
class Polygon:
    vertices: np.ndarray
    degenerate: bool

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


def _corner(regions: RegionSet, future, branch: str) -> np.ndarray:
    y = 0.0
    for _ in range(60):
        x = float(_boundary_x(regions, future, y))
        y_new = float(unstable_side(regions.cfg, x, branch))
        if y_new == y:
            break
        y = y_new
    return np.array([x, y])


def cylinder_rectangle(cfg: MapConfig, regions: RegionSet, word: Word | str, m: int = 32) -> Polygon:
    """Polygon approximating the cylinder [w_0 ... w_{n-1}]: a vertical strip of R.

    The left and right sides are stable curves with prescribed futures, the
    bottom and top pieces of the unstable sides of R.
    """
    lf, rf = cylinder_boundaries(regions, word)
    bl, tl = _corner(regions, lf, "lower"), _corner(regions, lf, "upper")
    br, tr = _corner(regions, rf, "lower"), _corner(regions, rf, "upper")
    if tl[1] < bl[1]:
        bl, tl = tl, bl
        br, tr = tr, br
    t = np.linspace(0.0, 1.0, m)
    xb = bl[0] + t * (br[0] - bl[0])
    bottom = np.stack([xb, unstable_side(cfg, xb, "lower" if bl[1] <= tl[1] else "upper")], axis=-1)
    yr = br[1] + t * (tr[1] - br[1])
    right = np.stack([_boundary_x(regions, rf, yr), yr], axis=-1)
    xt = tr[0] + t * (tl[0] - tr[0])
    top = np.stack([xt, unstable_side(cfg, xt, "upper")], axis=-1)
    yl = tl[1] + t * (bl[1] - tl[1])
    left = np.stack([_boundary_x(regions, lf, yl), yl], axis=-1)
    verts = np.vstack([bottom, right[1:], top[1:], left[1:-1]])
    degenerate = bool(np.any(_boundary_x(regions, rf, yr) - _boundary_x(regions, lf, yr) <= 0.0))
    return Polygon(verts, degenerate)


# transition diagram


ALLOWED = {1: {1, 2, 3}, 2: {4}, 3: {4}, 4: {1, 2, 3}}


@dataclass(frozen=True)
class TransitionReport:
    samples: dict
    violations: dict
    escaping: dict
    examples: dict

    def ok(self) -> bool:
        return all(v == 0 for v in self.violations.values())

    def to_json_dict(self) -> dict:
        return {"samples": self.samples, "violations": self.violations, "escaping": self.escaping,
                "examples": self.examples}


def sample_R(regions: RegionSet, rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform samples of R by rejection from its bounding box."""
    c = regions.cfg
    xl = float(regions.alpha_x("alpha0-", 0.0)) - 1e-3
    xr = float(regions.alpha_x("alpha0+", 0.0)) + 1e-3
    h = 1.6 * c.sqrt_b
    out = []
    have = 0
    while have < count:
        m = max(2 * (count - have), 64)
        z = np.stack([rng.uniform(xl, xr, m), rng.uniform(-h, h, m)], axis=-1)
        z = z[regions.in_R(z, tol=0.0)]
        out.append(z)
        have += len(z)
    return np.vstack(out)[:count]


def check_transition_diagram(cfg: MapConfig, regions: RegionSet, samples: int = 10_000,
                             rng: np.random.Generator | None = None, points=None) -> TransitionReport:
    """Count images of S_i-samples that land in a forbidden S_j.

    Samples are uniform in each S_i (or the given ``points``).  Images in
    the lens S or outside R belong to escaping orbits and are tallied
    separately as ``escaping``; they cannot occur for points of K.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    if points is None:
        if samples <= 0:
            return TransitionReport({}, {}, {}, {})
        pools = {i: [] for i in ALLOWED}
        have = {i: 0 for i in ALLOWED}
        for _ in range(200):
            need = max(samples - min(have.values()), 1)
            z = sample_R(regions, rng, max(4 * need, 1000))
            lab = regions.which_S(z)
            for i in ALLOWED:
                zi = z[lab == i][: samples - have[i]]
                pools[i].append(zi)
                have[i] += len(zi)
            if all(have[i] >= samples for i in ALLOWED):
                break
        pools = {i: np.vstack(v) for i, v in pools.items()}
    else:
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            return TransitionReport({}, {}, {}, {})
        lab = regions.which_S(pts)
        pools = {i: pts[lab == i] for i in ALLOWED}
    counts, viol, left, ex = {}, {}, {}, {}
    for i, z in pools.items():
        img = regions.which_S(apply(cfg, z)) if len(z) else np.array([], dtype=int)
        bad = (img > 0) & ~np.isin(img, list(ALLOWED[i]))
        counts[f"S{i}"] = int(len(z))
        viol[f"S{i}"] = int(bad.sum())
        left[f"S{i}"] = int((img == 0).sum())
        ex[f"S{i}"] = z[bad][:5].tolist()
    return TransitionReport(counts, viol, left, ex)


def orbits_csv_rows(orbits: list[PeriodicOrbit]):
    for o in orbits:
        for i, p in enumerate(o.points):
            yield [str(o.word), o.period, i, p[0], p[1], o.multiplier, o.log_multiplier]
