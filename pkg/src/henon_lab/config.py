"""Experiment configuration."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from typing import Any, Mapping

from henon_lab.errors import ConfigError


@dataclass(frozen=True)
class MapConfig:
    """Parameters fixing one experiment on f(x, y) = (1 - a x^2 + sqrt(b) y, s sqrt(b) x).

    ``tau`` defaults to the largest value allowed by the binding-scale
    constraint, ``(sigma / 100) log 2``.  ``b = 0`` is accepted only for
    Chebyshev-limit cross-checks; the inverse map is then unavailable.
    """

    a: float = 2.0
    b: float = 1e-4
    s: int = 1
    eps: float = 0.1
    delta: float = 0.05
    tau: float | None = None

    horizon: int = 60
    binding_horizon: int = 120
    chain_depth: int = 48
    n_max: int = 14
    escape_box: float = 3.0
    fixed_point_tol: float = 1e-12
    newton_tol: float = 1e-13
    angle_tol: float = 1e-8
    ambiguity_tol: float = 1e-9
    max_spacing: float = 1e-3
    turn_cap: float = 1e-2
    n_back: int = 30
    n_contr: int = 20
    M: int = 4
    k_max: int = 6
    approx_constant: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.b < 1.0):
            raise ConfigError(f"b must lie in [0, 1), got {self.b}")
        if self.s not in (1, -1):
            raise ConfigError(f"s must be +1 or -1, got {self.s}")
        if not (0.0 < self.eps < 1.0):
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if not (0.0 < self.delta < 1.0):
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if not math.isfinite(self.a):
            raise ConfigError("a must be finite")
        tau_max = (self.sigma / 100.0) * math.log(2.0)
        if self.tau is None:
            object.__setattr__(self, "tau", tau_max)
        elif not (0.0 < self.tau <= tau_max * (1 + 1e-15)):
            raise ConfigError(f"tau must lie in (0, {tau_max}], got {self.tau}")
        if self.horizon < 1 or self.binding_horizon < 1 or self.chain_depth < 4:
            raise ConfigError("horizons must be positive")

    # derived constants
    @property
    def sqrt_b(self) -> float:
        return math.sqrt(self.b)

    @property
    def sigma(self) -> float:
        return 2.0 - self.eps / 2.0

    @property
    def lambda1(self) -> float:
        return 4.0 - self.eps / 2.0

    @property
    def lambda2(self) -> float:
        return 4.0 + self.eps / 2.0

    @property
    def beta(self) -> float:
        if self.b <= 0.0:
            raise ConfigError("beta = 2/log(1/b) needs b > 0")
        return 2.0 / math.log(1.0 / self.b)

    @property
    def b4(self) -> float:
        """b^(1/4): slope/curvature cap of C^2(b)-curves and half-height of I(delta)."""
        return self.b ** 0.25

    @property
    def log_floor(self) -> float:
        """(1/2) log(4 - eps)."""
        return 0.5 * math.log(4.0 - self.eps)

    def replace(self, **changes) -> "MapConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "MapConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in data.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, raw, known[key].type)
        return cls(**kwargs)


def _coerce(key: str, raw: Any, typ: Any) -> Any:
    if raw is None or (isinstance(raw, str) and raw.strip().lower() == "none"):
        return None
    typ = str(typ)
    try:
        if typ.startswith("int"):
            return int(raw)
        return float(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config_text(text: str) -> dict[str, str]:
    """Parse the flat ``key = value`` format; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def format_config_text(cfg: MapConfig) -> str:
    return "".join(f"{k} = {v!r}\n" for k, v in cfg.to_dict().items())
