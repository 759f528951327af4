"""Numerical laboratory for the strongly dissipative Hénon map at its first bifurcation."""

from henon_lab.config import MapConfig
from henon_lab.errors import (
    ConfigError,
    EscapeError,
    GeometryError,
    IncompleteEnumerationError,
    LabError,
    NumericalError,
)

__all__ = [
    "MapConfig",
    "LabError",
    "ConfigError",
    "NumericalError",
    "GeometryError",
    "EscapeError",
    "IncompleteEnumerationError",
]

__version__ = "0.1.0"
