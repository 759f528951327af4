import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from henon_lab import MapConfig
from henon_lab.binding import critical_cocycle
from henon_lab.coding import enumerate_periodic
from henon_lab.manifolds import build_regions

settings.register_profile(
    "lab",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("lab")

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def cfg():
    return MapConfig(b=1e-4)


@pytest.fixture(scope="session")
def regions(cfg):
    return build_regions(cfg)


@pytest.fixture(scope="session")
def rcfg(regions):
    """Configuration at a = a*(1e-4)."""
    return regions.cfg


@pytest.fixture(scope="session")
def regions_b2():
    return build_regions(MapConfig(b=1e-2))


@pytest.fixture(scope="session")
def orbits12(regions):
    return enumerate_periodic(regions.cfg, regions, 12)


@pytest.fixture(scope="session")
def cc0(regions):
    return critical_cocycle(regions.cfg, regions)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


LOG2 = math.log(2.0)
LOG4 = math.log(4.0)
