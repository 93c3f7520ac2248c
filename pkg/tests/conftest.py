import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from setfront.systems import catalog

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def scenarios():
    return catalog()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def radial_fixed_point(lam=0.5, a=0.1, eps=0.25):
    """Root of r = r (lam + a r^2) + eps found by bisection on [0, 1]."""
    g = lambda r: r * (lam + a * r * r) + eps - r
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(lo) * g(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


R_STAR = radial_fixed_point()
RADIAL_NORMAL_RATE = math.log(0.5 + 3 * 0.1 * R_STAR**2)


ACCEPTANCE_LINES = []


def record_acceptance(criterion, passed, detail):
    """Print and remember one acceptance line; returns ``passed``."""
    line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
