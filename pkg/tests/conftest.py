import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from omsense.params import at_stiffness, paper_params

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

PI = math.pi


@pytest.fixture
def base():
    """Sensing operating point: g/2pi = 1 Hz, kappa = 2e-3 Gamma, 8.06 mW."""
    return paper_params()


@pytest.fixture
def strong():
    """Same point with g/2pi = 3 Hz."""
    return paper_params(g=2 * PI * 3)


@pytest.fixture
def soft_strong():
    """g/2pi = 3 Hz statics at Gamma/omega_m = 50 (chi unchanged)."""
    return at_stiffness(paper_params(g=2 * PI * 3), 50.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(tag, ok, text)``."""

    def add(tag, ok, text):
        line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {text}"
        _ACCEPTANCE.append(line)
        return ok

    return add


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
