import math
import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from stokeswaves import PhysicalParams, SpectralGrid, kernel_basis  # noqa: E402

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# criterion number -> (passed, message); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def wilton():
    params = PhysicalParams(1.0, math.inf, 0.5, 0.0)
    grid = SpectralGrid(16)
    return params, grid, kernel_basis(params, grid, -1)


@pytest.fixture(scope="session")
def deep_gravity():
    params = PhysicalParams(1.0, math.inf, 0.0, 0.0)
    grid = SpectralGrid(32)
    return params, grid, kernel_basis(params, grid, 1)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, message = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {message}")
