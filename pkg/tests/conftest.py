import math

import numpy as np
import pytest

from tauberian import operators as ops
from tauberian.rates import Tabulated


@pytest.fixture
def inverse_floor_rate():
    """Tabulated max(1, 1/eps) on a dyadic grid (the floor 1/eps is exact in log-log)."""
    grid = [math.pi * 2.0**-j for j in range(45)] + [1.0]
    return Tabulated.from_function(lambda e: max(1.0, 1.0 / e), grid)


@pytest.fixture(scope="session")
def linear_spectrum():
    n = 10**4
    return ops.Diagonal(1.0 - np.arange(1, n + 1) / n)


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[key])
