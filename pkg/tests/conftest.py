import math

import numpy as np
import pytest
from hypothesis import settings

from levyfilter.levy import StableParams
from levyfilter.operator import Grid1D, double_well

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

EX_ALPHA = 1.5
EX_EPS = math.sqrt(0.24)


@pytest.fixture(scope="session")
def example_grid():
    return Grid1D.from_spacing(-2.5, 2.5, 0.05)


@pytest.fixture(scope="session")
def example_params():
    return StableParams(EX_ALPHA, EX_EPS)


@pytest.fixture(scope="session")
def dw():
    return double_well()


def l1(grid, a, b):
    return grid.dx * float(np.abs(np.asarray(a) - np.asarray(b)).sum())


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one 'criterion: PASS/FAIL detail' line, printed in the terminal summary."""
    def record(criterion, ok, detail):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
