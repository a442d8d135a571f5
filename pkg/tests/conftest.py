import sys

import pytest

from bpre.environment import EnvironmentModel
from bpre.offspring import Geometric1, TwoPoint


@pytest.fixture
def geo_env():
    """Equal-weight mixture of Geometric1(0.3) and Geometric1(0.6)."""
    return EnvironmentModel(((Geometric1(0.3), 0.5), (Geometric1(0.6), 0.5)))


@pytest.fixture
def doubling_env():
    """Every particle has exactly two children."""
    return EnvironmentModel.single(TwoPoint(2, 1.0))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
