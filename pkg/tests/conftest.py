import numpy as np
import pytest

from mristab.fixtures import keplerian, rigid
from mristab.operators import make_grid


@pytest.fixture(scope="session")
def grid200():
    return make_grid(1.0, 2.0, 200)


@pytest.fixture(scope="session")
def grid400():
    return make_grid(1.0, 2.0, 400)


@pytest.fixture(scope="session")
def kep():
    return keplerian(0.05)


@pytest.fixture(scope="session")
def rig():
    return rigid(0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(lines[key])
