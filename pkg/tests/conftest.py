import json
from pathlib import Path

import numpy as np
import pytest

from awm.core import CanonicalDensity
from awm.solver import solve_steady_subcritical

DATA = Path(__file__).parent / "data"

# filled by the acceptance module, printed at the end of the run
ACCEPTANCE_LINES: dict = {}


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text())


@pytest.fixture(scope="session")
def eysm_016():
    return solve_steady_subcritical(0.016, 0.0)


@pytest.fixture(scope="session")
def eysm_05():
    return solve_steady_subcritical(0.05, 0.0)


@pytest.fixture(scope="session")
def sub_006_003():
    return solve_steady_subcritical(0.06, 0.03)


def uniform_density(lo=0.0, hi=2.0, n=2001):
    g = np.linspace(lo, hi, n)
    return CanonicalDensity(g, np.full(n, 1.0 / (hi - lo)))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
