import json
from pathlib import Path

import numpy as np
import pytest

from fracdiff.grid import SpatialGrid, make_gaussian

ORACLES = json.loads((Path(__file__).parent / "oracles" / "oracles.json").read_text())


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


@pytest.fixture(scope="session")
def grid512():
    return SpatialGrid(1, 512, 60.0)


@pytest.fixture(scope="session")
def gauss512(grid512):
    return make_gaussian(grid512, 0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
