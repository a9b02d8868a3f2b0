import sys

import numpy as np
import pytest

from msns.geometry import DomainSpec, GridSpec
from msns.state import FluidParams


@pytest.fixture
def domain():
    return DomainSpec()


@pytest.fixture
def params():
    return FluidParams()


@pytest.fixture
def grid16(domain):
    return GridSpec(domain, 16, 8, 8)


@pytest.fixture
def grid32(domain):
    return GridSpec(domain, 32, 16, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
