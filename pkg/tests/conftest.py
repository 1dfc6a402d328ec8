import numpy as np
import pytest

from toricscaling.lattice import ToricLattice


@pytest.fixture(params=[3, 5, 7])
def lattice(request):
    return ToricLattice(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from _acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
