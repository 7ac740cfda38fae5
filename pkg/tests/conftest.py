import numpy as np
import pytest

from coorbit_kit.setups import signal_suite, similitude_1d

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def sim():
    """1D similitude scenario: N = 1024, spacing 1/32, window on 1 <= |xi| <= 2, 2048 Haar samples."""
    return similitude_1d(n=1024, n_samples=2048)


@pytest.fixture(scope="session")
def sim_small():
    return similitude_1d(n=512, n_samples=1024)


@pytest.fixture(scope="session")
def suite(sim):
    return signal_suite(sim.grid, 20, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
