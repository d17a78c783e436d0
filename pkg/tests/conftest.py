import numpy as np
import pytest

from nlspeaks.ground_state import coupled_amplitudes, solve_ground_state
from nlspeaks.potentials import builtin_potential, constant_potential


@pytest.fixture(scope="session")
def gs():
    return solve_ground_state(1.0)


@pytest.fixture(scope="session")
def flat():
    return constant_potential(), constant_potential()


@pytest.fixture(scope="session")
def default_pots():
    p = builtin_potential()
    return p, p


@pytest.fixture(scope="session")
def amp_half():
    return coupled_amplitudes(1.0, 1.0, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
