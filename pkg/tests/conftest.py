import numpy as np
import pytest

from ssmma.kernels import (GridSpec, make_dissipative_synthetic, make_mixed_lfsm,
                           make_periodic_example)

# Values from an independent mpmath quadrature (30 digits), alpha=1.5, H=0.5, t=1.
LFSM_F1_ONLY = 1.56325617592572709506
LFSM_F1_1_F2_2 = 2.33729497036578872374
PERIODIC_T1 = 8.31558125880790845404
DISSIPATIVE_HOPF_RATIO = 0.47264174753952431299


@pytest.fixture(scope="session")
def lfsm():
    return make_mixed_lfsm(1.0, 2.0, 1.5, 0.5)


@pytest.fixture(scope="session")
def periodic():
    return make_periodic_example(1.5, 0.5)


@pytest.fixture(scope="session")
def dissipative():
    return make_dissipative_synthetic(1.5, 0.5)


@pytest.fixture
def grid_for():
    def make(kernel, n=8, **kw):
        return GridSpec.for_kernel(kernel, n, **kw)
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one PASS/FAIL line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
