import numpy as np
import pytest

from adaptdiff.population import (AffineBirth, ConstantCompetition, GaussianCompetition,
                                  LogisticModel, MutationKernel)

# filled by test_acceptance; echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def slope_model():
    """b(x) = 1 + 0.1 x, constant competition."""
    return LogisticModel(AffineBirth(1.0, (0.1,)), ConstantCompetition(1.0),
                         MutationKernel.isotropic(0.1, 0.1, 1))


@pytest.fixture
def gaussian_model():
    """b(x) = 2 + 0.5 x, symmetric Gaussian competition."""
    return LogisticModel(AffineBirth(2.0, (0.5,)), GaussianCompetition(1.0, 1.0),
                         MutationKernel.isotropic(0.5, 1.0, 1))


def within(a, b, se, k=4.0):
    return abs(a - b) <= k * se + 1e-15


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
