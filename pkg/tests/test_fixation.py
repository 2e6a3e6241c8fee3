import numpy as np
import pytest

from adaptdiff.fixation import (FixationProblem, TruncationError, apply_harmonic,
                                chi_gradient_fd, default_n_max, fixation_probability,
                                invasion_fitness, mc_fixation, model_fitness,
                                neutral_invasion_fitness, solve_fixation)
from adaptdiff.invasibility import Invasibility
from adaptdiff.population import TwoTypeParams

from conftest import within


def test_neutral_solution_is_frequency():
    t = solve_fixation(FixationProblem(TwoTypeParams.neutral(1.0, 1.0), 60), sensitivity=False)
    for s in range(1, 30):
        for m in range(0, s + 1):
            assert t.u[s - m, m] == pytest.approx(m / s, abs=1e-12)


def test_harmonic_residual_and_boundary():
    p = TwoTypeParams.from_selection(1.5, 1.0, 0.2, lam=0.1, delta=0.05)
    t = solve_fixation(FixationProblem(p, 50), sensitivity=False)
    assert np.nanmax(np.abs(apply_harmonic(p, t.u))) < 1e-10
    assert np.all(t.u[1:, 0] == 0.0) and np.all(t.u[0, 1:] == 1.0)


def test_truncation_sensitivity_small():
    p = TwoTypeParams.from_selection(1.0, 1.0, lam=0.3)
    t = solve_fixation(FixationProblem(p, 80), requested=20)
    assert t.sensitivity < 1e-10


def test_truncation_error_raised():
    p = TwoTypeParams.from_selection(20.0, 1.0, lam=0.3)
    with pytest.raises(TruncationError):
        solve_fixation(FixationProblem(p, 24), requested=20, max_sensitivity=1e-14)


def test_solver_matches_monte_carlo():
    p = TwoTypeParams.from_selection(1.0, 1.0, lam=0.4, alpha=0.2)
    u = fixation_probability(p, 3, 1)
    est, se = mc_fixation(p, 3, 1, 20000, seed=11)
    assert within(est, u, se)


@pytest.mark.parametrize("theta", [0.5, 1.0, 4.0])
def test_neutral_invasion_fitness(theta):
    p = TwoTypeParams.neutral(theta, 1.0)
    t = solve_fixation(FixationProblem(p, default_n_max(theta)), sensitivity=False)
    assert invasion_fitness(theta, t.column(1)) == pytest.approx(
        neutral_invasion_fitness(theta), abs=1e-10)


def test_invasion_fitness_rejects_short_column():
    with pytest.raises(ValueError):
        invasion_fitness(5.0, np.full(5, 0.1))


def test_fitness_gradient_matches_closed_form(gaussian_model):
    fd = chi_gradient_fd(gaussian_model, [0.3], [1.0])
    inv = Invasibility(gaussian_model.birth([0.3]), 1.0)
    cf = inv.grad2_chi([0.5], [0.0], [0.0])[0]
    assert fd.richardson == pytest.approx(cf, rel=1e-6)
    assert model_fitness(gaussian_model, [0.3], [0.3]) == pytest.approx(
        neutral_invasion_fitness(gaussian_model.theta([0.3])), abs=1e-10)
