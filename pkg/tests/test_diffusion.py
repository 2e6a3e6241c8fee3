import numpy as np
import pytest

from adaptdiff.diffusion import (DiffusionCoefficients, NumericAbort, biased_ode,
                                 build_coefficients, em_coupled_endpoints, em_ensemble,
                                 euler_maruyama, example_drift, example_noise)
from adaptdiff.population import (AffineBirth, GaussianCompetition, LinearCompetition,
                                  LogisticModel, MutationKernel)


def _constant(drift, scale, dim=1):
    return DiffusionCoefficients(None, "test", lambda X: np.tile(drift, (X.shape[0], 1)),
                                 lambda X: np.full(X.shape[0], scale), np.eye(dim))


def test_no_mutation_no_motion(gaussian_model):
    m = LogisticModel(gaussian_model.birth, gaussian_model.competition,
                      MutationKernel(0.0, gaussian_model.kernel.cov))
    co = build_coefficients(m)
    assert np.all(co.drift([[0.3]]) == 0) and np.all(co.noise_scale([[0.3]]) == 0)


def test_example_formulas():
    m = LogisticModel(AffineBirth(1.0, (0.1,)), GaussianCompetition(1.0, 2.0),
                      MutationKernel.isotropic(0.2, 0.3, 1))
    co = build_coefficients(m)
    for x in (-1.0, 0.0, 2.0):
        b = 1.0 + 0.1 * x
        assert co.drift([[x]])[0, 0] == pytest.approx(example_drift(x, 0.2, 0.3, b, 0.1),
                                                      rel=1e-10)
        assert co.noise([[x]])[0, 0] == pytest.approx(example_noise(x, 0.2, 0.3, b), rel=1e-12)


def test_general_competition_closed_vs_fd():
    m = LogisticModel(AffineBirth(1.5, (0.2,)), LinearCompetition(1.0, (0.1,), (0.05,)),
                      MutationKernel.isotropic(0.3, 0.5, 1))
    a = build_coefficients(m).drift([[0.0]])[0, 0]
    b = build_coefficients(m, "fd_on_solver").drift([[0.0]])[0, 0]
    assert a == pytest.approx(b, rel=1e-5)


def test_zero_coefficients_constant_path():
    p = euler_maruyama(_constant([0.0], 0.0), [1.5], 0.01, 1.0, rng=1)
    assert np.all(p.states == 1.5) and p.times[-1] == pytest.approx(1.0)


def test_constant_coefficients_gaussian_law():
    Z = em_ensemble(_constant([0.3], 0.7), [0.0], 0.01, 2.0, 10000, rng=2)[:, -1, 0]
    se_m = np.sqrt(0.49 * 2.0 / Z.size)
    assert abs(Z.mean() - 0.6) <= 3 * se_m
    se_v = 0.98 * np.sqrt(2.0 / (Z.size - 1))
    assert abs(Z.var(ddof=1) - 0.98) <= 3 * se_v


def test_strong_order(gaussian_model):
    co = build_coefficients(gaussian_model)
    errs = []
    for dt in (0.04, 0.02, 0.01):
        c, f = em_coupled_endpoints(co, [0.0], dt, 1.0, 2000, rng=3)
        errs.append(np.sqrt(np.mean((c - f) ** 2)))
    assert errs[0] > errs[1] > errs[2]
    assert np.log(errs[0] / errs[2]) / np.log(4.0) >= 0.4


def test_blowup_aborts():
    co = _constant([1e8], 0.0)
    with pytest.raises(NumericAbort):
        euler_maruyama(co, [0.0], 0.1, 1.0, rng=1)


def test_biased_ode():
    m = LogisticModel(AffineBirth(1.0, (0.0,)), GaussianCompetition(1.0, 1.0),
                      MutationKernel(0.1, np.eye(1) * 0.01, mean=[0.05]))
    t, z = biased_ode(m, [0.0], 0.01, 2.0)
    rate = 0.1 * 1.0 * 1.0 / (1 - np.exp(-1.0)) * np.exp(-1.0)
    assert z[-1, 0] == pytest.approx(rate * 0.05 * 2.0, rel=1e-10)


def test_identity_guard(gaussian_model):
    co = build_coefficients(gaussian_model)
    with pytest.raises(NumericAbort):
        co.noise_scale([[-10.0]])   # birth rate negative there
