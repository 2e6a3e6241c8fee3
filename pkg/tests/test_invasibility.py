import numpy as np
import pytest

from adaptdiff.fixation import FixationProblem, solve_fixation
from adaptdiff.invasibility import (ConvergenceError, Invasibility, phi_sequence,
                                    psi_sequence, q_genealogy, slope_integral_primitive,
                                    slope_lambda_closed, slope_lambda_series)
from adaptdiff.population import TwoTypeParams
from adaptdiff.validation import operator_identity_residuals


@pytest.mark.parametrize("bcd", [(1.0, 1.0, 0.0), (0.7, 2.1, 0.4), (2.5, 0.8, 1.3)])
def test_operator_identities(bcd):
    res = operator_identity_residuals(*bcd)
    assert max(res.values()) < 1e-12


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0, 5.0])
def test_sequence_identities(theta):
    assert phi_sequence(theta).identity_residual < 1e-6
    ps = psi_sequence(theta)
    assert max(ps.identity_residuals) < 1e-6
    assert abs(ps.cancellation) < 1e-9


def test_short_recursion_reports_nonconvergence():
    with pytest.raises(ConvergenceError):
        phi_sequence(50.0, k_max=100)


def test_fertility_slope_value():
    assert slope_lambda_closed(1.0, 1.0) == pytest.approx((2 * np.e - 5) / 2, abs=1e-15)
    assert slope_lambda_series(1.0, 1.0) == pytest.approx((2 * np.e - 5) / 2, abs=1e-14)


@pytest.mark.parametrize("b,c", [(1.0, 1.0), (3.0, 1.5)])
def test_slope_routes_agree(b, c):
    inv = Invasibility(b, c)
    for iota in ("lambda", "alpha", "delta"):
        assert inv.slope(iota) == pytest.approx(inv.slope(iota, "series"), abs=1e-8)
    assert inv.slope("delta") == pytest.approx(inv.slope("delta", "integral"), abs=1e-8)
    assert inv.pi_ode_residual() < 1e-6


def test_integral_primitive_small_k():
    from scipy.integrate import quad
    for k in (1, 2, 3):
        ref = quad(lambda u: u ** (k - 1) * (np.exp(u) * (u * u - u + 1) - 1), 0, 1.3)[0]
        assert slope_integral_primitive(1.3, k) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("iota,key", [("lambda", "lam"), ("delta", "delta"), ("alpha", "alpha"),
                                      ("epsilon", "epsilon"), ("sigma", "sigma")])
def test_gradient_factorisation(iota, key):
    h = 1e-5
    u = {}
    for sgn in (1, -1):
        p = TwoTypeParams.from_selection(1.3, 1.0, **{key: sgn * h})
        u[sgn] = solve_fixation(FixationProblem(p, 120), sensitivity=False).u
    fd = (u[1] - u[-1]) / (2 * h)
    inv = Invasibility(1.3, 1.0)
    for n, m in [(1, 1), (2, 3), (5, 2), (4, 6)]:
        cf = inv.v(iota, n, m)
        if cf == 0:
            assert abs(fd[n, m]) < 1e-6
        else:
            assert fd[n, m] == pytest.approx(cf, rel=1e-4)


def test_aggressiveness_equals_survival():
    inv = Invasibility(1.0, 1.0)
    n = np.arange(2, 40)
    assert np.array_equal(inv.g("alpha", n), inv.g("sigma", n))


def test_genealogy_boundary_and_mc():
    h = q_genealogy(1.0, 1.0, n_max=8)
    assert h.q2[2] == 1.0 and h.q3[3] == 1.0
    mc = q_genealogy(1.0, 1.0, n_max=8, method="monte_carlo", replicates=20000, seed=4)
    for n in range(3, 9):
        assert abs(h.q2[n] - mc.q2[n]) <= 4 * mc.q2_se[n]
        if mc.q3_se[n] > 0:
            assert abs(h.q3[n] - mc.q3[n]) <= 4 * mc.q3_se[n]


def test_natural_death_restrictions():
    inv = Invasibility(1.0, 1.0, 0.5)
    assert np.all(np.isfinite(inv.g("lambda", np.arange(2, 10))))
    with pytest.raises(ValueError):
        inv.g("delta", 3)
