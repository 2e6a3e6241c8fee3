"""Canonical diffusion of adaptive dynamics and the biased-mutation ODE.

The small-step limit of the trait substitution sequence solves

    dZ = beta(Z) Sigma(Z) grad_2 chi(Z, Z) dt + sqrt(beta(Z) chi(Z, Z)) Sigma(Z)^(1/2) dB

with ``Sigma`` the mutation-step covariance.  For logistic populations
``grad_2 chi`` has a closed form in terms of the adaptive slopes; for the
shipped competition families (constant, symmetric Gaussian) only the
fertility slope contributes and drift and noise are vectorised.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .fixation import chi_gradient_fd, neutral_invasion_fitness
from .invasibility import Invasibility, slope_lambda_closed
from .population import (ConstantCompetition, GaussianCompetition, LinearCompetition,
                         LogisticModel)
from .rng import as_generator

__all__ = [
    "NumericAbort",
    "BLOWUP",
    "DiffusionCoefficients",
    "DiffusionPath",
    "build_coefficients",
    "euler_maruyama",
    "em_ensemble",
    "em_coupled_endpoints",
    "biased_ode",
    "example_drift",
    "example_noise",
]

BLOWUP = 1e6


class NumericAbort(RuntimeError):
    """Non-finite or exploding state, or an inconsistent coefficient identity."""


def _diag_c(comp, X):
    """``c(x, x)`` for each row of ``X``."""
    if isinstance(comp, ConstantCompetition):
        return np.full(X.shape[0], comp.value)
    if isinstance(comp, GaussianCompetition):
        return np.full(X.shape[0], comp.scale)
    if isinstance(comp, LinearCompetition):
        return comp.base + X @ (np.asarray(comp.g1, float) + np.asarray(comp.g2, float))
    return np.array([comp(x, x) for x in X])


def _c_gradients_vanish(comp):
    return isinstance(comp, (ConstantCompetition, GaussianCompetition))


@dataclass
class DiffusionCoefficients:
    """Drift and noise of the canonical diffusion.

    ``drift(X)`` maps an ``(P, k)`` array to ``(P, k)``; ``noise_scale(X)``
    returns the scalar ``sqrt(beta chi)`` per row, the full noise matrix
    being ``noise_scale * sqrt_cov``.
    """
    model: LogisticModel
    source: str
    drift_fn: Callable
    scale_fn: Callable
    sqrt_cov: np.ndarray

    def drift(self, X):
        return self.drift_fn(np.atleast_2d(np.asarray(X, float)))

    def noise_scale(self, X):
        return self.scale_fn(np.atleast_2d(np.asarray(X, float)))

    def noise(self, x):
        """Noise matrix at a single point."""
        return float(self.noise_scale(x)[0]) * self.sqrt_cov


def _beta_chi(model, X):
    b = model.birth.base + X @ np.asarray(model.birth.gradient, float)
    c = _diag_c(model.competition, X)
    theta = b / c
    beta = model.kernel.mu * b * theta / (-np.expm1(-theta))
    chi = neutral_invasion_fitness(theta)
    return b, c, theta, beta, chi


def build_coefficients(model: LogisticModel, source: str = "closed_form", k_max: int = 10_000,
                       fd_step: float = 1e-4, identity_tol: float = 1e-10
                       ) -> DiffusionCoefficients:
    """Assemble drift and noise of the canonical diffusion for ``model``.

    Parameters
    ----------
    source : {"closed_form", "fd_on_solver"}
        Where ``grad_2 chi(x, x)`` comes from: adaptive slopes, or central
        finite differences of the solver-based fitness (per point, slow).

    Raises
    ------
    NumericAbort
        If ``beta chi`` and ``mu c (theta / (1 - e^-theta) - 1)`` differ by
        more than ``identity_tol`` (relative) at any evaluated point.
    """
    if model.natural_death != 0:
        raise ValueError("closed forms require no natural death")
    if source not in ("closed_form", "fd_on_solver"):
        raise ValueError(f"unknown slope source {source!r}")
    cov = model.kernel.cov
    sqrt_cov = model.kernel.sqrt_cov
    gb = np.asarray(model.birth.gradient, float)
    mu = model.kernel.mu

    def scale(X):
        b, c, theta, beta, chi = _beta_chi(model, X)
        if np.any(b <= 0) or np.any(c <= 0):
            raise NumericAbort("birth or competition rate not positive")
        bc = beta * chi
        ref = mu * c * (theta / (-np.expm1(-theta)) - 1.0)
        if np.any(np.abs(bc - ref) > identity_tol * np.maximum(np.abs(ref), 1e-300)):
            raise NumericAbort("coefficient identity violated")
        return np.sqrt(bc)

    if source == "closed_form" and _c_gradients_vanish(model.competition):
        def drift(X):
            b, c, theta, beta, chi = _beta_chi(model, X)
            a_lam = slope_lambda_closed(theta, b)
            g2chi = np.exp(-theta)[:, None] * a_lam[:, None] * gb[None, :]
            return beta[:, None] * (g2chi @ cov.T)
    else:
        def point(x):
            b, c, theta, beta, chi = _beta_chi(model, x[None, :])
            if source == "closed_form":
                inv = Invasibility(b[0], c[0], 0.0, k_max=k_max)
                g = inv.grad2_chi(model.birth.grad(x), model.competition.grad1(x),
                                  model.competition.grad2(x))
            else:
                g = np.array([chi_gradient_fd(model, x, e, step=fd_step).richardson
                              for e in np.eye(model.dim)])
            return beta[0] * (cov @ g)

        def drift(X):
            return np.array([point(x) for x in X])

    return DiffusionCoefficients(model, source, drift, scale, sqrt_cov)


def example_drift(x, mu, sd, b, db):
    """Closed-form drift for a 1-D trait, symmetric competition with ``c(0) = 1``."""
    return 0.5 * mu * sd**2 * (1 + 4 / b + (b - 4) / (-np.expm1(-b))) * db


def example_noise(x, mu, sd, b):
    """Closed-form noise coefficient for the same setting."""
    return sd * np.sqrt(mu) * np.sqrt(b / (-np.expm1(-b)) - 1)


@dataclass
class DiffusionPath:
    times: np.ndarray
    states: np.ndarray
    seed: Optional[int]
    dt: float

    def rows(self):
        return [(t, *x) for t, x in zip(self.times, self.states)]


def _guard(Z):
    if not np.all(np.isfinite(Z)) or np.any(np.abs(Z) > BLOWUP):
        raise NumericAbort("diffusion state left the finite region")


def _n_steps(dt, horizon):
    n = int(round(horizon / dt))
    if n < 1 or abs(n * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError("horizon must be a multiple of dt")
    return n


def euler_maruyama(coeffs: DiffusionCoefficients, z0, dt: float, horizon: float, rng=None,
                   seed: Optional[int] = None) -> DiffusionPath:
    """Single Euler-Maruyama path on a uniform grid."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    rng = as_generator(rng if rng is not None else seed)
    n = _n_steps(dt, horizon)
    z = np.atleast_1d(np.asarray(z0, float)).copy()
    k = z.size
    out = np.empty((n + 1, k))
    out[0] = z
    sq = np.sqrt(dt)
    for i in range(n):
        dW = rng.standard_normal(k) * sq
        Z = z[None, :]
        z = z + coeffs.drift(Z)[0] * dt + coeffs.noise_scale(Z)[0] * (coeffs.sqrt_cov @ dW)
        _guard(z)
        out[i + 1] = z
    return DiffusionPath(np.arange(n + 1) * dt, out, seed, dt)


def em_ensemble(coeffs: DiffusionCoefficients, z0, dt: float, horizon: float, paths: int,
                rng=None, record_times=None, increments=None):
    """Vectorised Euler-Maruyama ensemble.

    Returns an array ``(paths, len(record_times), k)`` of states at
    ``record_times`` (default: the horizon only).  ``increments``, if given,
    is a callable ``step -> (paths, k)`` Brownian increments (for coupling).
    """
    rng = as_generator(rng)
    n = _n_steps(dt, horizon)
    rec = np.array([horizon] if record_times is None else record_times, dtype=float)
    rec_steps = np.rint(rec / dt).astype(int)
    if np.any(np.abs(rec_steps * dt - rec) > 1e-9) or np.any(rec_steps > n):
        raise ValueError("record times must be grid points within the horizon")
    z0 = np.atleast_1d(np.asarray(z0, float))
    k = z0.size
    Z = np.tile(z0, (paths, 1))
    out = np.empty((paths, rec.size, k))
    sq = np.sqrt(dt)
    for r in np.nonzero(rec_steps == 0)[0]:
        out[:, r] = Z
    for i in range(1, n + 1):
        dW = increments(i) if increments is not None else rng.standard_normal((paths, k)) * sq
        Z = Z + coeffs.drift(Z) * dt + coeffs.noise_scale(Z)[:, None] * (dW @ coeffs.sqrt_cov.T)
        _guard(Z)
        for r in np.nonzero(rec_steps == i)[0]:
            out[:, r] = Z
    return out


def em_coupled_endpoints(coeffs: DiffusionCoefficients, z0, dt: float, horizon: float,
                         paths: int, rng=None):
    """Endpoints at steps ``dt`` and ``dt / 2`` driven by the same Brownian paths."""
    rng = as_generator(rng)
    n = _n_steps(dt, horizon)
    k = np.atleast_1d(z0).size
    fine = rng.standard_normal((2 * n, paths, k)) * np.sqrt(dt / 2)
    coarse_end = em_ensemble(coeffs, z0, dt, horizon, paths,
                             increments=lambda i: fine[2 * i - 2] + fine[2 * i - 1])[:, -1]
    fine_end = em_ensemble(coeffs, z0, dt / 2, horizon, paths,
                           increments=lambda i: fine[i - 1])[:, -1]
    return coarse_end, fine_end


def biased_ode(model: LogisticModel, z0, dt: float, horizon: float):
    """RK4 integration of ``dz/dt = beta(z) chi(z, z) m(z)`` with ``m`` the kernel mean.

    Returns ``(times, states)``.
    """
    mean = np.asarray(model.kernel.mean, float)
    n = _n_steps(dt, horizon)

    def f(z):
        _, _, _, beta, chi = _beta_chi(model, z[None, :])
        return beta[0] * chi[0] * mean

    z = np.atleast_1d(np.asarray(z0, float)).copy()
    out = np.empty((n + 1, z.size))
    out[0] = z
    for i in range(n):
        k1 = f(z)
        k2 = f(z + 0.5 * dt * k1)
        k3 = f(z + 0.5 * dt * k2)
        k4 = f(z + dt * k3)
        z = z + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        _guard(z)
        out[i + 1] = z
    return np.arange(n + 1) * dt, out
