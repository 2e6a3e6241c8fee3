"""Invasibility coefficients, genealogical probabilities and adaptive slopes.

Near neutrality, the fixation probability of ``m`` mutants among ``n``
residents expands as ``p + sum_i v_i s_i`` with ``p = m / (n + m)`` and
``s`` the five selection coefficients (fertility ``lambda``, defence
``delta``, aggressiveness ``alpha``, isolation ``epsilon``, survival
``sigma``).  Each gradient factorises as ``p (1 - p) g_{n+m}`` (with an
extra ``1 - 2p`` for isolation), where the invasibility coefficient ``g``
depends on the resident ``(b, c, d)`` only.  This module evaluates those
coefficients in closed form.

Sequences indexed from 2 (or 3) are stored in plain arrays whose position
``i`` holds the term of index ``i``; unused leading entries are NaN.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.special import digamma, gammaln

from .fixation import solve_dirichlet
from .population import TwoTypeParams
from . import kernels
from .rng import run_blocks

__all__ = [
    "IOTAS",
    "ConvergenceError",
    "e_seq",
    "apply_L",
    "apply_Lprime",
    "PhiSequence",
    "PsiSequence",
    "phi_sequence",
    "psi_sequence",
    "GenealogyEstimate",
    "q_genealogy",
    "Invasibility",
    "selection_gradient_v",
    "slope_lambda_closed",
    "slope_lambda_series",
    "slope_integral_primitive",
    "grad2_chi_closed",
]

IOTAS = ("lambda", "delta", "alpha", "epsilon", "sigma")


class ConvergenceError(RuntimeError):
    """A recursion or series failed its convergence diagnostics."""


def _canon(iota):
    key = {"lam": "lambda"}.get(iota, iota)
    if key not in IOTAS:
        raise ValueError(f"unknown selection coefficient {iota!r}")
    return key


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def e_seq(k: int, n):
    """``1 / (n + k)``."""
    return 1.0 / (np.asarray(n, dtype=float) + k)


def _apply(w, b, c, d, shift):
    w = np.asarray(w, dtype=float)
    K = w.size - 1
    start = shift
    if K < start + 1:
        raise ValueError("sequence too short")
    n = np.arange(start, K, dtype=float)
    out = np.full(K, np.nan)
    prev = w[start - 1:K - 1].copy()
    prev[0] = 0.0
    out[start:] = (-b * (n + shift) / (n + 1) * w[start + 1:K + 1]
                   + (b + c * (n - 1) + d) * w[start:K]
                   - (n - shift) * (c + d / (n - 1)) * prev)
    return out


def apply_L(w, b, c, d=0.0):
    """Three-term operator on sequences indexed from 2.

    ``w[i]`` holds the term of index ``i`` (``w[0], w[1]`` are ignored).  The
    result ``out[n]`` is defined for ``2 <= n < len(w) - 1``.
    """
    return _apply(w, b, c, d, 2)


def apply_Lprime(w, b, c, d=0.0):
    """Companion operator on sequences indexed from 3 (see :func:`apply_L`)."""
    return _apply(w, b, c, d, 3)


# ---------------------------------------------------------------------------
# Phi / Psi recursions (no natural death)
# ---------------------------------------------------------------------------

@dataclass
class PhiSequence:
    """Solution of the defence recursion and derived constants.

    ``Phi[n]`` for ``2 <= n <= k_max``; ``phi[k]`` for ``1 <= k <= k_max`` with
    ``phi[1] = 1 / (2c)`` and ``phi[k] = Phi[k] / (c Phi_inf)``.
    """
    theta: float
    c: float
    k_max: int
    Phi: np.ndarray
    Phi_inf: float
    S: float
    phi: np.ndarray

    @property
    def identity_residual(self):
        """``|3c - b S - c Phi_inf| / c``."""
        return abs(3.0 - self.theta * self.S - self.Phi_inf)


@dataclass
class PsiSequence:
    """Solution of the isolation recursion and derived constants.

    ``psi`` is a dict for the special indices ``-2, -1, 1, 2`` plus an array
    ``psi_tail[k] = -Psi[k] / (c Psi_inf)`` for ``k >= 3``.
    """
    theta: float
    c: float
    k_max: int
    Psi: np.ndarray
    Psi_inf: float
    S: float
    Sigma: float
    special: dict
    psi_tail: np.ndarray

    @property
    def identity_residuals(self):
        """Residuals of ``Sigma + 2 theta S = 5`` and ``Psi_inf + (theta - 3) Sigma = 5``."""
        return (abs(self.Sigma + 2 * self.theta * self.S - 5.0),
                abs(self.Psi_inf + (self.theta - 3.0) * self.Sigma - 5.0))

    @property
    def cancellation(self):
        """``psi_-2 + psi_-1 + psi_1`` plus the constant part of ``psi_2``; vanishes analytically."""
        const2 = self.special[2] - self.Sigma / (self.c * self.Psi_inf)
        return self.special[-2] + self.special[-1] + self.special[1] + const2


def _richardson(beta, K):
    """Limit of ``beta_n = L + A / n^2 + ...`` from ``n = K`` and ``K / 2``."""
    h = K // 2
    return (K**2 * beta[K] - h**2 * beta[h]) / (K**2 - h**2)


def _check_sign(beta, K, name):
    tail = beta[K // 2:K + 1]
    if not (np.all(tail > 0) or np.all(tail < 0)):
        raise ConvergenceError(f"{name}: sign changes past k_max/2, limit not reached")


def phi_sequence(theta: float, c: float = 1.0, k_max: int = 10_000, tol: Optional[float] = 1e-6
                 ) -> PhiSequence:
    """Forward recursion for the defence sequence, from ``Phi_2 = 1``.

    The recursion (divided by ``c``) reads
    ``(n+2) Phi_{n+1} = (n+1-theta) Phi_n + theta (n-2)/(n-1) Phi_{n-1}``.
    The wanted solution is the dominant one, so forward iteration is stable.
    ``Phi_inf = lim (n+1) Phi_n`` is extrapolated assuming an ``O(n^-2)``
    approach; the sum ``S`` gets the tail ``Phi_inf / (k_max + 1)``.

    Raises
    ------
    ConvergenceError
        If ``(n+1) Phi_n`` changes sign past ``k_max / 2`` or, when ``tol`` is
        given, if the identity ``3 - theta S = Phi_inf`` fails by more than it.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    if k_max < 100:
        raise ValueError("k_max must be at least 100")
    K = int(k_max)
    P = np.full(K + 1, np.nan)
    P[2] = 1.0
    P[1] = 0.0
    for n in range(2, K):
        P[n + 1] = ((n + 1 - theta) * P[n] + theta * (n - 2) / (n - 1) * P[n - 1]) / (n + 2)
    P[1] = np.nan
    n = np.arange(K + 1, dtype=float)
    beta = (n + 1) * P
    _check_sign(beta, K, "Phi")
    inf = _richardson(beta, K)
    S = float(np.sum(P[2:] / n[2:]) + inf / (K + 1))
    phi = np.full(K + 1, np.nan)
    phi[1] = 1.0 / (2 * c)
    phi[2:] = P[2:] / (c * inf)
    seq = PhiSequence(theta, c, K, P, float(inf), S, phi)
    if tol is not None and seq.identity_residual > tol:
        raise ConvergenceError(f"Phi identity residual {seq.identity_residual:.3g}")
    return seq


def psi_sequence(theta: float, c: float = 1.0, k_max: int = 10_000, tol: Optional[float] = 1e-6
                 ) -> PsiSequence:
    """Forward recursion for the isolation sequence, from ``Psi_3 = 1``.

    ``(n+3) Psi_{n+1} = (n+1-theta) Psi_n + theta (n-3)/(n-1) Psi_{n-1}``;
    ``Psi_inf = lim (n+1)(n+2) Psi_n``.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    if k_max < 100:
        raise ValueError("k_max must be at least 100")
    K = int(k_max)
    Q = np.full(K + 1, np.nan)
    Q[3] = 1.0
    Q[2] = 0.0
    for n in range(3, K):
        Q[n + 1] = ((n + 1 - theta) * Q[n] + theta * (n - 3) / (n - 1) * Q[n - 1]) / (n + 3)
    Q[2] = np.nan
    n = np.arange(K + 1, dtype=float)
    beta = (n + 1) * (n + 2) * Q
    _check_sign(beta, K, "Psi")
    inf = _richardson(beta, K)
    S = float(np.sum(Q[3:] / n[3:]) + inf / (2 * (K + 1) * (K + 2)))
    Sigma = float(np.sum(Q[3:]) + inf / (K + 2))
    b = theta * c
    special = {
        -2: -1.0 / (b * (theta + 3)),
        -1: (theta + 1) / (b * (theta + 3)),
        1: 2 * theta / (3 * c * (theta + 3)),
        2: Sigma / (c * inf) - (2 * theta + 3) / (3 * c * (theta + 3)),
    }
    tail = np.full(K + 1, np.nan)
    tail[3:] = -Q[3:] / (c * inf)
    seq = PsiSequence(theta, c, K, Q, float(inf), S, Sigma, special, tail)
    if tol is not None and max(seq.identity_residuals) > tol:
        raise ConvergenceError(f"Psi identity residuals {seq.identity_residuals}")
    return seq


# ---------------------------------------------------------------------------
# genealogy
# ---------------------------------------------------------------------------

@dataclass
class GenealogyEstimate:
    """``q2[n]``, ``q3[n]`` (NaN where undefined) and the constants kappa, kappa'."""
    b: float
    c: float
    d: float
    q2: np.ndarray
    q3: np.ndarray
    q2_se: np.ndarray
    q3_se: np.ndarray
    kappa: float
    kappa_prime: float
    method: str
    n_grid: Optional[int] = None

    @property
    def n_max(self):
        return self.q2.size - 1

    def D2(self, n):
        n = np.asarray(n)
        return self.q2[n] / (self.kappa * (n - 1))

    def D3(self, n):
        n = np.asarray(n)
        return self.q3[n] / (self.kappa_prime * (n - 1) * (n - 2))


def _kappas(b, c, d, q2_3, q3_4):
    kappa = b * (1 - 2 * q2_3 / 3) + c + d
    kappa_p = 0.5 * b * (1 - q3_4 / 2) + c + d / 2
    return kappa, kappa_p


def _genealogy_block(rng, count, n0, b, c, d, max_events):
    return kernels.genealogy_batch(n0, b, c, d, count, max_events, rng)


def q_genealogy(b: float, c: float, d: float = 0.0, n_max: int = 30, method: str = "harmonic",
                replicates: int = 100_000, seed=0, n_grid: Optional[int] = None, jobs: int = 1,
                max_events: int = 10**9) -> GenealogyEstimate:
    """Probabilities that the first surviving pair / triple have distinct ancestors.

    Parameters
    ----------
    b, c, d : float
        Resident rates.
    n_max : int
        Largest initial size ``n`` returned.
    method : {"harmonic", "monte_carlo"}
        ``harmonic`` solves two neutral two-type Dirichlet problems whose
        solutions are explicit multiples of ``q2`` and ``q3``;
        ``monte_carlo`` follows ancestral labels in the neutral process.
    replicates : int
        Monte Carlo replicates per initial size.
    n_grid : int, optional
        Truncation of the harmonic grid (default ``max(2 n_max, 8 max(theta, 20))``);
        the descent from ``n_max`` to size 3 essentially never reaches it.
    """
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    q2 = np.full(n_max + 1, np.nan)
    q3 = np.full(n_max + 1, np.nan)
    se2 = np.zeros(n_max + 1)
    se3 = np.zeros(n_max + 1)
    if method == "harmonic":
        theta = b / c
        N = n_grid or int(max(2 * n_max, 8 * max(theta, 20)))
        p = TwoTypeParams.neutral(b, c, d)
        w2, r2 = solve_dirichlet(p, N, lambda n, m: ((n == 1) & (m == 1)).astype(float), s0=2)
        w3, r3 = solve_dirichlet(
            p, N, lambda n, m: np.where((n == 2) & (m == 1), 2.0,
                                        np.where((n == 1) & (m == 2), -2.0, 0.0)), s0=3)
        s = np.arange(3, n_max + 1)
        q2[2] = 1.0
        q2[3:] = w2[1, s - 1] * s / 2.0
        q3[3] = 1.0
        s = np.arange(4, n_max + 1)
        q3[4:] = w3[s - 1, 1] * s / 6.0
    elif method == "monte_carlo":
        N = None
        q2[2] = 1.0
        q3[3] = 1.0
        for n in range(3, n_max + 1):
            d3, d2, status = run_blocks(_genealogy_block, int(replicates), seed, n, float(b),
                                        float(c), float(d), int(max_events), tag=n)
            if np.any(status != kernels.OK):
                raise RuntimeError("genealogy simulation hit the event cap")
            q2[n] = d2.mean()
            se2[n] = np.sqrt(q2[n] * (1 - q2[n]) / replicates)
            if n >= 4:
                q3[n] = d3.mean()
                se3[n] = np.sqrt(q3[n] * (1 - q3[n]) / replicates)
    else:
        raise ValueError(f"unknown method {method!r}")
    kappa, kappa_p = _kappas(b, c, d, q2[3], q3[4])
    return GenealogyEstimate(b, c, d, q2, q3, se2, se3, kappa, kappa_p, method, N)


# ---------------------------------------------------------------------------
# invasibility coefficients and slopes
# ---------------------------------------------------------------------------

def _f_slope(u):
    """``e^u (u^2 - u + 1) - 1``."""
    return np.exp(u) * (u * u - u + 1) - 1


def _f_over_u2_series(u):
    """``sum n^2 u^(n-1) / (n+1)!`` (equals ``f(u) / u^2``), for small ``u``."""
    return 0.5 + u * (2 / 3 + u * (3 / 8 + u * (2 / 15 + u * 25 / 720)))


def _exp_moments(theta, jmax):
    """``E_j = int_0^1 t^j e^(theta t) dt`` for ``0 <= j <= jmax`` (backward recursion)."""
    J = jmax + 60
    E = np.empty(J + 1)
    E[J] = np.exp(theta) / (J + 1 + theta)
    for j in range(J - 1, -1, -1):
        E[j] = (np.exp(theta) - theta * E[j + 1]) / (j + 1)
    return E[: jmax + 1]


class Invasibility:
    """Invasibility coefficients of a resident with rates ``(b, c, d)``.

    Defence and isolation coefficients need ``d = 0``.  Dependencies (the
    defence/isolation sequences, the harmonic genealogy) are computed on
    first use and cached.

    Parameters
    ----------
    b, c, d : float
    k_max : int
        Truncation of the defence/isolation sequences before tail correction.
    genealogy_n : int
        Largest ``n`` for which ``q2``, ``q3`` are tabulated initially.
    """

    def __init__(self, b: float, c: float, d: float = 0.0, k_max: int = 10_000,
                 genealogy_n: int = 60, genealogy: Optional[GenealogyEstimate] = None):
        if b <= 0 or c <= 0 or d < 0:
            raise ValueError("need b > 0, c > 0, d >= 0")
        self.b = float(b)
        self.c = float(c)
        self.d = float(d)
        self.k_max = int(k_max)
        self._gen_n = int(genealogy_n)
        self._genealogy = genealogy

    @property
    def theta(self):
        return self.b / self.c

    def _need_no_death(self, what):
        if self.d != 0:
            raise ValueError(f"{what} requires d = 0")

    @cached_property
    def phi(self) -> PhiSequence:
        self._need_no_death("defence coefficients")
        return phi_sequence(self.theta, self.c, self.k_max)

    @cached_property
    def psi(self) -> PsiSequence:
        self._need_no_death("isolation coefficients")
        return psi_sequence(self.theta, self.c, self.k_max)

    def genealogy(self, n_needed: int = 0) -> GenealogyEstimate:
        if self._genealogy is None or self._genealogy.n_max < n_needed:
            n = max(self._gen_n, int(n_needed), 4)
            self._genealogy = q_genealogy(self.b, self.c, self.d, n, method="harmonic")
        return self._genealogy

    # -- coefficients -------------------------------------------------------
    def g(self, iota: str, n):
        """Invasibility coefficient ``g^iota_n`` (vectorised over ``n``)."""
        iota = _canon(iota)
        n_arr = np.atleast_1d(np.asarray(n, dtype=np.int64))
        lo = 3 if iota == "epsilon" else 2
        if np.any(n_arr < lo):
            raise ValueError(f"g^{iota} is defined for n >= {lo}")
        out = getattr(self, "_g_" + iota)(n_arr)
        return out if np.ndim(n) else float(out[0])

    def _g_lambda(self, n):
        b, c, d = self.b, self.c, self.d
        nf = n.astype(float)
        out = nf / (2 * c * (nf + 1))
        if d != 0:
            gen = self.genealogy(int(n.max()))
            out = out - d * nf / (2 * b * c * (nf - 1)) + \
                d * (c + d) / (2 * b * c * gen.kappa) * nf * gen.q2[n] / (nf - 1)
        return out

    def _g_alpha(self, n):
        b, c, d = self.b, self.c, self.d
        nf = n.astype(float)
        gen = self.genealogy(int(n.max()))
        return ((2 * c - d) * nf / (2 * b * c * (nf - 1))
                - (2 * c - d) * (c + d) / (2 * b * c * gen.kappa) * nf * gen.q2[n] / (nf - 1)
                + nf / (2 * c * (nf + 1)))

    _g_sigma = _g_alpha

    def _g_delta(self, n):
        ph = self.phi
        K = ph.k_max
        k = np.arange(1, K + 1, dtype=float)
        coef = ph.phi[1:]
        nf = n.astype(float)
        body = np.array([np.sum(coef / (x + k)) for x in nf]) * nf
        # phi_k ~ 1 / (c (k + 1)) beyond k_max
        tail = nf / (nf - 1) * (digamma(K + 1 + nf) - digamma(K + 2)) / self.c
        return body + tail

    def _g_epsilon(self, n):
        ps = self.psi
        K = ps.k_max
        nf = n.astype(float)
        special = sum(v / (nf + k) for k, v in ps.special.items())
        k = np.arange(3, K + 1, dtype=float)
        coef = ps.psi_tail[3:]
        body = np.array([np.sum(coef / (x + k)) for x in nf])
        # psi_k ~ -1 / (c (k+1)(k+2)) beyond k_max; partial fractions in k
        A = 1.0 / (nf - 1)
        B = -1.0 / (nf - 2)
        C = 1.0 / ((nf - 1) * (nf - 2))
        tail = -(-A * digamma(K + 2) - B * digamma(K + 3) - C * digamma(K + 1 + nf)) / self.c
        gen = self.genealogy(int(n.max()))
        th = self.theta
        extra = gen.q3[n] / (gen.kappa_prime * th * (th + 3) * (nf - 1) * (nf - 2))
        return nf**2 * (special + body + tail + extra)

    def u(self, iota: str, n):
        """Sequence ``u^iota_n = g_n / n`` (``g_n / n^2`` for isolation)."""
        iota = _canon(iota)
        nf = np.asarray(n, dtype=float)
        return self.g(iota, n) / (nf**2 if iota == "epsilon" else nf)

    def v(self, iota: str, n: int, m: int) -> float:
        """Selection gradient ``v^iota_{n,m}`` (zero on the axes)."""
        return selection_gradient_v(iota, n, m, self)

    # -- adaptive slopes ------------------------------------------------------
    def _series_terms(self, tol=1e-18):
        """Number of terms after which ``theta^(n-1) / (n-1)!`` is negligible."""
        th = self.theta
        n = int(max(20, 3 * th + 20))
        while (n - 1) * np.log(th) - gammaln(n) > np.log(tol) - 10:
            n += 10
        return n

    def slope(self, iota: str, route: str = "closed") -> float:
        """Adaptive slope ``a_iota`` for ``iota`` in lambda, alpha, delta.

        Routes: ``closed`` (closed form, the quadrature-free double sum for
        delta), ``series`` (generic mixture of ``g_{n+1}`` over the size law),
        and for delta also ``integral`` (quadrature against the generating
        function of ``phi``).
        """
        iota = _canon(iota)
        self._need_no_death("adaptive slopes")
        if iota not in ("lambda", "alpha", "delta"):
            raise ValueError("adaptive slopes exist for lambda, alpha and delta only")
        if route == "series":
            return self._slope_series(iota)
        if iota == "lambda":
            if route != "closed":
                raise ValueError(f"unknown route {route!r}")
            return slope_lambda_closed(self.theta, self.b)
        if iota == "alpha":
            if route != "closed":
                raise ValueError(f"unknown route {route!r}")
            return self._slope_alpha_closed()
        if route == "closed":
            return self._slope_delta_sum()
        if route == "integral":
            return self._slope_delta_integral()
        raise ValueError(f"unknown route {route!r}")

    def _slope_series(self, iota):
        N = self._series_terms()
        n = np.arange(1, N + 1)
        th = self.theta
        w = n * np.exp((n - 1) * np.log(th) - gammaln(n)) / (n + 1.0) ** 2
        return float(np.sum(w * self.g(iota, n + 1)))

    def _slope_alpha_closed(self):
        th, b = self.theta, self.b
        N = self._series_terms()
        gen = self.genealogy(N + 1)
        n = np.arange(1, N + 1)
        series = np.sum(n * gen.q2[n + 1] * np.exp((n - 1) * np.log(th) - gammaln(n + 2)))
        head = (np.exp(th) * (th * th - th + 2) - th - 2) / (2 * b * th * th)
        return float(head - series / (gen.kappa * th))

    def _slope_delta_sum(self):
        ph = self.phi
        th = self.theta
        K = ph.k_max
        E = _exp_moments(th, K + 1)
        k = np.arange(1, K + 1)
        inner = E[k + 1] - E[k] / th + E[k - 1] / th**2 - 1.0 / (k * th**2)
        terms = ph.phi[1:] * inner
        tail_coef = _f_slope(th) / (self.c * th**2)

        # inner ~ f(theta) / (theta^2 k) and phi_k ~ 1 / (c (k+1)) for large k,
        # leaving an O(1/M^2) remainder that Richardson extrapolation removes
        def truncated(M):
            return float(np.sum(terms[:M]) + tail_coef / (M + 1))

        return (4.0 * truncated(K) - truncated(K // 2)) / 3.0

    def pi(self, v, derivative: int = 0):
        """Generating function ``sum_k phi_k v^(k-1)`` (or its derivatives) for ``|v| < 1``."""
        ph = self.phi
        coef = ph.phi[1:].copy()
        poly = np.polynomial.Polynomial(coef)
        if derivative:
            poly = poly.deriv(derivative)
        return poly(np.asarray(v, dtype=float))

    def _slope_delta_integral(self):
        ph = self.phi
        th, c = self.theta, self.c
        K = ph.k_max
        k = np.arange(1, K + 1)
        # regular part of pi after removing the log-singular sum of 1/(c(k+1)) v^(k-1)
        reg = np.polynomial.Polynomial(ph.phi[1:] - 1.0 / (c * (k + 1)))
        f = _f_slope
        opts = dict(limit=400, epsabs=1e-13, epsrel=1e-12)
        i_reg = integrate.quad(lambda u: f(u) * reg(u / th), 0, th, **opts)[0]
        g2 = lambda u: f(u) / (u * u) if u > 1e-3 else _f_over_u2_series(u)
        g1 = lambda u: u * g2(u)
        i_log = integrate.quad(g2, 0, th, weight="alg-logb", wvar=(0, 0), **opts)[0]
        i_2 = integrate.quad(g2, 0, th, **opts)[0]
        i_1 = integrate.quad(g1, 0, th, **opts)[0]
        i_sing = (th * th / c) * (np.log(th) * i_2 - i_log) - (th / c) * i_1
        return float((i_reg + i_sing) / th**3)

    def pi_ode_residual(self, grid=None) -> float:
        """Largest residual of the second-order ODE satisfied by ``pi`` on ``grid``."""
        if grid is None:
            grid = np.linspace(0.0, 0.9, 91)
        v = np.asarray(grid, dtype=float)
        p0 = self.pi(v)
        p1 = self.pi(v, 1)
        p2 = self.pi(v, 2)
        th = self.theta
        res = v * v * (1 - v) * p2 + v * (th * v * (1 - v) + 2 - 3 * v) * p1 - 2 * p0 + th / self.b
        return float(np.max(np.abs(res)))

    def grad2_chi(self, grad_b, grad1_c, grad2_c):
        return grad2_chi_closed(self.theta, grad_b, grad1_c, grad2_c,
                                self.slope("lambda"), self.slope("delta"), self.slope("alpha"))

    def table(self, n_values, iotas=IOTAS):
        """Rows ``(iota, n, g)`` for CSV export."""
        rows = []
        for iota in iotas:
            lo = 3 if iota == "epsilon" else 2
            ns = [n for n in n_values if n >= lo]
            if ns:
                for n, g in zip(ns, self.g(iota, np.array(ns))):
                    rows.append((iota, int(n), float(g)))
        return rows


def selection_gradient_v(iota: str, n: int, m: int, inv: Invasibility) -> float:
    """``p(1-p) g_{n+m}`` (times ``1 - 2p`` for isolation) with ``p = m/(n+m)``."""
    iota = _canon(iota)
    if n < 0 or m < 0 or n + m < 2:
        raise ValueError("need n, m >= 0 and n + m >= 2")
    if n == 0 or m == 0:
        return 0.0
    s = n + m
    p = m / s
    if iota == "epsilon":
        if s < 3:
            return 0.0
        return p * (1 - p) * (1 - 2 * p) * inv.g(iota, s)
    return p * (1 - p) * inv.g(iota, s)


def slope_lambda_closed(theta, b):
    """Fertility slope ``(e^t (t^2 - 3t + 4) - t - 4) / (2 b t^2)``."""
    return (np.exp(theta) * (theta**2 - 3 * theta + 4) - theta - 4) / (2 * b * theta**2)


def slope_lambda_series(theta, c, terms: int = 200):
    """Series form ``sum n t^(n-1) / (2c (n+2)(n+1)(n-1)!)``."""
    n = np.arange(1, terms + 1)
    return float(np.sum(n * np.exp((n - 1) * np.log(theta) - gammaln(n))
                        / (2 * c * (n + 2) * (n + 1))))


def slope_integral_primitive(theta: float, k: int) -> float:
    """``int_0^theta u^(k-1) (e^u (u^2 - u + 1) - 1) du`` from its explicit primitive.

    Subject to cancellation for large ``k``; meant for small ``k`` checks.
    """
    from math import factorial
    s = sum((-1) ** i * theta ** (k - i - 1) / factorial(k - i - 1) for i in range(k))
    return (np.exp(theta) * (theta ** (k + 1) - (k + 2) * theta**k
                             + (k + 1) ** 2 * factorial(k - 1) * s)
            - (-1) ** (k - 1) * (k + 1) ** 2 * factorial(k - 1) - theta**k / k)


def grad2_chi_closed(theta, grad_b, grad1_c, grad2_c, a_lambda, a_delta, a_alpha):
    """``e^-theta (a_lambda grad b - a_delta grad_1 c + a_alpha grad_2 c)``."""
    gb = np.asarray(grad_b, dtype=float)
    g1 = np.asarray(grad1_c, dtype=float)
    g2 = np.asarray(grad2_c, dtype=float)
    return np.exp(-theta) * (a_lambda * gb - a_delta * g1 + a_alpha * g2)
