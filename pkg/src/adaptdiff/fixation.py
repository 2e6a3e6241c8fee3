"""Fixation probabilities of the two-type chain and invasion fitness.

The fixation probability ``u[n, m]`` solves a discrete Dirichlet problem:
it is harmonic for the jump chain off the axes, equals 0 on the resident
axis ``m = 0`` and 1 on the mutant axis ``n = 0``.  The grid is truncated
at total size ``n + m <= n_max`` with reflecting rows (births switched off
on the outer diagonal); the effect of truncation is measured by re-solving
on a doubled grid.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from scipy.stats import poisson

from .csvio import write_csv
from .population import LogisticModel, TwoTypeParams, two_type_ensemble

__all__ = [
    "FixationProblem",
    "FixationTable",
    "TruncationError",
    "default_n_max",
    "assemble_system",
    "solve_dirichlet",
    "solve_fixation",
    "fixation_probability",
    "apply_harmonic",
    "mc_fixation",
    "invasion_fitness",
    "neutral_invasion_fitness",
    "model_fitness",
    "chi_gradient_fd",
    "FDResult",
]


class TruncationError(RuntimeError):
    """Truncation sensitivity exceeds the caller's budget."""


def default_n_max(theta: float = 1.0, requested: int = 0) -> int:
    """Default grid size ``8 * max(theta, requested, 20)``."""
    return int(np.ceil(8 * max(theta, requested, 20)))


@dataclass(frozen=True)
class FixationProblem:
    params: TwoTypeParams
    n_max: int
    tol: float = 1e-10

    def __post_init__(self):
        if self.n_max < 4:
            raise ValueError("n_max must be at least 4")


def _grid_states(n_max, s0):
    """Interior states ``n, m >= 1`` with ``s0 < n + m <= n_max`` in diagonal order."""
    s = np.concatenate([np.full(k - 1, k) for k in range(s0 + 1, n_max + 1)]).astype(np.int64)
    n = np.concatenate([np.arange(1, k) for k in range(s0 + 1, n_max + 1)]).astype(np.int64)
    return n, s - n


def _index(n, m, s0):
    s = n + m
    # number of interior states on diagonals s0+1 .. s-1 (diagonal k has k-1 states)
    before = (s - 1) * (s - 2) // 2 - s0 * (s0 - 1) // 2
    return before + n - 1


def assemble_system(params: TwoTypeParams, n_max: int, boundary: Callable = None, s0: int = 1):
    """Sparse linear system for a harmonic function of the two-type chain.

    Unknowns are the values at interior states ``n, m >= 1``,
    ``s0 < n + m <= n_max``, ordered by diagonal then by ``n``.  Values on
    the axes and on the diagonal ``n + m = s0`` are fixed by
    ``boundary(n, m)`` (vectorised); the default is the fixation boundary
    (1 on the mutant axis, 0 elsewhere).

    Each row reads ``r u - sum_j q_j u_j = sum_{j in boundary} q_j g_j``
    with ``r`` the sum of the outgoing rates, so rows balance exactly.

    Returns
    -------
    A : scipy.sparse.csr_matrix
    rhs : ndarray
    states : tuple of ndarray
        ``(n, m)`` of each unknown.
    """
    if n_max < max(4, s0 + 2):
        raise ValueError("n_max too small for this boundary")
    if boundary is None:
        boundary = lambda n, m: (n == 0).astype(float)
    n, m = _grid_states(n_max, s0)
    p = params
    nf = n.astype(float)
    mf = m.astype(float)
    top = (n + m) == n_max
    q_b1 = np.where(top, 0.0, p.b1 * nf)
    q_b2 = np.where(top, 0.0, p.b2 * mf)
    q_d1 = nf * (p.c11 * (nf - 1) + p.c12 * mf + p.d1)
    q_d2 = mf * (p.c21 * nf + p.c22 * (mf - 1) + p.d2)
    if min(q_b1.min(), q_b2.min(), q_d1.min(), q_d2.min()) < 0:
        raise ValueError("negative transition rate on the grid")
    diag = q_b1 + q_b2 + q_d1 + q_d2
    size = n.size
    rows = [np.arange(size)]
    cols = [np.arange(size)]
    vals = [diag]
    rhs = np.zeros(size)
    for dn, dm, q in ((1, 0, q_b1), (0, 1, q_b2), (-1, 0, q_d1), (0, -1, q_d2)):
        tn = n + dn
        tm = m + dm
        inner = (tn >= 1) & (tm >= 1) & (tn + tm > s0) & (q != 0)
        outer = ~((tn >= 1) & (tm >= 1) & (tn + tm > s0)) & (q != 0)
        rows.append(np.nonzero(inner)[0])
        cols.append(_index(tn[inner], tm[inner], s0))
        vals.append(-q[inner])
        if np.any(outer):
            rhs[outer] += q[outer] * boundary(tn[outer], tm[outer])
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(size, size))
    return A, rhs, (n, m)


def solve_dirichlet(params: TwoTypeParams, n_max: int, boundary: Callable = None, s0: int = 1):
    """Solve :func:`assemble_system`; returns ``(grid, residual)``.

    ``grid`` is an ``(n_max+1, n_max+1)`` array holding the solution at
    interior states, the boundary values on the axes and on diagonal
    ``s0`` (where defined) and NaN outside the triangle.
    """
    A, rhs, (n, m) = assemble_system(params, n_max, boundary, s0)
    sol = spsolve(A.tocsc(), rhs)
    scale = np.abs(A.diagonal())
    residual = float(np.max(np.abs(A @ sol - rhs) / np.maximum(scale, 1e-300)))
    if boundary is None:
        boundary = lambda nn, mm: (nn == 0).astype(float)
    grid = np.full((n_max + 1, n_max + 1), np.nan)
    k = np.arange(1, n_max + 1)
    grid[k, 0] = boundary(k, np.zeros_like(k))
    grid[0, k] = boundary(np.zeros_like(k), k)
    if s0 >= 2:
        dn = np.arange(1, s0)
        grid[dn, s0 - dn] = boundary(dn, s0 - dn)
    grid[n, m] = sol
    return grid, residual


@dataclass
class FixationTable:
    """Fixation probabilities on ``{n + m <= n_max}``.

    ``u[n, m]`` is NaN outside the triangle and at the origin.
    """
    params: TwoTypeParams
    n_max: int
    u: np.ndarray
    residual: float
    sensitivity: Optional[float] = None
    checked_up_to: Optional[int] = None

    def __call__(self, n, m):
        return self.u[n, m]

    def column(self, m: int = 1, length: Optional[int] = None) -> np.ndarray:
        """``u[n, m]`` for ``n = 1, ..., length`` (default: as far as the grid allows)."""
        top = self.n_max - m if length is None else length
        if top > self.n_max - m:
            raise ValueError("requested column longer than the grid")
        return self.u[1:top + 1, m].copy()

    def to_csv(self, path, max_size: Optional[int] = None):
        top = self.n_max if max_size is None else max_size
        rows = [(n, s - n, self.u[n, s - n]) for s in range(1, top + 1) for n in range(0, s + 1)]
        meta = {"params": self.params, "n_max": self.n_max, "residual": self.residual,
                "sensitivity": self.sensitivity}
        write_csv(path, ["n", "m", "u"], rows, meta)


def solve_fixation(problem: FixationProblem, requested: Optional[int] = None,
                   sensitivity: bool = True, max_sensitivity: Optional[float] = None
                   ) -> FixationTable:
    """Solve for fixation probabilities on a truncated grid.

    Parameters
    ----------
    problem : FixationProblem
    requested : int, optional
        Largest ``n + m`` whose values matter; the truncation sensitivity is
        the largest change on that sub-grid when ``n_max`` is doubled.
        Defaults to ``n_max // 4``.
    sensitivity : bool
        Whether to run the doubling check.
    max_sensitivity : float, optional
        Raise :class:`TruncationError` if the sensitivity exceeds this.
    """
    p = problem.params.validate()
    N = problem.n_max
    u, residual = solve_dirichlet(p, N)
    if residual > problem.tol:
        raise RuntimeError(f"linear solve residual {residual:.3g} above tolerance")
    table = FixationTable(p, N, u, residual)
    if sensitivity:
        req = N // 4 if requested is None else int(requested)
        if req > N:
            raise ValueError("requested sub-grid exceeds n_max")
        u2, _ = solve_dirichlet(p, 2 * N)
        mask = np.add.outer(np.arange(N + 1), np.arange(N + 1)) <= req
        mask[0, 0] = False
        table.sensitivity = float(np.max(np.abs(u[mask] - u2[: N + 1, : N + 1][mask])))
        table.checked_up_to = req
        if max_sensitivity is not None and table.sensitivity > max_sensitivity:
            raise TruncationError(
                f"truncation sensitivity {table.sensitivity:.3g} exceeds {max_sensitivity:.3g}")
    return table


def fixation_probability(params: TwoTypeParams, n: int, m: int, n_max: Optional[int] = None):
    """Single value ``u[n, m]`` without the doubling check."""
    theta = params.b1 / params.c11
    N = default_n_max(theta, n + m) if n_max is None else n_max
    return float(solve_fixation(FixationProblem(params, N), sensitivity=False).u[n, m])


def apply_harmonic(params: TwoTypeParams, w: np.ndarray) -> np.ndarray:
    """Generator of the two-type chain applied to a grid function.

    ``w`` is indexed ``w[n, m]`` on a square array; the result is defined at
    interior states whose four neighbours lie in the array (NaN elsewhere).
    """
    p = params
    N = w.shape[0] - 1
    out = np.full(w.shape, np.nan)
    n, m = np.meshgrid(np.arange(1, N), np.arange(1, N), indexing="ij")
    ok = (n + m) <= N - 1
    n = n[ok]
    m = m[ok]
    c = w[n, m]
    out[n, m] = (p.b1 * n * (w[n + 1, m] - c) + p.b2 * m * (w[n, m + 1] - c)
                 + n * (p.c11 * (n - 1) + p.c12 * m + p.d1) * (w[n - 1, m] - c)
                 + m * (p.c21 * n + p.c22 * (m - 1) + p.d2) * (w[n, m - 1] - c))
    return out


def mc_fixation(params: TwoTypeParams, n: int, m: int, replicates: int, seed, jobs: int = 1,
                tag: int = 0):
    """Monte Carlo fixation frequency and its binomial standard error."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    fixed = two_type_ensemble(n, m, params, replicates, seed, jobs=jobs, tag=tag)[0]
    p = float(fixed.mean())
    return p, float(np.sqrt(max(p * (1 - p), 0.0) / replicates))


# ---------------------------------------------------------------------------
# invasion fitness
# ---------------------------------------------------------------------------

def _size_biased_poisson(theta, length):
    from scipy.special import gammaln
    n = np.arange(1, length + 1)
    return np.exp(-theta + (n - 1) * np.log(theta) - gammaln(n))


def invasion_fitness(theta: float, u_column, tail_tol: float = 1e-12, weights=None) -> float:
    """Mix ``u[n, 1]`` over the size-biased stationary law.

    Parameters
    ----------
    theta : float
        Resident ``b / c``.
    u_column : array_like
        ``u[n, 1]`` for ``n = 1, 2, ...``.
    weights : array_like, optional
        Explicit size-biased weights (for size-dependent birth); by default
        ``e^-theta theta^(n-1) / (n-1)!``.

    Raises
    ------
    ValueError
        If the omitted weight beyond the column exceeds ``tail_tol``.
    """
    u = np.asarray(u_column, dtype=float)
    if weights is None:
        w = _size_biased_poisson(theta, u.size)
        # weight of n is the Poisson(theta) mass at n - 1
        tail = poisson.sf(np.arange(u.size), theta)
        enough = np.nonzero(tail <= tail_tol)[0]
        if enough.size == 0:
            raise ValueError(f"u column too short: omitted weight {tail[-1]:.3g}")
        w = w[: enough[0] + 1]
    else:
        w = np.asarray(weights, dtype=float)[: u.size]
        omitted = 1.0 - w.sum()
        if omitted > tail_tol:
            raise ValueError(f"u column too short: omitted weight {omitted:.3g}")
    return float(np.dot(w, u[: w.size]))


def neutral_invasion_fitness(theta):
    """``(e^-theta - 1 + theta) / theta^2``, accurate also for small theta."""
    theta = np.asarray(theta, dtype=float)
    return (np.expm1(-theta) + theta) / theta**2


def model_fitness(model: LogisticModel, x, y, n_max: Optional[int] = None) -> float:
    """Invasion fitness of mutant ``y`` in resident ``x`` via the solver."""
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    theta = model.theta(x)
    N = default_n_max(theta) if n_max is None else n_max
    table = solve_fixation(FixationProblem(model.two_type(x, y), N), sensitivity=False)
    return invasion_fitness(theta, table.column(1))


@dataclass
class FDResult:
    """Central difference at ``step`` and ``step/2`` plus their Richardson combination."""
    value: float
    half_step: float
    richardson: float
    step: float


def chi_gradient_fd(model: LogisticModel, x, direction, step: float = 1e-4,
                    n_max: Optional[int] = None) -> FDResult:
    """Directional derivative of ``y -> chi(x, y)`` at ``y = x``.

    Only the mutant trait moves; all resident quantities are held fixed.
    ``step`` is relative to ``max(1, |x|)``.
    """
    x = np.atleast_1d(np.asarray(x, float))
    d = np.atleast_1d(np.asarray(direction, float))
    if not np.any(d):
        return FDResult(0.0, 0.0, 0.0, step)
    h = step * max(1.0, float(np.linalg.norm(x)))
    f = lambda t: model_fitness(model, x, x + t * d, n_max)
    full = (f(h) - f(-h)) / (2 * h)
    half = (f(h / 2) - f(-h / 2)) / h
    return FDResult(full, half, (4 * half - full) / 3, h)
