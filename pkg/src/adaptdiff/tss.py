"""Trait substitution sequence (rare-mutation limit jump process).

A monomorphic population at trait ``x`` emits mutants at rate ``beta(x)``;
a mutant ``x + h`` (``h`` from the mutation kernel) replaces the resident
with probability ``chi(x, x + h)``, the fixation probability of one mutant
entering a resident population at size-biased stationary size.

Two constructions are offered and agree in law:

``thinning``
    exponential clock of rate ``beta(x)``; accept the proposal with
    probability ``chi(x, x + h)``.
``embedded``
    unit-rate Poisson clock run on the time scale ``int beta(S) ds``;
    each step draws a resident size ``n`` from the size-biased law and
    fixes the mutant with probability ``u[n, 1](x, x + h)``.
"""
import threading
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import integrate

from . import kernels
from .fixation import (FixationProblem, invasion_fitness, neutral_invasion_fitness,
                       solve_fixation)
from .invasibility import Invasibility
from .population import LogisticModel, two_type_run
from .rng import as_generator, run_blocks

__all__ = [
    "ClosedFormFitness",
    "SolverFitness",
    "MonteCarloFitness",
    "TabulatedFitness",
    "TssConfig",
    "JumpRecord",
    "TssPath",
    "simulate_tss",
    "tss_jump_rate_density",
    "total_jump_intensity",
    "tss_ensemble_1d",
    "fitness_n_max",
]


def fitness_n_max(theta: float, tail_tol: float = 1e-12) -> int:
    """Grid size sufficient for ``chi``: twice the Poisson tail cut plus a margin.

    The doubling check in :func:`solve_fixation` confirms the choice.
    """
    from scipy.stats import poisson
    cut = int(poisson.isf(tail_tol, theta)) + 2
    return max(2 * cut + 10, 40)


def _size_biased_draw(rng, theta):
    # weight of n is the Poisson(theta) mass at n - 1
    return 1 + int(rng.poisson(theta))


class ClosedFormFitness:
    """First-order expansion of ``chi`` around neutrality.

    ``chi(x, x+h) ~ chi(x, x) + grad_2 chi(x, x) . h`` with the neutral value
    and gradient in closed form; exact on neutral landscapes.  Values are
    clipped to ``[0, 1]``.  ``u[n, 1]`` is expanded the same way through the
    invasibility coefficients.
    """

    name = "closed_form"

    def __init__(self, model: LogisticModel, k_max: int = 2000):
        self.model = model
        self.k_max = k_max
        self._cache = {}

    def _point(self, x):
        key = tuple(np.round(np.atleast_1d(x), 12))
        if key not in self._cache:
            m = self.model
            c = m.competition(x, x)
            inv = Invasibility(m.birth(x), c, 0.0, k_max=self.k_max)
            theta = inv.theta
            gb = m.birth.grad(x)
            g1 = m.competition.grad1(x)
            g2 = m.competition.grad2(x)
            grad = inv.grad2_chi(gb, g1, g2) if np.any(gb) or np.any(g1) or np.any(g2) \
                else np.zeros_like(gb)
            self._cache[key] = (theta, float(neutral_invasion_fitness(theta)), grad, inv,
                                (gb, g1, g2))
        return self._cache[key]

    def chi(self, x, y):
        theta, chi0, grad, _, _ = self._point(x)
        h = np.atleast_1d(y) - np.atleast_1d(x)
        return float(np.clip(chi0 + grad @ h, 0.0, 1.0))

    def u1(self, x, y, n):
        _, _, _, inv, (gb, g1, g2) = self._point(x)
        h = np.atleast_1d(y) - np.atleast_1d(x)
        p = 1.0 / (n + 1)
        s = n + 1
        lin = (inv.g("lambda", s) * (gb @ h) - inv.g("delta", s) * (g1 @ h)
               + inv.g("alpha", s) * (g2 @ h)) if (np.any(gb) or np.any(g1) or np.any(g2)) else 0.0
        return float(np.clip(p + p * (1 - p) * lin, 0.0, 1.0))


class SolverFitness:
    """Fitness from the fixation solver, memoised per quantised trait pair."""

    name = "solver"

    def __init__(self, model: LogisticModel, n_max: Optional[int] = None,
                 quantum: float = 1e-12):
        self.model = model
        self.n_max = n_max
        self.quantum = quantum
        self._memo = {}
        self._lock = threading.Lock()

    def _key(self, x, y):
        q = self.quantum
        if q <= 0:  # exact keys
            return (tuple(np.atleast_1d(np.asarray(x, float)).tolist()),
                    tuple(np.atleast_1d(np.asarray(y, float)).tolist()))
        return (tuple(np.round(np.atleast_1d(x) / q).astype(np.int64)),
                tuple(np.round(np.atleast_1d(y) / q).astype(np.int64)))

    def column(self, x, y):
        key = self._key(x, y)
        with self._lock:
            hit = self._memo.get(key)
        if hit is not None:
            return hit
        m = self.model
        theta = m.theta(x)
        N = self.n_max or fitness_n_max(theta)
        table = solve_fixation(FixationProblem(m.two_type(x, y), N), sensitivity=False)
        col = table.column(1)
        val = (col, invasion_fitness(theta, col))
        with self._lock:
            self._memo[key] = val
        return val

    def chi(self, x, y):
        return self.column(x, y)[1]

    def u1(self, x, y, n):
        col = self.column(x, y)[0]
        return float(col[n - 1]) if n <= col.size else float(col[-1])


class MonteCarloFitness:
    """Fitness by direct simulation of the invasion of one mutant.

    :meth:`accept` runs a single invasion, which is an exact Bernoulli
    draw with success probability ``chi``; :meth:`chi` averages
    ``replicates`` of them.
    """

    name = "mc"

    def __init__(self, model: LogisticModel, replicates: int = 10_000, seed=0):
        self.model = model
        self.replicates = replicates
        self._rng = as_generator(seed)

    def invade(self, x, y, n, rng):
        params = self.model.two_type(x, y)
        return two_type_run(n, 1, params, rng)[0] == "mutant"

    def accept(self, x, y, rng):
        n = _size_biased_draw(rng, self.model.theta(x))
        return self.invade(x, y, n, rng)

    def chi(self, x, y):
        hits = sum(self.accept(x, y, self._rng) for _ in range(self.replicates))
        return hits / self.replicates


@dataclass
class TabulatedFitness:
    """``chi(x, x + delta)`` on a uniform grid, interpolated bilinearly (1-D traits)."""
    x_grid: np.ndarray
    delta_grid: np.ndarray
    table: np.ndarray
    name: str = "tabulated"

    @classmethod
    def build(cls, model: LogisticModel, x_grid, delta_grid, n_max: Optional[int] = None):
        if model.dim != 1:
            raise ValueError("tabulated fitness supports one-dimensional traits")
        xg = np.asarray(x_grid, float)
        dg = np.asarray(delta_grid, float)
        for g in (xg, dg):
            if g.size < 2 or not np.allclose(np.diff(g), g[1] - g[0]):
                raise ValueError("grids must be uniform with at least two points")
        tab = np.empty((xg.size, dg.size))
        for i, x in enumerate(xg):
            theta = model.theta([x])
            N = n_max or fitness_n_max(theta)
            for j, d in enumerate(dg):
                t = solve_fixation(FixationProblem(model.two_type([x], [x + d]), N),
                                   sensitivity=False)
                tab[i, j] = invasion_fitness(theta, t.column(1))
        return cls(xg, dg, tab)

    def chi(self, x, y):
        x = float(np.atleast_1d(x)[0])
        d = float(np.atleast_1d(y)[0]) - x
        val, _ = kernels.table_lookup(x, d, self.x_grid[0], self.x_grid[1] - self.x_grid[0],
                                      self.x_grid.size, self.delta_grid[0],
                                      self.delta_grid[1] - self.delta_grid[0],
                                      self.delta_grid.size, self.table)
        return float(val)


@dataclass
class TssConfig:
    """Inputs of :func:`simulate_tss`.

    ``eps`` contracts the mutation steps by ``eps`` and speeds time up by
    ``1 / eps^2`` (``eps = 1`` is the plain process).
    """
    initial_trait: np.ndarray
    model: LogisticModel
    fitness: object
    horizon: float
    mode: str = "thinning"
    eps: float = 1.0
    max_proposals: int = 10**8
    stop_at_first_jump: bool = False

    def __post_init__(self):
        self.initial_trait = np.atleast_1d(np.asarray(self.initial_trait, float))
        if self.mode not in ("thinning", "embedded"):
            raise ValueError("mode must be 'thinning' or 'embedded'")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")


@dataclass
class JumpRecord:
    time: float
    from_trait: np.ndarray
    to_trait: np.ndarray
    proposal_count: int


@dataclass
class TssPath:
    initial_trait: np.ndarray
    jumps: List[JumpRecord] = field(default_factory=list)
    proposals: int = 0
    end_time: float = 0.0
    end_trait: Optional[np.ndarray] = None

    @property
    def accepted(self):
        return len(self.jumps)

    def state_at(self, t):
        x = self.initial_trait
        for j in self.jumps:
            if j.time > t:
                break
            x = j.to_trait
        return x

    def rows(self):
        """``(time, coordinates..., event)`` rows for CSV export."""
        out = [(0.0, *self.initial_trait, "start")]
        out += [(j.time, *j.to_trait, "jump") for j in self.jumps]
        out.append((self.end_time, *self.end_trait, "end"))
        return out


def _accept(fitness, x, y, rng, mode, theta):
    if mode == "thinning":
        if hasattr(fitness, "accept"):
            return fitness.accept(x, y, rng)
        return rng.random() < fitness.chi(x, y)
    n = _size_biased_draw(rng, theta)
    if hasattr(fitness, "invade"):
        return fitness.invade(x, y, n, rng)
    return rng.random() < fitness.u1(x, y, n)


def simulate_tss(config: TssConfig, rng=None) -> TssPath:
    """Simulate one TSS path up to ``config.horizon`` (or the first jump)."""
    rng = as_generator(rng)
    m = config.model
    kern = m.kernel
    x = config.initial_trait.copy()
    path = TssPath(initial_trait=x.copy())
    t = 0.0
    since = 0
    chol = kern.chol
    scale = 1.0 / config.eps**2
    if kern.mu == 0:
        path.end_time = config.horizon
        path.end_trait = x
        return path
    while True:
        beta = m.beta(x) * scale
        if config.mode == "thinning":
            t += rng.exponential() / beta
        else:
            # unit Poisson increment mapped back through the clock int beta(S) ds
            t += rng.exponential(1.0) / beta
        if t > config.horizon:
            break
        h = config.eps * (kern.mean + chol @ rng.standard_normal(m.dim))
        y = x + h
        path.proposals += 1
        since += 1
        if _accept(config.fitness, x, y, rng, config.mode, m.theta(x)):
            path.jumps.append(JumpRecord(t, x.copy(), y.copy(), since))
            since = 0
            x = y
            if config.stop_at_first_jump:
                break
        if path.proposals >= config.max_proposals:
            raise RuntimeError("TSS proposal cap reached")
    path.end_time = min(t, config.horizon) if not config.stop_at_first_jump else t
    path.end_trait = x
    return path


def tss_jump_rate_density(model: LogisticModel, x, h, fitness) -> float:
    """Jump intensity density ``beta(x) chi(x, x+h) m(x, h)``."""
    x = np.atleast_1d(np.asarray(x, float))
    h = np.atleast_1d(np.asarray(h, float))
    dens = model.kernel.density(h)
    if dens == 0:
        return 0.0
    return model.beta(x) * fitness.chi(x, x + h) * dens


def total_jump_intensity(model: LogisticModel, x, fitness, width: float = 8.0) -> float:
    """Integral of :func:`tss_jump_rate_density` over steps (one-dimensional traits)."""
    if model.dim != 1:
        raise ValueError("numerical integration implemented for k = 1")
    sd = float(np.sqrt(model.kernel.cov[0, 0]))
    mu0 = float(model.kernel.mean[0])
    f = lambda h: tss_jump_rate_density(model, x, h, fitness)
    return integrate.quad(f, mu0 - width * sd, mu0 + width * sd, epsabs=1e-12, limit=200)[0]


def _ens_block(rng, count, x0, bpar, cpar, mu, sd, eps, rec, stop_first, xlo, dx, dlo, dd,
               table, max_props):
    states, ft, fs, props, jumps, outside = kernels.tss_batch_1d(
        x0, bpar, cpar, mu, sd, eps, rec, stop_first, xlo, dx, dlo, dd, table, count,
        max_props, rng)
    cols = tuple(states[:, j] for j in range(states.shape[1]))
    flag = np.zeros(count, np.int64)
    flag[0] = outside
    return cols + (ft, fs, props, jumps, flag)


def tss_ensemble_1d(model: LogisticModel, x0: float, fitness: TabulatedFitness, replicates: int,
                    seed, record_times=(), eps: float = 1.0, first_jump: bool = False,
                    jobs: int = 1, max_proposals: int = 10**9, tag: int = 0):
    """Compiled TSS ensemble for one-dimensional traits on a tabulated landscape.

    Returns a dict with ``states`` (replicates x len(record_times)),
    ``first_time``, ``first_step``, ``proposals``, ``jumps`` and
    ``outside`` (number of table lookups outside the grid, clamped).
    """
    if model.dim != 1:
        raise ValueError("tss_ensemble_1d needs a one-dimensional model")
    if np.any(model.kernel.mean != 0):
        raise ValueError("tss_ensemble_1d assumes a centred kernel")
    rec = np.asarray(record_times, dtype=float)
    if not first_jump and rec.size == 0:
        raise ValueError("give record_times or first_jump=True")
    bpar, cpar = model.packed()
    sd = float(np.sqrt(model.kernel.cov[0, 0]))
    xg, dg = fitness.x_grid, fitness.delta_grid
    out = run_blocks(_ens_block, int(replicates), seed, float(x0), bpar, cpar,
                     float(model.kernel.mu), sd, float(eps), rec, bool(first_jump),
                     float(xg[0]), float(xg[1] - xg[0]), float(dg[0]), float(dg[1] - dg[0]),
                     fitness.table, int(max_proposals), tag=tag, jobs=jobs)
    nrec = rec.size
    states = np.column_stack(out[:nrec]) if nrec else np.zeros((replicates, 0))
    ft, fs, props, jumps, outside = out[nrec:]
    return {"states": states, "first_time": ft, "first_step": fs, "proposals": props,
            "jumps": jumps, "outside": int(outside.sum())}
