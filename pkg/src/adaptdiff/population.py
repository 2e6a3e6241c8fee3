"""Population model and exact event-driven simulation.

A population is a finite collection of individuals carrying real trait
vectors.  An individual with trait ``x`` gives birth at rate ``b(x)``; the
child mutates with probability ``gamma * mu`` and then carries ``x + h``
with ``h`` drawn from the mutation kernel.  It dies at rate
``d + sum_j c(x, y_j)`` over the *other* individuals ``y_j``, so a lone
individual never dies when ``d = 0``.
"""
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from . import kernels
from .rng import as_generator, run_blocks

__all__ = [
    "EventCapExceeded",
    "InvalidRates",
    "SelectionCoefficients",
    "TwoTypeParams",
    "StationaryLaw",
    "stationary_law",
    "alpha_stationary_law",
    "size_biased_law",
    "AffineBirth",
    "ConstantCompetition",
    "GaussianCompetition",
    "LinearCompetition",
    "MutationKernel",
    "LogisticModel",
    "PopulationState",
    "EventLog",
    "two_type_rates",
    "two_type_run",
    "two_type_ensemble",
    "gillespie_run",
    "first_substitutions",
    "population_snapshots",
    "mutant_production_rate",
    "DEFAULT_MAX_EVENTS",
]

DEFAULT_MAX_EVENTS = 10**9
DEFAULT_TAIL_TOL = 1e-12


class EventCapExceeded(RuntimeError):
    """A simulation hit its event-count watchdog."""


class InvalidRates(ValueError):
    """Rates are negative (or a birth rate is non-positive) at a visited state."""


def _check_status(status):
    status = np.asarray(status)
    if np.any(status == kernels.EVENT_CAP):
        raise EventCapExceeded(
            f"{int(np.sum(status == kernels.EVENT_CAP))} run(s) reached the event cap")
    if np.any(status == kernels.BAD_RATE):
        raise InvalidRates("a negative rate was encountered during simulation")


# ---------------------------------------------------------------------------
# two-type chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelectionCoefficients:
    """Additive departures of a mutant from its resident (advantage-positive).

    ``lam`` fertility, ``delta`` defence, ``alpha`` aggressiveness,
    ``epsilon`` isolation, ``sigma`` survival.
    """
    lam: float = 0.0
    delta: float = 0.0
    alpha: float = 0.0
    epsilon: float = 0.0
    sigma: float = 0.0

    NAMES = ("lambda", "delta", "alpha", "epsilon", "sigma")

    @classmethod
    def single(cls, name: str, value: float) -> "SelectionCoefficients":
        key = {"lambda": "lam", "lam": "lam"}.get(name, name)
        if key not in ("lam", "delta", "alpha", "epsilon", "sigma"):
            raise ValueError(f"unknown selection coefficient {name!r}")
        return cls(**{key: float(value)})

    def as_array(self):
        return np.array([self.lam, self.delta, self.alpha, self.epsilon, self.sigma])


@dataclass(frozen=True)
class TwoTypeParams:
    """Rate constants of the resident (type 1) / mutant (type 2) chain.

    ``c12`` is the competition pressure exerted by one mutant on a resident,
    ``c21`` that of a resident on a mutant.
    """
    b1: float
    b2: float
    c11: float
    c12: float
    c21: float
    c22: float
    d1: float = 0.0
    d2: float = 0.0

    @classmethod
    def from_selection(cls, b, c, d=0.0, s: Optional[SelectionCoefficients] = None,
                       **coeffs) -> "TwoTypeParams":
        """Build rates from a resident ``(b, c, d)`` and selection coefficients.

        Coefficients may be given as a :class:`SelectionCoefficients` or as
        keywords ``lam, delta, alpha, epsilon, sigma``.
        """
        if s is None:
            s = SelectionCoefficients(**coeffs)
        elif coeffs:
            raise TypeError("pass either s or keyword coefficients, not both")
        return cls(
            b1=b,
            b2=b + s.lam,
            c11=c,
            c12=c + s.alpha - s.epsilon,
            c21=c - s.delta - s.epsilon,
            c22=c - s.delta + s.alpha,
            d1=d,
            d2=d - s.sigma,
        )

    @classmethod
    def neutral(cls, b, c, d=0.0) -> "TwoTypeParams":
        return cls.from_selection(b, c, d)

    def as_array(self):
        return np.array([self.b1, self.b2, self.c11, self.c12, self.c21, self.c22,
                         self.d1, self.d2], dtype=float)

    def validate(self):
        if self.b1 <= 0 or self.b2 <= 0:
            raise InvalidRates("birth rates must be positive")
        for name in ("c11", "c12", "c21", "c22"):
            if getattr(self, name) < 0:
                raise InvalidRates(f"{name} must be nonnegative")
        return self


def two_type_rates(n: int, m: int, params: TwoTypeParams):
    """Return ``(birth1, birth2, death1, death2)`` at state ``(n, m)``.

    Raises
    ------
    InvalidRates
        If any of the four rates is negative at this state.
    """
    n = int(n)
    m = int(m)
    if n < 0 or m < 0 or (n == 0 and m == 0):
        raise ValueError("state must be nonnegative and not (0, 0)")
    p = params
    b1 = p.b1 * n
    b2 = p.b2 * m
    d1 = n * (p.c11 * (n - 1) + p.c12 * m + p.d1) if n else 0.0
    d2 = m * (p.c21 * n + p.c22 * (m - 1) + p.d2) if m else 0.0
    rates = (float(b1), float(b2), float(d1), float(d2))
    if min(rates) < 0:
        raise InvalidRates(f"negative rate at state ({n}, {m}): {rates}")
    return rates


def _two_type_block(rng, count, n0, m0, p, max_events):
    return kernels.two_type_batch(n0, m0, p, count, max_events, rng)


def two_type_run(n0: int, m0: int, params: TwoTypeParams, rng=None,
                 max_events: int = DEFAULT_MAX_EVENTS):
    """Simulate the two-type chain until one type disappears.

    Returns
    -------
    absorbed : {"mutant", "resident"}
        ``"mutant"`` when the mutant is the sole survivor.
    time : float
    jumps : int
        Number of jumps of the embedded chain.
    final_size : int
    """
    if n0 < 1 or m0 < 1:
        raise ValueError("two_type_run needs n0 >= 1 and m0 >= 1")
    two_type_rates(n0, m0, params)
    rng = as_generator(rng)
    fixed, t, k, size, status = kernels.two_type_batch(
        int(n0), int(m0), params.as_array(), 1, int(max_events), rng)
    _check_status(status)
    return ("mutant" if fixed[0] else "resident"), float(t[0]), int(k[0]), int(size[0])


def two_type_ensemble(n0: int, m0: int, params: TwoTypeParams, replicates: int, seed,
                      jobs: int = 1, max_events: int = DEFAULT_MAX_EVENTS, tag: int = 0):
    """Replicate :func:`two_type_run`; returns ``(fixed, times, jumps, sizes)`` arrays."""
    if n0 < 1 or m0 < 1:
        raise ValueError("two_type_ensemble needs n0 >= 1 and m0 >= 1")
    two_type_rates(n0, m0, params)
    fixed, t, k, size, status = run_blocks(
        _two_type_block, int(replicates), seed, int(n0), int(m0), params.as_array(),
        int(max_events), tag=tag, jobs=jobs)
    _check_status(status)
    return fixed.astype(bool), t, k, size


# ---------------------------------------------------------------------------
# stationary laws
# ---------------------------------------------------------------------------

@dataclass
class StationaryLaw:
    """Discrete law on ``{1, ..., len(probs)}`` with its summary numbers."""
    probs: np.ndarray
    mean: float
    normalizer: float
    tail_mass: float

    @property
    def support(self):
        return np.arange(1, self.probs.size + 1)


def _truncation_point(logw, tail_tol):
    """Smallest length whose omitted (normalised) mass is below ``tail_tol``."""
    w = np.exp(logw - logw.max())
    total = w.sum()
    tail = total - np.cumsum(w)
    idx = np.nonzero(tail / total < tail_tol)[0]
    return int(idx[0]) + 1 if idx.size else None


def _series_weights(logterm, tail_tol, start_len=64, max_len=10**7):
    length = start_len
    while length <= max_len:
        i = np.arange(1, length + 1, dtype=float)
        logw = logterm(i)
        if not np.all(np.isfinite(logw)):
            raise ValueError("non-finite series weights")
        # decreasing terms at the end and a negligible last term signal convergence
        if logw[-1] < logw.max() + np.log(tail_tol) - 40 and logw[-1] < logw[-2]:
            cut = _truncation_point(logw, tail_tol)
            if cut is not None:
                return logw, cut
        length *= 4
    raise ValueError("series did not converge to the requested tail tolerance")


def stationary_law(theta: float, tail_tol: float = DEFAULT_TAIL_TOL) -> StationaryLaw:
    """Poisson(theta) law conditioned on being nonzero.

    Parameters
    ----------
    theta : float
        Ratio of birth to competition rate, must be positive.
    tail_tol : float
        The returned vector omits a tail of mass below this value; the mean is
        exact.
    """
    theta = float(theta)
    if not theta > 0:
        raise ValueError("theta must be positive")
    if not 0 < tail_tol < 1:
        raise ValueError("tail_tol must lie in (0, 1)")
    logw, cut = _series_weights(lambda i: i * np.log(theta) - gammaln(i + 1), tail_tol)
    norm = -np.expm1(-theta)
    probs = np.exp(-theta + logw[:cut]) / norm
    mean = theta / norm
    return StationaryLaw(probs=probs, mean=mean, normalizer=norm,
                         tail_mass=max(0.0, 1.0 - probs.sum()))


def alpha_stationary_law(theta: float, alpha_exp: float,
                         tail_tol: float = DEFAULT_TAIL_TOL) -> StationaryLaw:
    """Stationary law when competition deaths grow like ``n^(1+alpha)``.

    Weights are ``theta^i / (i * ((i-1)!)^alpha)``; ``normalizer`` is their
    sum (so ``alpha_exp = 1`` gives ``e^theta - 1``).
    """
    theta = float(theta)
    alpha_exp = float(alpha_exp)
    if not theta > 0:
        raise ValueError("theta must be positive")
    if not alpha_exp > 0:
        raise ValueError("alpha_exp must be positive")
    if not 0 < tail_tol < 1:
        raise ValueError("tail_tol must lie in (0, 1)")
    logterm = lambda i: i * np.log(theta) - np.log(i) - alpha_exp * gammaln(i)
    logw, cut = _series_weights(logterm, tail_tol)
    shift = logw.max()
    w = np.exp(logw - shift)
    total = w.sum()
    probs = w[:cut] / total
    i = np.arange(1, logw.size + 1)
    mean = float((i * w).sum() / total)
    return StationaryLaw(probs=probs, mean=mean, normalizer=float(np.exp(shift) * total),
                         tail_mass=max(0.0, 1.0 - probs.sum()))


def size_biased_law(law: StationaryLaw, birth=None) -> np.ndarray:
    """Weights ``n b(n) P(n) / E(xi b(xi))`` on the support of ``law``.

    ``birth`` is a callable of the size, a constant, or None (constant birth).
    For constant birth this is ``e^-theta theta^(n-1)/(n-1)!`` for the
    zero-truncated Poisson law.
    """
    n = law.support
    if birth is None or np.isscalar(birth):
        bn = np.ones(n.size)
    else:
        bn = np.asarray([birth(int(k)) for k in n], dtype=float)
    w = n * bn * law.probs
    return w / w.sum()


def mutant_production_rate(mu: float, birth, theta: float,
                           tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Rate ``mu * E(xi b(xi))`` at which a stationary resident emits mutants.

    Parameters
    ----------
    mu : float
        Mutation probability per birth.
    birth : float or callable
        Per-capita birth rate, possibly a function of the population size.
    theta : float
        Parameter of the stationary size law.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    if np.isscalar(birth):
        return float(mu) * float(birth) * theta / (-np.expm1(-theta))
    law = stationary_law(theta, tail_tol)
    n = law.support
    bn = np.asarray([birth(int(k)) for k in n], dtype=float)
    return float(mu * np.sum(n * bn * law.probs) / (1.0 - law.tail_mass))


# ---------------------------------------------------------------------------
# structured population model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineBirth:
    """``b(x) = base + gradient . x``."""
    base: float
    gradient: tuple = (0.0,)

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(self.base + np.dot(self.gradient, x))

    def grad(self, x):
        return np.asarray(self.gradient, dtype=float)

    def pack(self):
        return np.concatenate([[self.base], np.asarray(self.gradient, dtype=float)])


@dataclass(frozen=True)
class ConstantCompetition:
    value: float

    def __call__(self, x, y):
        return float(self.value)

    def grad1(self, x):
        return np.zeros(np.atleast_1d(x).size)

    def grad2(self, x):
        return np.zeros(np.atleast_1d(x).size)

    def pack(self):
        return np.array([0.0, self.value, 1.0, 0.0])


@dataclass(frozen=True)
class GaussianCompetition:
    """Symmetric kernel ``floor + (scale - floor) exp(-|x-y|^2 / (2 width^2))``."""
    scale: float = 1.0
    width: float = 1.0
    floor: float = 0.0

    def __call__(self, x, y):
        d = np.atleast_1d(np.asarray(x, float)) - np.atleast_1d(np.asarray(y, float))
        return float(self.floor + (self.scale - self.floor)
                     * np.exp(-0.5 * np.dot(d, d) / self.width**2))

    def grad1(self, x):
        return np.zeros(np.atleast_1d(x).size)

    def grad2(self, x):
        return np.zeros(np.atleast_1d(x).size)

    def pack(self):
        return np.array([1.0, self.scale, self.width, self.floor])


@dataclass(frozen=True)
class LinearCompetition:
    """``c(x, y) = base + g1 . x + g2 . y``; a non-symmetric kernel for local checks."""
    base: float
    g1: tuple = (0.0,)
    g2: tuple = (0.0,)

    def __call__(self, x, y):
        x = np.atleast_1d(np.asarray(x, float))
        y = np.atleast_1d(np.asarray(y, float))
        return float(self.base + np.dot(self.g1, x) + np.dot(self.g2, y))

    def grad1(self, x):
        return np.asarray(self.g1, dtype=float)

    def grad2(self, x):
        return np.asarray(self.g2, dtype=float)

    def pack(self):
        return np.concatenate([[2.0, self.base], np.asarray(self.g1, float),
                               np.asarray(self.g2, float)])


@dataclass(frozen=True)
class MutationKernel:
    """Mutation probability and Gaussian step law ``N(mean, cov)``."""
    mu: float
    cov: np.ndarray
    mean: Optional[np.ndarray] = None

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T):
            raise ValueError("step covariance must be a symmetric matrix")
        if np.any(np.linalg.eigvalsh(cov) <= 0):
            raise ValueError("step covariance must be positive definite")
        if not 0 <= self.mu <= 1:
            raise ValueError("mu must be a probability")
        object.__setattr__(self, "cov", cov)
        mean = np.zeros(cov.shape[0]) if self.mean is None else np.asarray(self.mean, float)
        object.__setattr__(self, "mean", mean)

    @classmethod
    def isotropic(cls, mu, sd, dim=1, mean=None):
        return cls(mu=mu, cov=np.eye(dim) * sd**2, mean=mean)

    @property
    def dim(self):
        return self.cov.shape[0]

    @property
    def chol(self):
        return np.linalg.cholesky(self.cov)

    @property
    def sqrt_cov(self):
        """Symmetric (spectral) square root of the covariance."""
        w, v = np.linalg.eigh(self.cov)
        return (v * np.sqrt(w)) @ v.T

    def density(self, h):
        h = np.atleast_1d(np.asarray(h, float)) - self.mean
        k = self.dim
        sol = np.linalg.solve(self.cov, h)
        return float(np.exp(-0.5 * h @ sol) / np.sqrt((2 * np.pi) ** k * np.linalg.det(self.cov)))


@dataclass(frozen=True)
class LogisticModel:
    """Trait-dependent logistic birth-death model with mutation."""
    birth: AffineBirth
    competition: object
    kernel: MutationKernel
    natural_death: float = 0.0

    @property
    def dim(self):
        return self.kernel.dim

    def theta(self, x):
        return self.birth(x) / self.competition(x, x)

    def beta(self, x):
        """Mutant production rate of a stationary monomorphic population at ``x``."""
        return mutant_production_rate(self.kernel.mu, self.birth(x), self.theta(x))

    def two_type(self, x, y) -> TwoTypeParams:
        """Two-type rates for resident ``x`` and mutant ``y``."""
        return TwoTypeParams(
            b1=self.birth(x), b2=self.birth(y),
            c11=self.competition(x, x), c12=self.competition(x, y),
            c21=self.competition(y, x), c22=self.competition(y, y),
            d1=self.natural_death, d2=self.natural_death,
        )

    def packed(self):
        k = self.dim
        bpar = self.birth.pack()
        if bpar.size != k + 1:
            raise ValueError("birth gradient dimension does not match the kernel")
        return bpar, self.competition.pack()


@dataclass
class PopulationState:
    """Finite population: distinct traits (rows) with positive counts."""
    traits: np.ndarray
    counts: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.traits = np.atleast_2d(np.asarray(self.traits, dtype=float))
        self.counts = np.atleast_1d(np.asarray(self.counts, dtype=np.int64))
        if self.traits.shape[0] != self.counts.size or self.counts.size == 0:
            raise ValueError("traits and counts must be nonempty and of equal length")
        if np.any(self.counts < 1):
            raise ValueError("counts must be positive")
        if not np.all(np.isfinite(self.traits)):
            raise ValueError("traits must be finite")

    @classmethod
    def monomorphic(cls, x, size):
        return cls(traits=np.atleast_2d(np.asarray(x, float)), counts=[int(size)])

    @property
    def size(self):
        return int(self.counts.sum())


@dataclass
class EventLog:
    """Output of :func:`gillespie_run`.

    ``kinds`` uses 0 = birth, 1 = mutant birth, 2 = death.  ``mutation_times``
    are the tau markers; ``monomorphic_times`` (rho) and
    ``surviving_traits`` (V) are recorded each time the population becomes
    monomorphic after pending mutations.
    """
    times: np.ndarray
    kinds: np.ndarray
    traits: np.ndarray
    mutation_times: np.ndarray
    monomorphic_times: np.ndarray
    surviving_traits: np.ndarray
    final: PopulationState
    n_events: int
    stopped: bool
    sample_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sample_sizes: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    sample_ntypes: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    sample_traits: np.ndarray = field(default_factory=lambda: np.zeros((0, 1)))
    size_integral: float = 0.0
    size2_integral: float = 0.0

    KIND_NAMES = ("birth", "mutant-birth", "death")


def gillespie_run(initial: PopulationState, model: LogisticModel, gamma: float,
                  horizon: float, rng=None, sample_times: Optional[Sequence[float]] = None,
                  record_events: bool = True, max_record: int = 10**7,
                  stop_on_substitution: bool = False,
                  max_events: int = DEFAULT_MAX_EVENTS) -> EventLog:
    """Exact (SSA) simulation of the structured logistic population.

    Parameters
    ----------
    initial : PopulationState
    model : LogisticModel
    gamma : float
        Scaling of the mutation probability, in ``[0, 1]``.
    horizon : float
        Final time.
    sample_times : sequence of float, optional
        Increasing times at which the total size, number of types and first
        trait are recorded.
    record_events : bool
        Keep the per-event log (up to ``max_record`` events).
    stop_on_substitution : bool
        Stop at the first time the population is monomorphic at a trait
        different from the initial one (requires a monomorphic start).

    Raises
    ------
    EventCapExceeded
        When ``max_events`` events occur before the horizon.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    if initial.traits.shape[1] != model.dim:
        raise ValueError("trait dimension does not match the model")
    if stop_on_substitution and initial.counts.size != 1:
        raise ValueError("stop_on_substitution needs a monomorphic initial state")
    rng = as_generator(rng)
    bpar, cpar = model.packed()
    st = np.zeros(0) if sample_times is None else np.asarray(sample_times, dtype=float)
    if st.size and np.any(np.diff(st) < 0):
        raise ValueError("sample_times must be increasing")
    res = kernels.gl_run(
        initial.traits.copy(), initial.counts.copy(), bpar, cpar, float(model.natural_death),
        float(model.kernel.mu), float(gamma), model.kernel.mean.copy(), model.kernel.chol,
        float(horizon), bool(stop_on_substitution), st, int(max_events),
        int(max_record) if record_events else 0, rng)
    (t, status, n_events, traits, counts, tau, rho, v, ev_t, ev_k, ev_x,
     s_size, s_types, s_trait, int_n, int_n2) = res
    _check_status([status])
    return EventLog(
        times=ev_t, kinds=ev_k, traits=ev_x, mutation_times=tau, monomorphic_times=rho,
        surviving_traits=v, final=PopulationState(traits, counts, t), n_events=int(n_events),
        stopped=status == kernels.STOPPED, sample_times=st[: s_size.size],
        sample_sizes=s_size, sample_ntypes=s_types, sample_traits=s_trait,
        size_integral=float(int_n), size2_integral=float(int_n2))


def _first_sub_block(rng, count, x0, theta, bpar, cpar, dnat, mu, gamma, mean, chol,
                     horizon, max_events):
    sizes = _draw_stationary_sizes(rng, theta, count)
    return kernels.gl_first_substitution_batch(sizes, x0, bpar, cpar, dnat, mu, gamma, mean,
                                               chol, horizon, max_events, rng)


def _draw_stationary_sizes(rng, theta, count):
    law = stationary_law(theta)
    p = law.probs / law.probs.sum()
    return (rng.choice(p.size, size=count, p=p) + 1).astype(np.int64)


def first_substitutions(model: LogisticModel, x0, gamma: float, replicates: int, seed,
                        horizon: float = np.inf, jobs: int = 1,
                        max_events: int = DEFAULT_MAX_EVENTS, tag: int = 0):
    """First substitution time and trait for many monomorphic starts.

    Each replicate starts from ``x0`` with a size drawn from the stationary
    law.  Returns ``(rho, V)`` with ``rho`` of shape ``(replicates,)`` and
    ``V`` of shape ``(replicates, k)``; entries are NaN for runs that did
    not substitute before ``horizon``.
    """
    x0 = np.atleast_1d(np.asarray(x0, float))
    bpar, cpar = model.packed()
    k = model.dim
    out = run_blocks(
        _first_sub_block_flat, int(replicates), seed, x0, model.theta(x0), bpar, cpar,
        float(model.natural_death), float(model.kernel.mu), float(gamma),
        model.kernel.mean.copy(), model.kernel.chol, float(horizon), int(max_events),
        tag=tag, jobs=jobs)
    rho, status = out[0], out[-1]
    v = np.column_stack(out[1:1 + k])
    _check_status(status)
    return rho, v


def _first_sub_block_flat(rng, count, *args):
    rho, v, status = _first_sub_block(rng, count, *args)
    return (rho,) + tuple(v[:, j] for j in range(v.shape[1])) + (status,)


def _snapshot_block(rng, count, size0, x0, bpar, cpar, dnat, mu, gamma, mean, chol, horizon,
                    max_events):
    sizes = np.full(count, size0, dtype=np.int64)
    size, ntypes, trait, status = kernels.gl_snapshot_batch(
        sizes, x0, bpar, cpar, dnat, mu, gamma, mean, chol, horizon, max_events, rng)
    return (size, ntypes) + tuple(trait[:, j] for j in range(trait.shape[1])) + (status,)


def population_snapshots(model: LogisticModel, x0, gamma: float, horizon: float,
                         replicates: int, seed, initial_size: int = 1, jobs: int = 1,
                         max_events: int = DEFAULT_MAX_EVENTS, tag: int = 0):
    """Independent runs from ``initial_size`` individuals at ``x0``, observed at ``horizon``.

    Returns ``(size, ntypes, trait)``; ``trait`` (replicates x k) is the trait
    of the first live type, meaningful for monomorphic samples.
    """
    if initial_size < 1:
        raise ValueError("initial_size must be at least 1")
    x0 = np.atleast_1d(np.asarray(x0, float))
    bpar, cpar = model.packed()
    out = run_blocks(_snapshot_block, int(replicates), seed, int(initial_size), x0, bpar, cpar,
                     float(model.natural_death), float(model.kernel.mu), float(gamma),
                     model.kernel.mean.copy(), model.kernel.chol, float(horizon),
                     int(max_events), tag=tag, jobs=jobs)
    _check_status(out[-1])
    return out[0], out[1], np.column_stack(out[2:-1])
