"""Finite logistic populations, the trait substitution sequence and the
canonical diffusion of adaptive dynamics.

Hot loops are compiled with numba when available; set the environment
variable ``ADAPTDIFF_DISABLE_NUMBA=1`` to run the pure-Python fallback.
"""
__version__ = "0.1.0"

from ._accel import backend
from .population import (AffineBirth, ConstantCompetition, GaussianCompetition,
                         LinearCompetition, LogisticModel, MutationKernel, PopulationState,
                         SelectionCoefficients, TwoTypeParams, gillespie_run, stationary_law)
from .fixation import FixationProblem, invasion_fitness, solve_fixation
from .invasibility import Invasibility, q_genealogy
from .tss import TssConfig, simulate_tss
from .diffusion import build_coefficients, euler_maruyama

__all__ = [
    "__version__",
    "backend",
    "AffineBirth",
    "ConstantCompetition",
    "GaussianCompetition",
    "LinearCompetition",
    "LogisticModel",
    "MutationKernel",
    "PopulationState",
    "SelectionCoefficients",
    "TwoTypeParams",
    "gillespie_run",
    "stationary_law",
    "FixationProblem",
    "invasion_fitness",
    "solve_fixation",
    "Invasibility",
    "q_genealogy",
    "TssConfig",
    "simulate_tss",
    "build_coefficients",
    "euler_maruyama",
]
