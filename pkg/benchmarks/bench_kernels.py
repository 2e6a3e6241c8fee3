"""Time the compiled kernels against the pure-Python fallback.

Each backend runs in its own interpreter because the backend is chosen at
import time from ``ADAPTDIFF_DISABLE_NUMBA``.  The compiled timing excludes
JIT compilation (one warm-up call per kernel).

Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``
"""
import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time
import numpy as np
from adaptdiff import backend
from adaptdiff.population import (AffineBirth, GaussianCompetition, LogisticModel,
                                  MutationKernel, TwoTypeParams, first_substitutions,
                                  two_type_ensemble)
from adaptdiff.invasibility import q_genealogy
from adaptdiff.tss import TabulatedFitness, tss_ensemble_1d

repeat = int(sys.argv[1])
m = LogisticModel(AffineBirth(1.0, (0.1,)), GaussianCompetition(1, 1),
                  MutationKernel.isotropic(0.3, 0.1, 1))
tab = TabulatedFitness.build(m, np.linspace(-2, 2, 9), np.linspace(-0.5, 0.5, 11))
params = TwoTypeParams.from_selection(1, 1, lam=0.1)
cases = {
    "two_type_ensemble (2e4 runs)": lambda n: two_type_ensemble(3, 1, params, n, 1),
    "first_substitutions (2e3 runs)": lambda n: first_substitutions(m, [0.0], 0.05, n // 10, 1),
    "q_genealogy MC (n=20, 2e4 runs)": lambda n: q_genealogy(1, 1, 0, 20, method="monte_carlo",
                                                             replicates=n, seed=1),
    "tss_ensemble_1d (2e4 paths)": lambda n: tss_ensemble_1d(m, 0.0, tab, n, 1,
                                                             record_times=[20.0]),
}
out = {"backend": backend(), "timings": {}}
for name, fn in cases.items():
    fn(20)  # warm-up / JIT compilation
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(20000)
        best = min(best, time.perf_counter() - t0)
    out["timings"][name] = best
print(json.dumps(out))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("ADAPTDIFF_DISABLE_NUMBA", None)
    if disable:
        env["ADAPTDIFF_DISABLE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    print(f"{'kernel':36s} {fast['backend']:>10s} {slow['backend']:>10s} {'speedup':>8s}")
    for name, t_fast in fast["timings"].items():
        t_slow = slow["timings"][name]
        print(f"{name:36s} {t_fast:9.3f}s {t_slow:9.3f}s {t_slow / t_fast:7.1f}x")


if __name__ == "__main__":
    main()
