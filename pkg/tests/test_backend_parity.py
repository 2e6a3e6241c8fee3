"""The compiled kernels and the pure-Python fallback consume the same random
streams and must produce identical output."""
import json
import os
import subprocess
import sys

import pytest

SCRIPT = r"""
import json, numpy as np
from adaptdiff import backend
from adaptdiff.population import *
from adaptdiff.invasibility import q_genealogy
from adaptdiff.tss import TabulatedFitness, tss_ensemble_1d
m = LogisticModel(AffineBirth(1.0, (0.1,)), GaussianCompetition(1, 1),
                  MutationKernel.isotropic(0.3, 0.1, 1))
f, t, k, s = two_type_ensemble(3, 2, TwoTypeParams.from_selection(1, 1, lam=0.2), 200, 5)
rho, V = first_substitutions(m, [0.0], 0.05, 20, 5)
log = gillespie_run(PopulationState.monomorphic([0.0], 3), m, 0.1, 50.0, rng=4)
g = q_genealogy(1, 1, 0, 6, method="monte_carlo", replicates=500, seed=3)
tab = TabulatedFitness.build(m, [-1.0, 1.0], [-0.3, 0.0, 0.3])
e = tss_ensemble_1d(m, 0.0, tab, 50, 2, record_times=[5.0])
print(json.dumps({"backend": backend(), "values": [
    int(f.sum()), float(t.sum()), int(k.sum()), float(np.nansum(rho)), float(np.nansum(V)),
    int(log.n_events), float(log.times.sum()), float(np.nansum(g.q2)),
    float(e["states"].sum()), int(e["proposals"].sum())]}))
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("ADAPTDIFF_DISABLE_NUMBA", None)
    if disable:
        env["ADAPTDIFF_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True,
                         text=True, timeout=600)
    assert out.returncode == 0, out.stderr
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_fallback_matches_compiled():
    fast, slow = _run(False), _run(True)
    assert slow["backend"] == "python"
    assert fast["values"] == slow["values"]
