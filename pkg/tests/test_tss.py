import numpy as np
import pytest

from adaptdiff.population import LogisticModel, MutationKernel
from adaptdiff.tss import (ClosedFormFitness, MonteCarloFitness, SolverFitness,
                           TabulatedFitness, TssConfig, simulate_tss, total_jump_intensity,
                           tss_ensemble_1d)

from conftest import within


def test_providers_agree_near_neutrality(gaussian_model):
    sf = SolverFitness(gaussian_model)
    cf = ClosedFormFitness(gaussian_model)
    for h in (-0.02, 0.0, 0.03):
        assert cf.chi([0.2], [0.2 + h]) == pytest.approx(sf.chi([0.2], [0.2 + h]), abs=2e-4)
    mc = MonteCarloFitness(gaussian_model, replicates=20000, seed=3)
    p = sf.chi([0.0], [0.1])
    assert within(mc.chi([0.0], [0.1]), p, np.sqrt(p * (1 - p) / 20000))


def test_tabulated_matches_solver_on_nodes(slope_model):
    tab = TabulatedFitness.build(slope_model, [-0.5, 0.0, 0.5], np.linspace(-0.2, 0.2, 5))
    sf = SolverFitness(slope_model, quantum=0.0)
    assert tab.chi([0.0], [0.1]) == pytest.approx(sf.chi([0.0], [0.1]), abs=1e-12)


def test_thinning_and_embedded_agree(slope_model):
    sf = SolverFitness(slope_model, quantum=1e-4)
    rng = np.random.default_rng(1)
    means = {}
    for mode in ("thinning", "embedded"):
        t = [simulate_tss(TssConfig([0.0], slope_model, sf, 1e4, mode=mode,
                                    stop_at_first_jump=True), rng).jumps[0].time
             for _ in range(1500)]
        means[mode] = (np.mean(t), np.std(t) / np.sqrt(len(t)))
    (a, sa), (b, sb) = means.values()
    assert within(a, b, np.hypot(sa, sb))


def test_jump_rate_integral(slope_model):
    sf = SolverFitness(slope_model, quantum=0.0)
    rate = total_jump_intensity(slope_model, [0.0], sf)
    # first-jump times are exponential with this rate
    tab = TabulatedFitness.build(slope_model, [-0.5, 0.5], np.linspace(-0.6, 0.6, 121))
    out = tss_ensemble_1d(slope_model, 0.0, tab, 20000, seed=2, first_jump=True)
    t = out["first_time"]
    assert within(t.mean(), 1 / rate, t.std() / np.sqrt(t.size))


def test_no_mutation_no_jumps(slope_model):
    frozen = LogisticModel(slope_model.birth, slope_model.competition,
                           MutationKernel(0.0, slope_model.kernel.cov))
    path = simulate_tss(TssConfig([0.0], frozen, SolverFitness(frozen), 100.0), rng=1)
    assert path.accepted == 0 and path.end_trait[0] == 0.0
    tab = TabulatedFitness.build(frozen, [-1.0, 1.0], [-0.1, 0.1])
    out = tss_ensemble_1d(frozen, 0.0, tab, 10, seed=1, record_times=[10.0])
    assert np.all(out["jumps"] == 0) and np.all(out["states"] == 0.0)


def test_path_accessors(slope_model):
    path = simulate_tss(TssConfig([0.0], slope_model, SolverFitness(slope_model, quantum=1e-4),
                                  200.0), rng=5)
    assert path.state_at(0.0)[0] == 0.0
    if path.jumps:
        j = path.jumps[-1]
        assert np.array_equal(path.state_at(j.time), j.to_trait)
    rows = path.rows()
    assert rows[0][-1] == "start" and rows[-1][-1] == "end"


def test_ensemble_deterministic(gaussian_model):
    tab = TabulatedFitness.build(gaussian_model, np.linspace(-2, 2, 5), np.linspace(-0.3, 0.3, 7))
    a = tss_ensemble_1d(gaussian_model, 0.0, tab, 300, seed=9, record_times=[0.2], eps=0.05)
    b = tss_ensemble_1d(gaussian_model, 0.0, tab, 300, seed=9, record_times=[0.2], eps=0.05,
                        jobs=2)
    assert np.array_equal(a["states"], b["states"])
