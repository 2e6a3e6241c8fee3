import numpy as np
import pytest
from scipy import stats

from adaptdiff.population import (EventCapExceeded, InvalidRates, LogisticModel, MutationKernel,
                                  PopulationState, TwoTypeParams, alpha_stationary_law,
                                  first_substitutions, gillespie_run, mutant_production_rate,
                                  population_snapshots, size_biased_law, stationary_law,
                                  two_type_ensemble, two_type_rates, two_type_run)
from adaptdiff.rng import run_blocks

from conftest import within


@pytest.mark.parametrize("theta", [0.5, 1.0, 3.0])
def test_stationary_law_is_zero_truncated_poisson(theta):
    law = stationary_law(theta)
    n = law.support
    ref = stats.poisson.pmf(n, theta) / (1 - np.exp(-theta))
    assert np.allclose(law.probs, ref, atol=1e-14)
    assert law.mean == pytest.approx(theta / (1 - np.exp(-theta)), rel=1e-12)
    assert law.tail_mass < 1e-12


def test_alpha_law_reduces_to_logistic_case():
    a = alpha_stationary_law(1.5, 1.0)
    b = stationary_law(1.5)
    k = min(a.probs.size, b.probs.size)
    assert np.allclose(a.probs[:k], b.probs[:k], atol=1e-12)


def test_size_biased_law_is_shifted_poisson():
    theta = 2.0
    law = stationary_law(theta)
    sb = size_biased_law(law)
    n = law.support
    assert np.allclose(sb, stats.poisson.pmf(n - 1, theta), atol=1e-13)


def test_mutant_production_rate():
    assert mutant_production_rate(0.1, 1.0, 1.0) == pytest.approx(
        0.1 / (1 - np.exp(-1.0)), rel=1e-12)


def test_two_type_rates_neutral_and_invalid():
    p = TwoTypeParams.neutral(1.0, 1.0)
    r = two_type_rates(3, 2, p)
    assert np.allclose(r, [3.0, 2.0, 3 * 4.0, 2 * 4.0])
    bad = TwoTypeParams.from_selection(1.0, 1.0, 0.0, sigma=1.5)
    with pytest.raises(InvalidRates):
        two_type_rates(1, 1, bad)


def test_two_type_run_absorbs():
    outcome, t, jumps, size = two_type_run(2, 2, TwoTypeParams.neutral(1.0, 1.0), rng=1)
    assert outcome in ("mutant", "resident")
    assert t > 0 and jumps > 0 and size >= 1


def test_neutral_fixation_frequency():
    fixed, *_ = two_type_ensemble(3, 2, TwoTypeParams.neutral(1.0, 1.0), 20000, seed=2)
    p = fixed.mean()
    assert within(p, 0.4, np.sqrt(0.24 / fixed.size))


def test_ensemble_independent_of_jobs():
    p = TwoTypeParams.from_selection(1.0, 1.0, lam=0.3)
    a = two_type_ensemble(4, 1, p, 3000, seed=7, jobs=1)
    b = two_type_ensemble(4, 1, p, 3000, seed=7, jobs=2)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_run_blocks_is_deterministic():
    f = lambda rng, n: (rng.random(n),)
    assert np.array_equal(run_blocks(f, 5000, 3)[0], run_blocks(f, 5000, 3)[0])
    assert not np.array_equal(run_blocks(f, 5000, 3)[0], run_blocks(f, 5000, 4)[0])


def test_gillespie_without_mutation_stays_monomorphic(slope_model):
    frozen = LogisticModel(slope_model.birth, slope_model.competition,
                           MutationKernel(0.0, slope_model.kernel.cov))
    log = gillespie_run(PopulationState.monomorphic([0.0], 2), frozen, 1.0, 2000.0, rng=3)
    assert log.final.traits.shape[0] == 1
    assert np.all(log.kinds != 1)
    # ergodic average of the size against the stationary mean
    assert log.size_integral / 2000.0 == pytest.approx(stationary_law(1.0).mean, rel=0.05)


def test_gillespie_never_empties(slope_model):
    log = gillespie_run(PopulationState.monomorphic([0.0], 1), slope_model, 0.5, 500.0, rng=4)
    assert log.final.size >= 1
    assert np.all(np.diff(log.times) >= 0)


def test_event_cap(slope_model):
    with pytest.raises(EventCapExceeded):
        gillespie_run(PopulationState.monomorphic([0.0], 5), slope_model, 0.1, 1e6, rng=1,
                      max_events=100)


def test_first_substitutions_shapes(slope_model):
    rho, v = first_substitutions(slope_model, [0.0], 0.05, 50, seed=1)
    assert rho.shape == (50,) and v.shape == (50, 1)
    assert np.all(rho[~np.isnan(rho)] > 0)
    assert np.all(v[~np.isnan(rho), 0] != 0.0)


def test_snapshots_follow_stationary_law(slope_model):
    size, ntypes, _ = population_snapshots(slope_model, [0.0], 1e-3, 100.0, 20000, seed=5)
    law = stationary_law(1.0)
    p1 = np.mean(size[ntypes == 1] == 1)
    assert within(p1, law.probs[0], np.sqrt(law.probs[0] * (1 - law.probs[0]) / size.size))
