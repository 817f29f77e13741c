import math

import numpy as np
import pytest
from pydantic import ValidationError

from failsafe_nr.config_setup import DEFAULT_SEED, Approach, Regime, SimulationConfig, SumLaw
from failsafe_nr.core.nr_distribution import NrDistribution, nr_moments, sum_params
from failsafe_nr.errors import DomainError, EmptyBatchError
from failsafe_nr.montecarlo.simulate import (
    SimulationBatch,
    draw_sums,
    rejection_rate,
    simulate,
    simulate_half_normal_sums,
    simulate_nr,
)
from failsafe_nr.normal_kit import SQRT_2_OVER_PI, std_normal_cdf
from failsafe_nr.utils.seed import BLOCK_DRAWS, SEED_ENV_VAR, block_size, resolve_seed


def test_single_study_sums_are_half_normal():
    batch = simulate_half_normal_sums(1, 100_000, seed=3)
    assert batch.regime == Regime.SUMS_ONLY
    assert batch.alpha is None
    assert np.all(batch.values >= 0)
    assert np.mean(batch.values) == pytest.approx(SQRT_2_OVER_PI, abs=0.01)


def test_same_seed_same_values():
    a = simulate_nr(20, reps=5000, seed=11)
    b = simulate_nr(20, reps=5000, seed=11)
    c = simulate_nr(20, reps=5000, seed=12)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_values_do_not_depend_on_worker_count():
    # 30000 reps at k=100 span three blocks
    assert block_size(100) * 2 < 30_000
    one = draw_sums(100, 30_000, seed=5, workers=1)
    two = draw_sums(100, 30_000, seed=5, workers=2)
    np.testing.assert_array_equal(one, two)


def test_prefix_is_stable_when_reps_grow():
    short = draw_sums(7, 1000, seed=8)
    long = draw_sums(7, 4000, seed=8)
    np.testing.assert_array_equal(short, long[:1000])


def test_block_size():
    assert block_size(1) == BLOCK_DRAWS
    assert block_size(16) == BLOCK_DRAWS // 16
    assert block_size(10**7) == 1
    assert block_size(16, SumLaw.NORMAL) == BLOCK_DRAWS


def test_regimes_share_the_sum_stream():
    folded = simulate_nr(8, reps=20_000, seed=4, regime=Regime.NR_FOLDED)
    trunc = simulate_nr(8, reps=20_000, seed=4, regime=Regime.NR_TRUNCATED)
    np.testing.assert_array_equal(trunc.values, folded.values[folded.values >= 0])
    assert folded.reps_kept == 20_000
    assert folded.rejection_rate == 0.0
    assert np.all(trunc.values >= 0)


def test_rejection_rate_matches_normal_tail():
    reps = 100_000
    batch = simulate_nr(5, reps=reps, seed=21, regime=Regime.NR_TRUNCATED, sum_law=SumLaw.NORMAL)
    q = 1.0 - std_normal_cdf(sum_params(5).lam)
    assert q == pytest.approx(0.409, abs=1e-3)
    se = math.sqrt(q * (1 - q) / reps)
    assert abs(rejection_rate(batch) - q) < 3 * se
    assert batch.reps_requested == reps
    assert batch.reps_kept == len(batch)


def test_heavy_truncation_warns():
    with pytest.warns(UserWarning, match="survived truncation"):
        simulate_nr(1, reps=2000, seed=2, regime=Regime.NR_TRUNCATED)


def test_nothing_survives_truncation():
    with pytest.raises(EmptyBatchError):
        simulate_nr(1, alpha=1e-15, reps=1000, seed=1, regime=Regime.NR_TRUNCATED)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(k=0),
        dict(k=2.5),
        dict(reps=0),
        dict(alpha=0.0),
        dict(alpha=0.5),
        dict(seed=-1),
        dict(regime=Regime.SUMS_ONLY),
    ],
)
def test_simulate_nr_domain(kwargs):
    args = dict(k=5, reps=100, seed=1) | kwargs
    with pytest.raises(DomainError):
        simulate_nr(**args)


def test_batch_checks_counts():
    with pytest.raises(ValidationError):
        SimulationBatch(values=np.zeros(3), k=1, reps_requested=2, reps_kept=3, regime=Regime.NR_FOLDED, master_seed=0)
    with pytest.raises(ValidationError):
        SimulationBatch(values=np.zeros(2), k=1, reps_requested=5, reps_kept=3, regime=Regime.NR_FOLDED, master_seed=0)


def test_simulate_dispatches_on_regime():
    sums = simulate(SimulationConfig(k=3, reps=1000, regime=Regime.SUMS_ONLY))
    assert sums.regime == Regime.SUMS_ONLY
    nr = simulate(SimulationConfig(k=3, reps=1000, regime=Regime.NR_FOLDED))
    assert nr.regime == Regime.NR_FOLDED
    np.testing.assert_allclose(nr.values, sums.values**2 / sum_params(3).z_alpha**2 - 3, rtol=1e-14)


def test_resolve_seed(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)
    assert resolve_seed() == DEFAULT_SEED
    assert resolve_seed(42) == 42
    monkeypatch.setenv(SEED_ENV_VAR, "777")
    assert resolve_seed() == 777
    assert resolve_seed(42) == 42
    monkeypatch.setenv(SEED_ENV_VAR, "seven")
    with pytest.raises(DomainError):
        resolve_seed()


@pytest.mark.slow
def test_simulated_sums_at_k50():
    batch = simulate_half_normal_sums(50, 1_000_000, seed=DEFAULT_SEED)
    p = sum_params(50)
    assert np.mean(batch.values) == pytest.approx(p.mu, abs=4 * p.sigma / 1000)
    assert np.var(batch.values) == pytest.approx(p.sigma_sq, rel=0.01)


@pytest.mark.slow
def test_folded_mean_is_exact_for_half_normal_sums():
    reps = 1_000_000
    batch = simulate_nr(15, reps=reps, seed=DEFAULT_SEED, regime=Regime.NR_FOLDED)
    exact = nr_moments(NrDistribution.create(15, approach=Approach.FOLDED))
    se = math.sqrt(exact.variance / reps)
    assert abs(np.mean(batch.values) - exact.mean) < 4 * se


@pytest.mark.slow
@pytest.mark.parametrize("k", [5, 15, 50])
@pytest.mark.parametrize("regime, approach", [(Regime.NR_FOLDED, Approach.FOLDED), (Regime.NR_TRUNCATED, Approach.TRUNCATED)])
def test_moments_match_closed_form_with_normal_sums(k, regime, approach):
    reps = 1_000_000
    batch = simulate_nr(k, reps=reps, seed=DEFAULT_SEED, regime=regime, sum_law=SumLaw.NORMAL)
    exact = nr_moments(NrDistribution.create(k, approach=approach))
    se = math.sqrt(exact.variance / batch.reps_kept)
    assert abs(np.mean(batch.values) - exact.mean) < 4 * se
    assert np.var(batch.values, ddof=1) == pytest.approx(exact.variance, rel=0.01)
