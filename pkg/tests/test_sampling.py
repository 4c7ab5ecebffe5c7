import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covmdp.exceptions import DimensionMismatch, NonPositiveIntensity, WrongMode, ZeroSampleSize
from covmdp.moments import expected_missing_mass, expected_occupancy
from covmdp.population import normalize_weights, power_law_profile, uniform_profile
from covmdp.sampling import (
    MULTINOMIAL,
    POISSONIZED,
    Occupancy,
    OccupancySummary,
    SamplingPlan,
    batch_stats,
    coverage_stats,
    draw_batch,
    draw_poissonized,
    draw_sample,
    summarize,
    zeta_statistic,
)
from covmdp import rng as _rng

# Golden outputs of the RNG contract (Philox via SeedSequence(seed, spawn_key=(replication, block))).
GOLDEN = [
    (lambda: uniform_profile(5), 20, 42, [3, 4, 2, 4, 7]),
    (lambda: normalize_weights([5, 3, 1, 1]), 12, 7, [5, 4, 1, 2]),
    (
        lambda: power_law_profile(1, 2, 0.05),
        30,
        2**64 - 1,
        [9, 4, 2, 1, 3, 1, 2, 0, 0, 1, 2, 2, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0],
    ),
]


@pytest.mark.parametrize("make, n, seed, expected", GOLDEN)
def test_golden_counts(make, n, seed, expected):
    assert draw_sample(make(), n, seed).counts.tolist() == expected


def test_golden_poissonized():
    assert draw_poissonized(uniform_profile(4), 3.5, 11).counts.tolist() == [2, 0, 2, 0]


def test_golden_case_uses_tail_stage():
    plan = SamplingPlan(power_law_profile(1, 2, 0.05), 30)
    assert 0 < plan.H < plan.K


def test_draw_sample_examples():
    assert draw_sample(uniform_profile(1), 5, 0).counts.tolist() == [5]
    occ = draw_sample(power_law_profile(1, 2, 1e-3), 3, 9)
    assert occ.counts.sum() == 3 and occ.mode == MULTINOMIAL
    big = draw_sample(uniform_profile(2), 10**5, 123)
    assert abs(big.counts[0] / 10**5 - 0.5) < 0.01
    with pytest.raises(ZeroSampleSize):
        draw_sample(uniform_profile(2), 0, 1)


def test_draw_is_deterministic_and_seed_sensitive():
    prof = power_law_profile(1, 2, 1e-4)
    a = draw_sample(prof, 500, 3)
    b = draw_sample(prof, 500, 3)
    c = draw_sample(prof, 500, 4)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def test_unsorted_profile_sampling():
    prof = normalize_weights([1, 10, 1, 50, 3])
    counts = np.zeros(5)
    for r in range(200):
        counts += draw_sample(prof, 100, 5, replication=r).counts
    np.testing.assert_allclose(counts / counts.sum(), prof.probs, atol=0.01)


def test_two_stage_sampler_marginals():
    """The head/tail sampler reproduces the exact per-species means."""
    prof = power_law_profile(1, 2, 1e-3)
    n, B = 200, 4096
    plan = SamplingPlan(prof, n)
    assert 0 < plan.H < plan.K
    batch = draw_batch(plan, _rng.stream(1, 0, 99), np.full(B, n))
    dense = np.array([batch.dense_row(plan, i) for i in range(64)])
    assert np.all(dense.sum(axis=1) == n)
    f1, f2, q = batch_stats(batch, plan)
    se = f1.std() / math.sqrt(B)
    assert abs(f1.mean() - expected_occupancy(prof, n, 1)) < 4 * se
    se = q.std() / math.sqrt(B)
    assert abs(q.mean() - expected_missing_mass(prof, n)) < 4 * se


def test_batch_stats_match_dense_statistics():
    prof = power_law_profile(1, 2, 1e-3)
    n = 300
    plan = SamplingPlan(prof, n)
    batch = draw_batch(plan, _rng.stream(5, 0, 99), np.full(32, n))
    f1, f2, q = batch_stats(batch, plan)
    for i in range(32):
        counts = batch.dense_row(plan, i)
        assert f1[i] == np.count_nonzero(counts == 1)
        assert f2[i] == np.count_nonzero(counts == 2)
        assert q[i] == pytest.approx(math.fsum(prof.probs[counts == 0]), abs=1e-13)


def test_poissonized_examples():
    reps = 10_000
    vals = np.array([draw_poissonized(uniform_profile(1), 4.0, 8, r).counts[0] for r in range(reps)])
    assert abs(vals.mean() - 4.0) < 4 * math.sqrt(4.0 / reps)
    zeros = sum(draw_poissonized(uniform_profile(2), 1e-6, 3, r).counts.sum() == 0 for r in range(2000))
    assert zeros >= 1999
    with pytest.raises(NonPositiveIntensity):
        draw_poissonized(uniform_profile(2), 0.0, 1)


def test_poissonized_means_small_profiles():
    prof = normalize_weights([4, 3, 2, 1, 1, 1, 0.5, 0.5, 0.25, 0.25])
    lam, reps = 7.0, 10_000
    counts = np.array([draw_poissonized(prof, lam, 17, r).counts for r in range(reps)])
    mean = lam * prof.probs
    assert np.all(np.abs(counts.mean(axis=0) - mean) < 4 * np.sqrt(mean / reps))
    assert counts.min() >= 0


def test_summarize_examples():
    def occ(counts):
        return Occupancy(np.array(counts), sum(counts), MULTINOMIAL, 0)

    assert summarize(occ([2, 0])).F == {2: 1}
    assert summarize(occ([1, 1])).F == {1: 2}
    assert summarize(occ([3, 1, 1, 0])).F == {1: 2, 3: 1}


def test_coverage_stats_examples():
    half = uniform_profile(2)
    s = coverage_stats(Occupancy(np.array([2, 0]), 2, MULTINOMIAL, 0), half)
    assert (s.q_true, s.q_hat, s.xi) == (0.5, 0.0, -1.0)
    s = coverage_stats(Occupancy(np.array([5]), 5, MULTINOMIAL, 0), uniform_profile(1))
    assert (s.q_true, s.q_hat, s.xi) == (0.0, 0.0, 0.0)
    s = coverage_stats(Occupancy(np.array([1, 1]), 2, MULTINOMIAL, 0), half)
    assert (s.q_true, s.q_hat, s.xi) == (0.0, 1.0, 2.0)
    assert s.u_n == expected_missing_mass(half, 2)
    with pytest.raises(DimensionMismatch):
        coverage_stats(Occupancy(np.array([1, 1]), 2, MULTINOMIAL, 0), uniform_profile(3))


def test_zeta_examples():
    def pocc(counts, lam):
        return Occupancy(np.array(counts), lam, POISSONIZED, 0)

    assert zeta_statistic(pocc([2, 3, 5], 4.0), uniform_profile(3)) == 0.0
    assert zeta_statistic(pocc([1, 0], 2.0), uniform_profile(2)) == 0.0
    assert zeta_statistic(pocc([0], 3.0), uniform_profile(1)) == -3.0
    with pytest.raises(WrongMode):
        zeta_statistic(Occupancy(np.array([1, 1]), 2, MULTINOMIAL, 0), uniform_profile(2))
    with pytest.raises(WrongMode):
        coverage_stats(pocc([1, 1], 2.0), uniform_profile(2))


def test_occupancy_invariants():
    with pytest.raises(ValueError):
        Occupancy(np.array([1, 1]), 3, MULTINOMIAL, 0)
    with pytest.raises(ValueError):
        Occupancy(np.array([-1, 1]), 2.0, POISSONIZED, 0)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=1, max_size=60),
    st.integers(min_value=1, max_value=400),
    st.integers(min_value=0, max_value=2**64 - 1),
)
def test_sample_identities(w, n, seed):
    prof = normalize_weights(w)
    occ = draw_sample(prof, n, seed)
    assert occ.counts.sum() == n
    summary = summarize(occ)
    assert sum(j * f for j, f in summary.F.items()) == n
    assert summary.f1 <= n
    s = coverage_stats(occ, prof)
    assert abs(s.xi - n * (s.q_hat - s.q_true)) <= 1e-12
    assert s.q_true == math.fsum(prof.probs[occ.counts == 0])


def test_summary_from_counts():
    s = OccupancySummary.from_counts([0, 1, 1, 2, 7])
    assert (s.f1, s.f2, s.n) == (2, 1, 11)
