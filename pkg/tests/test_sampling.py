"""Randomized participation: policies, draws, and count statistics."""

import itertools
import math

import numpy as np
import pytest
from scipy import stats as sps

from airdp import (
    ConfigError,
    EnumerationSizeError,
    ParameterDomainError,
    SamplingPolicy,
    count_distribution_exact,
    inverse_moments_exact,
    participant_stats,
    resolve_probabilities,
    sample_participants,
)
from airdp.sampling import MAX_EXACT_NONUNIFORM


def enumerate_count_pmf(probs):
    """Independent oracle: sum over all 2^K participation patterns."""
    probs = np.asarray(probs, dtype=float)
    pmf = np.zeros(probs.size + 1)
    for pattern in itertools.product((0, 1), repeat=probs.size):
        weight = 1.0
        for bit, p in zip(pattern, probs):
            weight *= p if bit else (1.0 - p)
        pmf[sum(pattern)] += weight
    return pmf


# ---------------------------------------------------------------------------
# Policy resolution
# ---------------------------------------------------------------------------

class TestResolveProbabilities:
    def test_uniform_broadcast(self):
        probs = resolve_probabilities(SamplingPolicy.uniform(0.3), 5)
        np.testing.assert_array_equal(probs, np.full(5, 0.3))

    def test_schedule_indexing(self):
        policy = SamplingPolicy.from_schedule([0.1, 0.2, 0.7])
        np.testing.assert_array_equal(
            resolve_probabilities(policy, 4, round_index=2), np.full(4, 0.7))
        with pytest.raises(ConfigError):
            resolve_probabilities(policy, 4, round_index=3)

    def test_channel_aware_caps_at_one(self):
        policy = SamplingPolicy.channel_aware(2.0)
        probs = resolve_probabilities(policy, 2,
                                      gains=np.array([1.0, 3.0]))
        np.testing.assert_allclose(probs, [0.5, 1.0])

    def test_channel_aware_needs_gains(self):
        with pytest.raises(ConfigError):
            resolve_probabilities(SamplingPolicy.channel_aware(2.0), 2)

    def test_explicit_matrix_row(self):
        matrix = np.array([[0.1, 0.2], [0.3, 0.4]])
        policy = SamplingPolicy.explicit(matrix)
        np.testing.assert_array_equal(
            resolve_probabilities(policy, 2, round_index=1), [0.3, 0.4])
        with pytest.raises(ConfigError):
            resolve_probabilities(policy, 3, round_index=0)
        with pytest.raises(ConfigError):
            resolve_probabilities(policy, 2, round_index=2)

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            resolve_probabilities(SamplingPolicy.uniform(0.3), 0)
        with pytest.raises(ParameterDomainError):
            resolve_probabilities(SamplingPolicy.uniform(0.3), 5,
                                  round_index=-1)
        with pytest.raises(ParameterDomainError):
            SamplingPolicy.uniform(1.5)


# ---------------------------------------------------------------------------
# Drawing participants
# ---------------------------------------------------------------------------

class TestSampleParticipants:
    def test_degenerate_probabilities(self):
        rng = np.random.default_rng(0)
        np.testing.assert_array_equal(
            sample_participants(np.ones(6), rng), np.arange(6))
        assert sample_participants(np.zeros(6), rng).size == 0

    def test_sorted_unique_indices(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            out = sample_participants(np.full(10, 0.5), rng)
            assert np.all(np.diff(out) > 0)

    def test_binomial_frequencies(self):
        rng = np.random.default_rng(2)
        draws = 100_000
        probs = np.full(3, 0.5)
        counts = np.array([sample_participants(probs, rng).size
                           for _ in range(draws)])
        mean = counts.mean()
        stderr = counts.std(ddof=1) / math.sqrt(draws)
        assert abs(mean - 1.5) <= 3.0 * stderr
        # Count frequencies against the exact binomial pmf.
        freq = np.bincount(counts, minlength=4) / draws
        pmf = count_distribution_exact(probs)
        for j in range(4):
            se = math.sqrt(pmf[j] * (1.0 - pmf[j]) / draws)
            assert abs(freq[j] - pmf[j]) <= 4.0 * se

    def test_deterministic_given_seed(self):
        probs = np.full(8, 0.4)
        a = sample_participants(probs, np.random.default_rng(42))
        b = sample_participants(probs, np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------------------
# Count statistics
# ---------------------------------------------------------------------------

class TestParticipantStats:
    def test_two_user_example(self):
        st = participant_stats([0.2, 0.5])
        assert st.mean_count == pytest.approx(0.7, rel=1e-15)
        assert st.count_var == pytest.approx(0.41, rel=1e-15)
        assert st.nonempty_prob == pytest.approx(0.6, rel=1e-12)

    def test_certain_participation(self):
        st = participant_stats(np.ones(7))
        assert st.mean_count == 7.0
        assert st.count_var == 0.0
        assert st.nonempty_prob == 1.0

    def test_uniform_half(self):
        st = participant_stats([0.5, 0.5])
        assert st.nonempty_prob == pytest.approx(0.75, rel=1e-12)

    def test_matches_enumeration(self):
        rng = np.random.default_rng(3)
        for size in (2, 5, 9, 12):
            probs = rng.uniform(0.0, 1.0, size=size)
            pmf = enumerate_count_pmf(probs)
            counts = np.arange(size + 1)
            st = participant_stats(probs)
            mean = float(pmf @ counts)
            var = float(pmf @ (counts - mean) ** 2)
            assert st.mean_count == pytest.approx(mean, rel=1e-12)
            assert st.count_var == pytest.approx(var, rel=1e-12)
            assert st.nonempty_prob == pytest.approx(1.0 - pmf[0], rel=1e-12)


class TestCountDistribution:
    def test_two_fair_coins(self):
        np.testing.assert_allclose(count_distribution_exact([0.5, 0.5]),
                                   [0.25, 0.5, 0.25], rtol=1e-12)

    def test_two_unequal_users(self):
        np.testing.assert_allclose(count_distribution_exact([0.2, 0.5]),
                                   [0.4, 0.5, 0.1], rtol=1e-12)

    def test_uniform_matches_binomial(self):
        pmf = count_distribution_exact(np.full(10, 0.3))
        expected = sps.binom.pmf(np.arange(11), 10, 0.3)
        np.testing.assert_allclose(pmf, expected, rtol=1e-12)

    def test_uniform_unguarded_at_large_size(self):
        pmf = count_distribution_exact(np.full(500, 0.1))
        assert pmf.size == 501
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)

    def test_nonuniform_guard(self):
        probs = np.linspace(0.1, 0.9, MAX_EXACT_NONUNIFORM + 1)
        with pytest.raises(EnumerationSizeError):
            count_distribution_exact(probs)

    def test_matches_enumeration(self):
        rng = np.random.default_rng(4)
        for size in (1, 3, 6, 10, 12):
            probs = rng.uniform(0.05, 0.95, size=size)
            np.testing.assert_allclose(count_distribution_exact(probs),
                                       enumerate_count_pmf(probs),
                                       rtol=1e-12, atol=1e-15)

    def test_monte_carlo_total_variation(self):
        rng = np.random.default_rng(5)
        probs = np.array([0.15, 0.4, 0.65, 0.9])
        draws = 200_000
        counts = (rng.random((draws, 4)) < probs).sum(axis=1)
        freq = np.bincount(counts, minlength=5) / draws
        tv = 0.5 * np.abs(freq - count_distribution_exact(probs)).sum()
        assert tv < 0.01

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            count_distribution_exact([])
        with pytest.raises(ParameterDomainError):
            count_distribution_exact([0.5, 1.2])


class TestInverseMoments:
    def test_certain_pair(self):
        first, second = inverse_moments_exact([1.0, 1.0])
        assert first == pytest.approx(0.5, rel=1e-14)
        assert second == pytest.approx(0.25, rel=1e-14)

    def test_two_fair_coins(self):
        # Restricted moments: empty rounds contribute zero.
        first, second = inverse_moments_exact([0.5, 0.5])
        assert first == pytest.approx(0.625, rel=1e-14)
        assert second == pytest.approx(0.5625, rel=1e-14)

    def test_matches_binomial_sum(self):
        probs = np.full(10, 0.5)
        pmf = sps.binom.pmf(np.arange(11), 10, 0.5)
        counts = np.arange(1, 11)
        first, second = inverse_moments_exact(probs)
        assert first == pytest.approx(float(np.sum(pmf[1:] / counts)),
                                      rel=1e-12)
        assert second == pytest.approx(float(np.sum(pmf[1:] / counts ** 2)),
                                       rel=1e-12)

    def test_matches_enumeration(self):
        rng = np.random.default_rng(6)
        for size in (2, 7, 12):
            probs = rng.uniform(0.1, 0.9, size=size)
            pmf = enumerate_count_pmf(probs)
            counts = np.arange(1, size + 1)
            first, second = inverse_moments_exact(probs)
            assert first == pytest.approx(float(np.sum(pmf[1:] / counts)),
                                          rel=1e-12)
            assert second == pytest.approx(
                float(np.sum(pmf[1:] / counts ** 2)), rel=1e-12)
