"""Closed-form convergence bounds for the two gradient estimators."""

import math

import numpy as np
import pytest

from airdp import (
    ConvergenceParams,
    ParameterDomainError,
    ParticipantStats,
    bound_known,
    bound_known_uniform,
    bound_optimal_p,
    bound_unknown,
    inverse_moments_taylor,
    second_moment_bound,
    participant_stats,
)


def uniform_stats(prob, num_users):
    return participant_stats(np.full(num_users, prob))


def benchmark_params(rounds=4000, num_users=20, prob=0.5, lipschitz=2.0,
                     noise_var_max=0.1, channel_noise_var=1.0,
                     with_probs=False):
    """The 20-user training benchmark's constants."""
    probs = np.full(num_users, prob)
    return ConvergenceParams(
        strong_convexity=0.2, smoothness=0.9, lipschitz=lipschitz,
        dimension=30, noise_var_max=noise_var_max,
        channel_noise_var=channel_noise_var, rounds=rounds,
        stats=participant_stats(probs),
        probs=probs if with_probs else None)


# ---------------------------------------------------------------------------
# Second-moment cap
# ---------------------------------------------------------------------------

class TestSecondMomentBound:
    def test_full_participation_noiseless(self):
        st = ParticipantStats(mean_count=8.0, count_var=0.0,
                              nonempty_prob=1.0)
        assert second_moment_bound(st, 3.0, 30, 0.0, 0.0) == pytest.approx(
            9.0, rel=1e-14)

    def test_benchmark_value(self):
        st = uniform_stats(0.5, 20)
        assert second_moment_bound(st, 2.0, 30, 0.1, 1.0) == pytest.approx(
            4.8, rel=1e-12)

    def test_receiver_noise_term_is_additive(self):
        st = uniform_stats(0.5, 20)
        base = second_moment_bound(st, 2.0, 30, 0.1, 1.0)
        more = second_moment_bound(st, 2.0, 30, 0.1, 2.0)
        # d * N0 / mu^2 = 30 / 100 per unit of receiver noise variance.
        assert more - base == pytest.approx(0.3, rel=1e-12)

    def test_larger_population_value(self):
        st = uniform_stats(0.5, 200)
        assert second_moment_bound(st, 2.0, 30, 0.1, 1.0) == pytest.approx(
            4.053, rel=1e-12)

    def test_zero_mean_count(self):
        with pytest.raises(ParameterDomainError):
            second_moment_bound(ParticipantStats(0.0, 0.0, 0.0),
                                2.0, 30, 0.1, 1.0)


# ---------------------------------------------------------------------------
# Expected-count estimator bound
# ---------------------------------------------------------------------------

class TestBoundUnknown:
    @pytest.mark.parametrize("rounds,expected", [
        (100, 2.16), (1000, 0.216), (4000, 0.054),
    ])
    def test_benchmark_values(self, rounds, expected):
        assert bound_unknown(benchmark_params(rounds)) == pytest.approx(
            expected, rel=1e-12)

    def test_larger_population_value(self):
        params = benchmark_params(rounds=4000, num_users=200)
        assert bound_unknown(params) == pytest.approx(0.04559625, rel=1e-9)

    def test_halves_when_rounds_double(self):
        assert bound_unknown(benchmark_params(2000)) == pytest.approx(
            2.0 * bound_unknown(benchmark_params(4000)), rel=1e-12)

    def test_monotone_decreasing_in_rounds(self):
        values = [bound_unknown(benchmark_params(t))
                  for t in (100, 1000, 4000)]
        assert values[0] > values[1] > values[2]

    def test_round_varying_stats_sum_linearly(self):
        small, large = uniform_stats(0.3, 20), uniform_stats(0.8, 20)
        mixed = ConvergenceParams(0.2, 0.9, 2.0, 30, 0.1, 1.0, rounds=2,
                                  stats=[small, large])
        parts = [second_moment_bound(st, 2.0, 30, 0.1, 1.0)
                 for st in (small, large)]
        expected = 2.0 * 0.9 / (0.2 ** 2 * 4) * sum(parts)
        assert bound_unknown(mixed) == pytest.approx(expected, rel=1e-12)

    def test_stats_length_mismatch(self):
        params = ConvergenceParams(0.2, 0.9, 2.0, 30, 0.1, 1.0, rounds=3,
                                   stats=[uniform_stats(0.5, 20)] * 2)
        with pytest.raises(ParameterDomainError):
            bound_unknown(params)

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            ConvergenceParams(0.0, 0.9, 2.0, 30, 0.1, 1.0, 10,
                              uniform_stats(0.5, 20))
        with pytest.raises(ParameterDomainError):
            ConvergenceParams(0.2, 0.1, 2.0, 30, 0.1, 1.0, 10,
                              uniform_stats(0.5, 20))
        with pytest.raises(ParameterDomainError):
            ConvergenceParams(0.2, 0.9, 2.0, 30, 0.1, 1.0, 0,
                              uniform_stats(0.5, 20))


class TestBoundOptimalP:
    def test_frozen_value(self):
        result = bound_optimal_p(benchmark_params(4000, num_users=200),
                                 1e-5, 200)
        assert result.p_star == pytest.approx(0.34937190278455670, rel=1e-12)
        assert not result.clamped
        assert result.value == pytest.approx(0.0459711479418, rel=1e-9)

    def test_consistent_with_generic_bound(self):
        num_users, dp = 200, 1e-5
        result = bound_optimal_p(benchmark_params(4000), dp, num_users)
        generic = bound_unknown(ConvergenceParams(
            0.2, 0.9, 2.0, 30, 0.1, 1.0, 4000,
            uniform_stats(result.p_star, num_users)))
        assert result.value == pytest.approx(generic, rel=1e-9)

    def test_small_population_clamps(self):
        result = bound_optimal_p(benchmark_params(4000), 1e-5, 20)
        assert result.clamped
        assert result.p_star == 1.0
        full = bound_unknown(ConvergenceParams(
            0.2, 0.9, 2.0, 30, 0.1, 1.0, 4000, uniform_stats(1.0, 20)))
        assert result.value == pytest.approx(full, rel=1e-12)

    def test_privacy_noise_term_scales_as_inverse_sqrt(self):
        # With no gradient signal and no receiver noise, the bound is the
        # privacy-noise term alone and halves when K quadruples.
        def noise_only(num_users):
            params = ConvergenceParams(
                0.2, 0.9, 0.0, 30, 0.1, 0.0, 1000, uniform_stats(0.5, 20))
            return bound_optimal_p(params, 1e-5, num_users).value

        assert noise_only(40_000) / noise_only(10_000) == pytest.approx(
            0.5, rel=1e-12)
        # Receiver noise perturbs the ratio, but little at large K.
        def with_receiver(num_users):
            params = ConvergenceParams(
                0.2, 0.9, 0.0, 30, 0.1, 1.0, 1000, uniform_stats(0.5, 20))
            return bound_optimal_p(params, 1e-5, num_users).value

        ratio = with_receiver(40_000) / with_receiver(10_000)
        assert ratio == pytest.approx(0.5, rel=0.05)

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            bound_optimal_p(benchmark_params(100), 0.0, 200)
        with pytest.raises(ParameterDomainError):
            bound_optimal_p(benchmark_params(100), 1e-5, 0)


# ---------------------------------------------------------------------------
# Realized-count estimator bound
# ---------------------------------------------------------------------------

class TestInverseMomentsTaylor:
    def test_zero_variance(self):
        assert inverse_moments_taylor(4.0, 0.0) == pytest.approx(
            (0.25, 0.0625), rel=1e-14)

    def test_unit_mean(self):
        assert inverse_moments_taylor(1.0, 0.5) == pytest.approx(
            (1.5, 2.5), rel=1e-14)

    def test_large_mean(self):
        first, second = inverse_moments_taylor(100.0, 50.0)
        assert first == pytest.approx(0.01005, rel=1e-12)
        assert second == pytest.approx(1.015e-4, rel=1e-12)

    def test_accuracy_improves_with_mean(self):
        from airdp import inverse_moments_exact
        rel_errors = []
        for num_users in (10, 20, 40, 100, 200):
            probs = np.full(num_users, 0.5)
            st = participant_stats(probs)
            exact = inverse_moments_exact(probs)
            taylor = inverse_moments_taylor(st.mean_count, st.count_var)
            rel_errors.append(abs(taylor[0] - exact[0]) / exact[0])
        assert all(a > b for a, b in zip(rel_errors, rel_errors[1:]))
        # Below 1% once the expected count reaches 50.
        assert rel_errors[3] < 0.01
        assert rel_errors[4] < 0.01

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            inverse_moments_taylor(0.0, 1.0)
        with pytest.raises(ParameterDomainError):
            inverse_moments_taylor(1.0, -1.0)


class TestBoundKnown:
    def test_taylor_value(self):
        assert bound_known(benchmark_params(4000)) == pytest.approx(
            0.0524250570775, rel=1e-9)

    def test_exact_value(self):
        params = benchmark_params(4000, with_probs=True)
        assert bound_known(params, moments="exact") == pytest.approx(
            0.0526575211613, rel=1e-9)

    def test_exact_needs_probs(self):
        with pytest.raises(ParameterDomainError):
            bound_known(benchmark_params(4000), moments="exact")

    def test_moments_name_checked(self):
        with pytest.raises(ParameterDomainError):
            bound_known(benchmark_params(4000), moments="pade")

    def test_certain_participation_matches_unknown(self):
        # p = 1 removes count randomness: both estimators coincide.
        params = ConvergenceParams(0.2, 0.9, 2.0, 30, 0.1, 1.0, 500,
                                   uniform_stats(1.0, 20))
        assert bound_known(params) == pytest.approx(bound_unknown(params),
                                                    rel=1e-12)

    def test_never_empty_probability_required(self):
        params = ConvergenceParams(0.2, 0.9, 2.0, 30, 0.1, 1.0, 10,
                                   ParticipantStats(0.0, 0.0, 0.0))
        with pytest.raises(ParameterDomainError):
            bound_known(params)

    def test_close_to_unknown_bound_on_benchmark(self):
        params = benchmark_params(4000, with_probs=True)
        unknown = bound_unknown(params)
        known = bound_known(params, moments="exact")
        assert abs(known - unknown) / unknown <= 0.1

    def test_monotone_decreasing_in_rounds(self):
        values = [bound_known(benchmark_params(t)) for t in (100, 1000, 4000)]
        assert values[0] > values[1] > values[2]


class TestBoundKnownUniform:
    def test_matches_generic_taylor_path(self):
        for prob, num_users in [(0.5, 20), (0.3, 200), (0.9, 50)]:
            closed = bound_known_uniform(
                benchmark_params(4000, num_users=num_users, prob=prob),
                prob, num_users)
            generic = bound_known(
                benchmark_params(4000, num_users=num_users, prob=prob))
            assert closed == pytest.approx(generic, rel=1e-12)

    def test_benchmark_value(self):
        closed = bound_known_uniform(benchmark_params(4000), 0.5, 20)
        assert closed == pytest.approx(0.0524250570775, rel=1e-9)

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            bound_known_uniform(benchmark_params(100), 0.0, 20)
        with pytest.raises(ParameterDomainError):
            bound_known_uniform(benchmark_params(100), 0.5, 0)
