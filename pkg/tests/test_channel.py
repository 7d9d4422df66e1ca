"""Fading, power control, and the additive multiple-access channel."""

import math

import numpy as np
import pytest
from scipy import stats as sps

from airdp import (
    ChannelParams,
    ParameterDomainError,
    advance_realization,
    empirical_alpha,
    fading_step,
    initial_realization,
    inversion_alpha,
    mac_superpose,
    perturb_and_scale,
    snr_to_power,
    stationary_scatter,
)


def gain_series(rounds, rician_factor, time_correlation, seed=0,
                num_users=1):
    """Consecutive per-round gains of one fading chain."""
    rng = np.random.default_rng(seed)
    scatter = stationary_scatter(num_users, rng)
    out = np.empty((rounds, num_users))
    for t in range(rounds):
        gains, scatter = fading_step(scatter, rician_factor,
                                     time_correlation, rng)
        out[t] = gains
    return out


# ---------------------------------------------------------------------------
# Power budget
# ---------------------------------------------------------------------------

class TestSnrToPower:
    def test_values(self):
        assert snr_to_power(0.0, 1, 1.0) == pytest.approx(1.0, rel=1e-14)
        assert snr_to_power(10.0, 30, 1.0) == pytest.approx(300.0, rel=1e-12)
        assert snr_to_power(30.0, 10, 2.0) == pytest.approx(20000.0,
                                                            rel=1e-12)

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            snr_to_power(10.0, 0, 1.0)
        with pytest.raises(ParameterDomainError):
            snr_to_power(10.0, 30, -1.0)


# ---------------------------------------------------------------------------
# Transmit scaling
# ---------------------------------------------------------------------------

class TestInversionAlpha:
    def test_values(self):
        assert inversion_alpha(1.0) == pytest.approx(1.0, rel=1e-15)
        assert inversion_alpha(4.0) == pytest.approx(0.25, rel=1e-15)

    def test_inverts_exactly(self):
        rng = np.random.default_rng(10)
        gains = rng.uniform(0.05, 5.0, size=100)
        np.testing.assert_allclose(gains * inversion_alpha(gains), 1.0,
                                   rtol=1e-10)

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            inversion_alpha(0.0)
        with pytest.raises(ParameterDomainError):
            inversion_alpha(np.array([1.0, -2.0]))


class TestEmpiricalAlpha:
    def test_inversion_affordable(self):
        # Budget branch sqrt(40/7) = 2.39 exceeds 1/h = 0.5: invert.
        assert empirical_alpha(2.0, 40.0, 4.0, 30, 0.1) == pytest.approx(
            0.5, rel=1e-14)

    def test_budget_binds(self):
        assert empirical_alpha(0.1, 40.0, 4.0, 30, 0.1) == pytest.approx(
            2.3904572186687872, rel=1e-12)

    def test_zero_power_silences(self):
        assert empirical_alpha(1.0, 0.0, 4.0, 30, 0.1) == 0.0

    def test_zero_energy_inverts(self):
        assert empirical_alpha(2.0, 40.0, 0.0, 30, 0.0) == pytest.approx(
            0.5, rel=1e-14)

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            empirical_alpha(0.0, 40.0, 4.0, 30, 0.1)
        with pytest.raises(ParameterDomainError):
            empirical_alpha(1.0, -1.0, 4.0, 30, 0.1)

    def test_average_power_respected(self):
        # E||alpha*(g + noise)||^2 = alpha^2*(||g||^2 + d*sigma^2) <= P.
        rng = np.random.default_rng(11)
        dim, power, sigma = 30, 2.0, 0.5
        grad = np.full(dim, 0.4)
        grad_sq = float(grad @ grad)
        alpha = empirical_alpha(0.2, power, grad_sq, dim, sigma ** 2)
        energies = []
        for _ in range(10_000):
            signal = perturb_and_scale(grad, sigma, alpha, rng)
            energies.append(float(signal @ signal))
        assert np.mean(energies) <= 1.02 * power


# ---------------------------------------------------------------------------
# Fading chain
# ---------------------------------------------------------------------------

class TestFading:
    def test_params_domain(self):
        with pytest.raises(ParameterDomainError):
            ChannelParams(-1.0, 0.1, 1.0)
        with pytest.raises(ParameterDomainError):
            ChannelParams(5.0, 1.0, 1.0)
        with pytest.raises(ParameterDomainError):
            ChannelParams(5.0, 0.1, -1.0)

    def test_initial_realization_has_no_gains(self):
        real = initial_realization(4, np.random.default_rng(0))
        assert real.gains is None
        assert real.scatter.shape == (4,)
        assert np.iscomplexobj(real.scatter)

    def test_advance_fills_gains(self):
        params = ChannelParams(5.0, 0.1, 1.0)
        rng = np.random.default_rng(0)
        real = advance_realization(initial_realization(4, rng), params, rng)
        assert real.gains.shape == (4,)
        assert np.all(real.gains > 0)

    def test_deterministic_given_seed(self):
        series_a = gain_series(100, 5.0, 0.1, seed=3)
        series_b = gain_series(100, 5.0, 0.1, seed=3)
        np.testing.assert_array_equal(series_a, series_b)

    def test_unit_mean_square(self):
        gains = gain_series(1000, 5.0, 0.1, seed=4, num_users=1000)
        assert np.mean(gains ** 2) == pytest.approx(1.0, abs=0.01)

    def test_dominant_line_of_sight(self):
        gains = gain_series(100, 1e12, 0.1, seed=5, num_users=100)
        np.testing.assert_allclose(gains, 1.0, atol=1e-5)

    def test_no_memory_when_uncorrelated(self):
        sq = gain_series(100_000, 5.0, 0.0, seed=6)[:, 0] ** 2
        x, y = sq[:-1] - sq.mean(), sq[1:] - sq.mean()
        acf = float(x @ y) / float(np.sqrt((x @ x) * (y @ y)))
        assert abs(acf) < 0.02

    def test_correlation_induces_memory(self):
        sq = gain_series(100_000, 5.0, 0.9, seed=7)[:, 0] ** 2
        x, y = sq[:-1] - sq.mean(), sq[1:] - sq.mean()
        acf = float(x @ y) / float(np.sqrt((x @ x) * (y @ y)))
        assert acf > 0.5

    def test_stationary_marginal(self):
        # Early and late windows of the chain share one distribution.
        series = gain_series(11_000, 5.0, 0.1, seed=8)[:, 0]
        early = series[1000:2000]
        late = series[10_000:11_000]
        statistic = sps.ks_2samp(early, late).statistic
        critical = 1.628 * math.sqrt(2.0 / 1000.0)  # 1% level, n = m = 1000
        assert statistic < critical


# ---------------------------------------------------------------------------
# Multiple-access superposition
# ---------------------------------------------------------------------------

class TestMacSuperpose:
    def test_empty_noiseless(self):
        rng = np.random.default_rng(12)
        out = mac_superpose(np.empty((0, 5)), np.empty(0), 0.0, rng)
        np.testing.assert_array_equal(out, np.zeros(5))

    def test_single_unit_gain_passthrough(self):
        rng = np.random.default_rng(13)
        signal = np.array([[1.0, -2.0, 3.0]])
        out = mac_superpose(signal, np.array([1.0]), 0.0, rng)
        np.testing.assert_array_equal(out, signal[0])

    def test_weighted_sum(self):
        rng = np.random.default_rng(14)
        signals = np.array([[1.0, 0.0], [0.0, 2.0]])
        out = mac_superpose(signals, np.array([2.0, 3.0]), 0.0, rng)
        np.testing.assert_allclose(out, [2.0, 6.0], rtol=1e-15)

    def test_noise_variance(self):
        rng = np.random.default_rng(15)
        draws = np.array([mac_superpose(np.empty((0, 4)), np.empty(0),
                                        2.5, rng)
                          for _ in range(20_000)])
        assert np.var(draws) == pytest.approx(2.5, rel=0.05)

    def test_noiseless_consumes_no_randomness(self):
        # The receiver stream advances only when noise is actually drawn.
        rng_a = np.random.default_rng(16)
        rng_b = np.random.default_rng(16)
        mac_superpose(np.ones((2, 3)), np.ones(2), 0.0, rng_a)
        assert rng_a.random() == rng_b.random()

    def test_domain(self):
        rng = np.random.default_rng(17)
        with pytest.raises(ParameterDomainError):
            mac_superpose(np.ones(3), np.ones(1), 0.0, rng)
        with pytest.raises(ParameterDomainError):
            mac_superpose(np.ones((2, 3)), np.ones(3), 0.0, rng)
        with pytest.raises(ParameterDomainError):
            mac_superpose(np.ones((2, 3)), np.ones(2), -1.0, rng)
