"""Fading multiple-access channel: temporally correlated Rician gains,
transmit scaling under an average power budget, and noisy superposition.

Gains follow |los + scatter| where the scatter term is an AR(1) chain of
standard complex Gaussians, giving E[h^2] = 1 at stationarity for any
line-of-sight ratio.  One gain per user per round (block-flat fading).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ParameterDomainError

__all__ = [
    "ChannelParams",
    "ChannelRealization",
    "initial_realization",
    "advance_realization",
    "snr_to_power",
    "stationary_scatter",
    "fading_step",
    "inversion_alpha",
    "empirical_alpha",
    "mac_superpose",
]


@dataclass(frozen=True)
class ChannelParams:
    """rician_factor   line-of-sight to scatter power ratio (>= 0)
    time_correlation  AR(1) coefficient of the scatter chain, in [0, 1)
    noise_var         receiver noise variance per coordinate
    snr_db            per-user average SNR target (None = no power budget)
    """

    rician_factor: float
    time_correlation: float
    noise_var: float
    snr_db: Optional[float] = None

    def __post_init__(self):
        if self.rician_factor < 0:
            raise ParameterDomainError("rician_factor must be >= 0")
        if not 0.0 <= self.time_correlation < 1.0:
            raise ParameterDomainError("time_correlation must be in [0, 1)")
        if self.noise_var < 0:
            raise ParameterDomainError("noise_var must be >= 0")


@dataclass(frozen=True)
class ChannelRealization:
    """One round's fading state: the per-user gains in effect plus the
    scatter chain carrying temporal correlation to the next round.

    gains is None on a freshly initialized realization (no round has been
    played yet); advance_realization fills it.
    """

    scatter: np.ndarray
    gains: Optional[np.ndarray] = None


def initial_realization(num_users: int,
                        rng: np.random.Generator) -> ChannelRealization:
    """Stationary start of the fading chain; consumes one (K, 2) block."""
    return ChannelRealization(scatter=stationary_scatter(num_users, rng))


def advance_realization(realization: ChannelRealization,
                        params: ChannelParams,
                        rng: np.random.Generator) -> ChannelRealization:
    """One round of fading; consumes one (K, 2) block."""
    gains, scatter = fading_step(realization.scatter, params.rician_factor,
                                 params.time_correlation, rng)
    return ChannelRealization(scatter=scatter, gains=gains)


def snr_to_power(snr_db: float, dimension: int, noise_var: float) -> float:
    """Average power budget producing the target SNR over one d-dimensional
    transmission: P = 10^(snr_db/10) * d * noise_var."""
    if dimension < 1:
        raise ParameterDomainError("dimension must be >= 1")
    if noise_var < 0:
        raise ParameterDomainError("noise_var must be >= 0")
    return 10.0 ** (snr_db / 10.0) * dimension * noise_var


def stationary_scatter(num_users: int, rng: np.random.Generator) -> np.ndarray:
    """Initial scatter state drawn from the chain's stationary law
    (standard complex Gaussian, E|s|^2 = 1)."""
    if num_users < 1:
        raise ParameterDomainError("num_users must be >= 1")
    z = rng.standard_normal((num_users, 2))
    return np.sqrt(0.5) * (z[:, 0] + 1j * z[:, 1])


def fading_step(scatter: np.ndarray, rician_factor: float,
                time_correlation: float,
                rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Advance the scatter chain one round; returns (gains, new_scatter).

    Draw protocol (kernels replicate it): one (K, 2) standard-normal block,
    combined as sqrt(0.5)*(re + j*im).
    """
    s = np.asarray(scatter)
    if s.ndim != 1 or s.size == 0:
        raise ParameterDomainError("scatter must be a non-empty 1-d vector")
    if not 0.0 <= time_correlation < 1.0:
        raise ParameterDomainError("time_correlation must be in [0, 1)")
    if rician_factor < 0:
        raise ParameterDomainError("rician_factor must be >= 0")
    z = rng.standard_normal((s.size, 2))
    innovation = np.sqrt(0.5) * (z[:, 0] + 1j * z[:, 1])
    new_scatter = (time_correlation * s
                   + np.sqrt(1.0 - time_correlation ** 2) * innovation)
    los = np.sqrt(rician_factor / (rician_factor + 1.0))
    sc = np.sqrt(1.0 / (rician_factor + 1.0))
    gains = np.hypot(los + sc * new_scatter.real, sc * new_scatter.imag)
    return gains, new_scatter


def inversion_alpha(gains) -> np.ndarray:
    """Exact channel-inversion transmit scale 1/h (no power budget)."""
    g = np.asarray(gains, dtype=float)
    if np.any(g <= 0):
        raise ParameterDomainError("gains must be > 0 for inversion")
    return 1.0 / g


def empirical_alpha(gain: float, power: float, grad_sq_norm: float,
                    dimension: int, noise_var_user: float) -> float:
    """Transmit scale under an average power budget: invert the channel
    when affordable, otherwise spend exactly the budget.

    alpha = min(1/h, sqrt(P) / sqrt(||g||^2 + d*sigma^2)).  A zero budget
    silences the user; a zero denominator with positive budget leaves the
    inversion branch.
    """
    if gain <= 0:
        raise ParameterDomainError("gain must be > 0")
    if power < 0 or grad_sq_norm < 0 or noise_var_user < 0:
        raise ParameterDomainError("power, grad_sq_norm, noise_var_user >= 0")
    if dimension < 1:
        raise ParameterDomainError("dimension must be >= 1")
    if power == 0.0:
        return 0.0
    expected_energy = grad_sq_norm + dimension * noise_var_user
    if expected_energy == 0.0:
        return 1.0 / gain
    return min(1.0 / gain, np.sqrt(power) / np.sqrt(expected_energy))


def mac_superpose(signals: np.ndarray, gains: np.ndarray, noise_var: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Received vector: sum of gain-weighted signals plus receiver noise.

    signals has one row per transmitting user.  Receiver noise is drawn
    only when noise_var > 0 (keeps stream consumption identical between
    noisy and noiseless configurations of the same seed).
    """
    x = np.asarray(signals, dtype=float)
    g = np.asarray(gains, dtype=float)
    if x.ndim != 2:
        raise ParameterDomainError("signals must be 2-d (users, dimension)")
    if g.shape != (x.shape[0],):
        raise ParameterDomainError(
            f"gains shape {g.shape} does not match {x.shape[0]} signals")
    if noise_var < 0:
        raise ParameterDomainError("noise_var must be >= 0")
    received = g @ x if x.shape[0] else np.zeros(x.shape[1])
    if noise_var > 0.0:
        received = received + np.sqrt(noise_var) * rng.standard_normal(x.shape[1])
    return received
