"""Closed-form privacy accounting for noisy gradient aggregation over a
Gaussian multiple-access channel with randomized user participation.

Every quantity uses natural logarithms.  The per-user mechanism is the
Gaussian mechanism on a clipped gradient; aggregation over the channel sums
the per-user noise terms, and random participation both thins the data and
grows the summed noise, which is what the central budget exploits.  Counts
are controlled through a Hoeffding window: with probability at least
1 - delta_prime the participant count stays within beta*K of its mean, and
all central statements are conditioned on that event.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BudgetOverflowWarning,
    ConcentrationShortfallWarning,
    InfeasibleConcentrationError,
    ParameterDomainError,
)

__all__ = [
    "PrivacyBudget",
    "MechanismParams",
    "ConcentrationParams",
    "gaussian_mechanism_epsilon",
    "sensitivity_bound",
    "hoeffding_delta",
    "beta_from_delta",
    "adaptive_delta_prime",
    "local_epsilon",
    "local_delta",
    "co_sampling_margin",
    "central_epsilon_nonuniform",
    "central_epsilon_from_stats",
    "central_epsilon_uniform",
    "optimal_sampling_probability",
    "comparator_epsilon",
    "COMPARATOR_VARIANTS",
    "compose_heterogeneous",
    "compose_homogeneous",
    "compose_heterogeneous_upper",
]

# Largest exponent fed to expm1 before epsilon is reported as infinite.
_EXP_GUARD = 700.0


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) pair.  epsilon may be math.inf; delta is clamped
    by the producing formulas, never epsilon."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if self.epsilon < 0 or math.isnan(self.epsilon):
            raise ParameterDomainError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0.0 <= self.delta <= 1.0:
            raise ParameterDomainError(f"delta must be in [0, 1], got {self.delta}")


@dataclass(frozen=True)
class MechanismParams:
    """Static parameters of the per-user Gaussian mechanism.

    lipschitz          gradient norm bound enforced by clipping
    sigma_min          smallest per-user noise standard deviation
    delta_local        failure probability of the per-user mechanism
    channel_noise_var  receiver noise variance (only enters budgets that
                       count the channel noise as additional masking)
    """

    lipschitz: float
    sigma_min: float
    delta_local: float
    channel_noise_var: float = 0.0

    def __post_init__(self):
        if self.lipschitz < 0:
            raise ParameterDomainError("lipschitz must be >= 0")
        if self.sigma_min <= 0:
            raise ParameterDomainError("sigma_min must be > 0")
        if not 0.0 < self.delta_local < 1.0:
            raise ParameterDomainError("delta_local must be in (0, 1)")
        if self.channel_noise_var < 0:
            raise ParameterDomainError("channel_noise_var must be >= 0")

    def gaussian_constant(self) -> float:
        # Worst-case single-user epsilon before any aggregation benefit:
        # sensitivity 2L against noise sigma_min.
        return gaussian_mechanism_epsilon(
            2.0 * self.lipschitz, self.sigma_min, self.delta_local)


@dataclass(frozen=True)
class ConcentrationParams:
    """Hoeffding window for the participant count: the count deviates from
    its mean by at most beta*K except with probability delta_prime."""

    beta: float
    delta_prime: float

    @classmethod
    def from_delta(cls, delta_prime: float, num_users: int) -> "ConcentrationParams":
        return cls(beta_from_delta(delta_prime, num_users), delta_prime)

    @classmethod
    def from_beta(cls, beta: float, num_users: int) -> "ConcentrationParams":
        return cls(beta, min(1.0, hoeffding_delta(beta, num_users)))


def gaussian_mechanism_epsilon(sensitivity: float, sigma: float,
                               delta_local: float) -> float:
    """Epsilon of the Gaussian mechanism at a given l2 sensitivity."""
    if sensitivity < 0:
        raise ParameterDomainError("sensitivity must be >= 0")
    if sigma <= 0:
        raise ParameterDomainError("sigma must be > 0")
    if not 0.0 < delta_local < 1.0:
        raise ParameterDomainError("delta_local must be in (0, 1)")
    return (sensitivity / sigma) * math.sqrt(2.0 * math.log(1.25 / delta_local))


def sensitivity_bound(lipschitz: float, gain: float, scale: float) -> float:
    """l2 sensitivity of one user's transmitted signal: swapping that user's
    data moves the channel input by at most 2 * gain * scale * lipschitz."""
    if lipschitz < 0 or gain < 0 or scale < 0:
        raise ParameterDomainError("lipschitz, gain and scale must be >= 0")
    return 2.0 * gain * scale * lipschitz


def hoeffding_delta(beta: float, num_users: int) -> float:
    """Probability bound for the count leaving the +-beta*K window.

    Returns 2*exp(-2*beta^2*K), which exceeds 1 for small beta; callers
    clamp where a probability is required.
    """
    if beta < 0:
        raise ParameterDomainError("beta must be >= 0")
    _check_num_users(num_users)
    return 2.0 * math.exp(-2.0 * beta * beta * num_users)


def beta_from_delta(delta_prime: float, num_users: int) -> float:
    """Window half-width (as a fraction of K) for a target failure
    probability; inverse of hoeffding_delta."""
    _check_delta_prime(delta_prime)
    _check_num_users(num_users)
    return math.sqrt(0.5 * math.log(2.0 / delta_prime)) / math.sqrt(num_users)


def adaptive_delta_prime(expected_count: float, num_users: int,
                         pad: float = 1e-5) -> float:
    """Smallest usable concentration failure probability plus a pad.

    The window is non-empty only for delta_prime above 2*exp(-2*mu^2/K);
    this returns that floor plus ``pad`` so downstream formulas stay
    feasible for any expected count mu > 0.
    """
    _check_num_users(num_users)
    if expected_count < 0:
        raise ParameterDomainError("expected_count must be >= 0")
    if pad <= 0:
        raise ParameterDomainError("pad must be > 0")
    return 2.0 * math.exp(-2.0 * expected_count * expected_count / num_users) + pad


def local_epsilon(params: MechanismParams, kappa: float,
                  include_channel_noise: bool = True) -> float:
    """Per-user epsilon under aggregation with co-participation margin kappa.

    kappa is the expected number of other participants minus the Hoeffding
    slack beta*K; each of them contributes at least sigma_min^2 of masking
    noise on top of the user's own.  With include_channel_noise the receiver
    noise variance joins the denominator as well (that variant reproduces
    the published tables); without it the bound uses user noise only.
    A negative kappa is clamped to zero with a warning.
    """
    if kappa < 0:
        warnings.warn(
            f"co-participation margin {kappa:.6g} is negative; clamped to 0 "
            "(aggregation provides no amplification)",
            ConcentrationShortfallWarning, stacklevel=2)
        kappa = 0.0
    n0 = params.channel_noise_var if include_channel_noise else 0.0
    denom = math.sqrt((1.0 + kappa) * params.sigma_min ** 2 + n0)
    return (2.0 * params.lipschitz
            * math.sqrt(2.0 * math.log(1.25 / params.delta_local)) / denom)


def local_delta(participation_prob: float, delta_local: float,
                delta_prime: float) -> float:
    """Companion delta for local_epsilon: the user only transmits with its
    participation probability, and the statement also spends the
    concentration failure probability."""
    if not 0.0 <= participation_prob <= 1.0:
        raise ParameterDomainError("participation_prob must be in [0, 1]")
    return min(1.0, participation_prob * (delta_local + delta_prime))


def co_sampling_margin(probs: Sequence[float], user: int,
                       delta_prime: float) -> float:
    """kappa for one user: expected co-participant count minus beta*K.

    May be negative; local_epsilon clamps it.
    """
    p = _check_probs(probs)
    num_users = p.size
    if not 0 <= user < num_users:
        raise ParameterDomainError(f"user index {user} out of range")
    beta = beta_from_delta(delta_prime, num_users)
    return float(p.sum() - p[user] - beta * num_users)


def central_epsilon_nonuniform(probs: Sequence[float], params: MechanismParams,
                               delta_prime: float) -> PrivacyBudget:
    """Central budget of one aggregation round with per-user sampling
    probabilities.

    Conditioned on the participant count staying within its Hoeffding
    window, at least mu - beta*K users add noise, so the worst-case single
    contribution faces an effective standard deviation sigma_min
    * sqrt(mu - beta*K); sampling then scales the privacy loss through the
    largest participation probability.
    """
    p = _check_probs(probs)
    return central_epsilon_from_stats(float(p.sum()), float(p.max()),
                                      p.size, params, delta_prime)


def central_epsilon_from_stats(mean_count: float, max_prob: float,
                               num_users: int, params: MechanismParams,
                               delta_prime: float) -> PrivacyBudget:
    """central_epsilon_nonuniform from the two statistics it actually
    depends on: the expected participant count and the largest individual
    participation probability.  Used by training traces, which carry the
    per-round statistics rather than full probability vectors."""
    _check_num_users(num_users)
    _check_delta_prime(delta_prime)
    if not 0.0 <= max_prob <= 1.0:
        raise ParameterDomainError("max_prob must be in [0, 1]")
    if not 0.0 <= mean_count <= num_users:
        raise ParameterDomainError("mean_count must be in [0, num_users]")
    mu = mean_count
    pmax = max_prob
    c = params.gaussian_constant()
    delta = min(1.0, delta_prime + pmax * params.delta_local / (1.0 - delta_prime))
    if c == 0.0:
        # Degenerate mechanism (lipschitz 0): nothing to protect, and the
        # concentration window is irrelevant.
        return PrivacyBudget(0.0, delta)
    margin = mu - beta_from_delta(delta_prime, num_users) * num_users
    if margin <= 0.0:
        raise InfeasibleConcentrationError(
            f"expected count {mu:.6g} does not exceed the Hoeffding slack; "
            f"delta_prime={delta_prime:.3g} is at or below its floor "
            f"{2.0 * math.exp(-2.0 * mu * mu / num_users):.3g}")
    eps = _amplified_epsilon(pmax / (1.0 - delta_prime), c / math.sqrt(margin))
    return PrivacyBudget(eps, delta)


def central_epsilon_uniform(prob: float, num_users: int,
                            params: MechanismParams,
                            delta_prime: float) -> PrivacyBudget:
    """central_epsilon_nonuniform when every user shares one probability.

    Kept closed-form in (p, K) so sweeps over millions of users never
    materialize a probability vector.
    """
    if not 0.0 <= prob <= 1.0:
        raise ParameterDomainError("prob must be in [0, 1]")
    _check_num_users(num_users)
    _check_delta_prime(delta_prime)
    c = params.gaussian_constant()
    delta = min(1.0, delta_prime + prob * params.delta_local / (1.0 - delta_prime))
    if c == 0.0:
        return PrivacyBudget(0.0, delta)
    beta = beta_from_delta(delta_prime, num_users)
    if prob <= beta:
        raise InfeasibleConcentrationError(
            f"prob {prob:.6g} must exceed the window half-width beta={beta:.6g}")
    eps = _amplified_epsilon(
        prob / (1.0 - delta_prime),
        c / math.sqrt(num_users * (prob - beta)))
    return PrivacyBudget(eps, delta)


def optimal_sampling_probability(num_users: int, delta_prime: float) -> float:
    """Participation probability minimizing the linearized central epsilon;
    equals twice the window half-width, capped at 1."""
    return min(1.0, 2.0 * beta_from_delta(delta_prime, num_users))


COMPARATOR_VARIANTS = (
    "wireless_no_sampling",
    "orthogonal_no_sampling",
    "orthogonal_with_sampling",
)


def comparator_epsilon(variant: str, num_users: int, params: MechanismParams,
                       delta_prime: float) -> float:
    """Reference budgets the aggregated-and-sampled scheme is plotted against.

    wireless_no_sampling      all K users aggregate, no sampling: c/sqrt(K)
    orthogonal_no_sampling    no aggregation benefit at all: c
    orthogonal_with_sampling  subsampled single-user mechanism at the same
                              optimal probability: log(1 + p*(e^c - 1))
    """
    _check_num_users(num_users)
    c = params.gaussian_constant()
    if variant == "wireless_no_sampling":
        return c / math.sqrt(num_users)
    if variant == "orthogonal_no_sampling":
        return c
    if variant == "orthogonal_with_sampling":
        p_star = optimal_sampling_probability(num_users, delta_prime)
        if c == 0.0:
            return 0.0
        return _amplified_epsilon(p_star, c)
    raise ParameterDomainError(
        f"unknown variant {variant!r}; expected one of {COMPARATOR_VARIANTS}")


def compose_heterogeneous(epsilons: Iterable[float], deltas: Iterable[float],
                          delta_slack: float) -> PrivacyBudget:
    """Advanced composition of per-round budgets that may differ by round.

    epsilon adds the first-order terms eps*tanh(eps/2) plus the
    sqrt(2*log(1/delta_slack)*sum(eps^2)) concentration term; delta composes
    as 1 - (1 - delta_slack) * prod(1 - delta_t).
    """
    eps = np.asarray(list(epsilons), dtype=float)
    dts = np.asarray(list(deltas), dtype=float)
    if eps.size == 0:
        raise ParameterDomainError("need at least one round to compose")
    if eps.size != dts.size:
        raise ParameterDomainError("epsilons and deltas must have equal length")
    if np.any(eps < 0) or np.any(np.isnan(eps)):
        raise ParameterDomainError("epsilons must be >= 0")
    if np.any((dts < 0) | (dts > 1)):
        raise ParameterDomainError("deltas must be in [0, 1]")
    if not 0.0 < delta_slack < 1.0:
        raise ParameterDomainError("delta_slack must be in (0, 1)")
    if np.any(np.isinf(eps)):
        total_eps = math.inf
    else:
        # (e^eps - 1)/(e^eps + 1) == tanh(eps/2), stable for any magnitude.
        first_order = float(np.sum(eps * np.tanh(eps / 2.0)))
        total_eps = first_order + math.sqrt(
            2.0 * math.log(1.0 / delta_slack) * float(np.sum(eps * eps)))
    total_delta = 1.0 - (1.0 - delta_slack) * float(np.prod(1.0 - dts))
    return PrivacyBudget(total_eps, min(1.0, max(0.0, total_delta)))


def compose_homogeneous(epsilon: float, delta_round: float, num_rounds: int,
                        delta_slack: float) -> PrivacyBudget:
    """Advanced composition when every round spends the same budget."""
    if epsilon < 0 or math.isnan(epsilon):
        raise ParameterDomainError("epsilon must be >= 0")
    if not 0.0 <= delta_round <= 1.0:
        raise ParameterDomainError("delta_round must be in [0, 1]")
    if num_rounds < 1:
        raise ParameterDomainError("num_rounds must be >= 1")
    if not 0.0 < delta_slack < 1.0:
        raise ParameterDomainError("delta_slack must be in (0, 1)")
    if epsilon > _EXP_GUARD or math.isinf(epsilon):
        warnings.warn("per-round epsilon too large to compose; reporting inf",
                      BudgetOverflowWarning, stacklevel=2)
        total_eps = math.inf
    else:
        total_eps = (math.sqrt(2.0 * num_rounds * math.log(1.0 / delta_slack))
                     * epsilon + num_rounds * epsilon * math.expm1(epsilon))
    total_delta = min(1.0, num_rounds * delta_round + delta_slack)
    return PrivacyBudget(total_eps, total_delta)


def compose_heterogeneous_upper(max_probs: Sequence[float],
                                expected_counts: Sequence[float],
                                num_users: int, params: MechanismParams,
                                delta_prime: float,
                                delta_slack: float) -> float:
    """Closed-form upper relaxation of compose_heterogeneous applied to
    per-round central budgets.

    Uses tanh(x/2) <= x/2 and log(1+x) <= x, then freezes the exponent at
    the round with the smallest expected count, leaving only sums of squared
    participation maxima.  Always at least the exact composed epsilon.
    """
    pmax = np.asarray(max_probs, dtype=float)
    mus = np.asarray(expected_counts, dtype=float)
    if pmax.size == 0 or pmax.size != mus.size:
        raise ParameterDomainError(
            "max_probs and expected_counts must be equal-length, non-empty")
    if np.any((pmax < 0) | (pmax > 1)):
        raise ParameterDomainError("max_probs must be in [0, 1]")
    _check_num_users(num_users)
    _check_delta_prime(delta_prime)
    if not 0.0 < delta_slack < 1.0:
        raise ParameterDomainError("delta_slack must be in (0, 1)")
    c = params.gaussian_constant()
    if c == 0.0:
        return 0.0
    beta = beta_from_delta(delta_prime, num_users)
    margin = float(mus.min()) - beta * num_users
    if margin <= 0.0:
        raise InfeasibleConcentrationError(
            "smallest expected count does not exceed the Hoeffding slack")
    x = c / math.sqrt(margin)
    if x > _EXP_GUARD:
        warnings.warn("per-round exponent too large; upper bound is inf",
                      BudgetOverflowWarning, stacklevel=2)
        return math.inf
    growth = math.expm1(x)
    sum_q2 = float(np.sum(pmax * pmax))
    return (growth * growth * sum_q2 / (2.0 * (1.0 - delta_prime) ** 2)
            + math.sqrt(2.0 * math.log(1.0 / delta_slack)) * growth
            * math.sqrt(sum_q2) / (1.0 - delta_prime))


def _amplified_epsilon(q: float, x: float) -> float:
    """log(1 + q*(e^x - 1)) with the overflow guard.

    q is the sampling factor (may slightly exceed 1 through the 1/(1-delta')
    correction), x the conditional mechanism exponent.
    """
    if x > _EXP_GUARD:
        warnings.warn(
            f"privacy exponent {x:.3g} exceeds the overflow guard; "
            "reporting epsilon = inf", BudgetOverflowWarning, stacklevel=3)
        return math.inf
    return math.log1p(q * math.expm1(x))


def _check_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ParameterDomainError("probs must be a non-empty 1-d vector")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ParameterDomainError("probabilities must lie in [0, 1]")
    return p


def _check_delta_prime(delta_prime: float):
    if not 0.0 < delta_prime < 1.0:
        raise ParameterDomainError("delta_prime must be in (0, 1)")


def _check_num_users(num_users: int):
    if not isinstance(num_users, (int, np.integer)) or num_users < 1:
        raise ParameterDomainError("num_users must be a positive integer")
