"""Optimality-gap bounds for strongly convex federated SGD over the noisy
aggregation channel.

Two estimator regimes: normalization by the expected participant count
("unknown", the server never learns who transmitted) and by the realized
count rescaled by the non-empty probability ("known").  Both bounds follow
the classic strongly-convex 1/(lambda*t) step-size analysis, with the
aggregate second moment of the gradient estimate in the numerator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ParameterDomainError
from .sampling import ParticipantStats, inverse_moments_exact

__all__ = [
    "ConvergenceParams",
    "second_moment_bound",
    "bound_unknown",
    "bound_optimal_p",
    "OptimalPBound",
    "inverse_moments_taylor",
    "bound_known",
    "bound_known_uniform",
]

StatsLike = Union[ParticipantStats, Sequence[ParticipantStats]]


@dataclass(frozen=True)
class ConvergenceParams:
    """Problem constants plus per-round participation statistics.

    stats may be a single ParticipantStats (time-invariant policies) or a
    sequence of length ``rounds``.  probs optionally carries the underlying
    probability vector(s) for evaluators that need exact count moments.
    """

    strong_convexity: float
    smoothness: float
    lipschitz: float
    dimension: int
    noise_var_max: float
    channel_noise_var: float
    rounds: int
    stats: StatsLike
    probs: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.strong_convexity <= 0:
            raise ParameterDomainError("strong_convexity must be > 0")
        if self.smoothness < self.strong_convexity:
            raise ParameterDomainError("smoothness must be >= strong_convexity")
        if self.lipschitz < 0:
            raise ParameterDomainError("lipschitz must be >= 0")
        if self.dimension < 1:
            raise ParameterDomainError("dimension must be >= 1")
        if self.noise_var_max < 0 or self.channel_noise_var < 0:
            raise ParameterDomainError("noise variances must be >= 0")
        if self.rounds < 1:
            raise ParameterDomainError("rounds must be >= 1")

    def stats_per_round(self) -> list:
        if isinstance(self.stats, ParticipantStats):
            return [self.stats] * self.rounds
        stats = list(self.stats)
        if len(stats) != self.rounds:
            raise ParameterDomainError(
                f"got {len(stats)} per-round stats for {self.rounds} rounds")
        return stats


def second_moment_bound(stats: ParticipantStats, lipschitz: float,
                        dimension: int, noise_var_max: float,
                        channel_noise_var: float) -> float:
    """Cap on E||gradient estimate||^2 for the expected-count estimator.

    Worst case aligns all participant gradients at the norm bound, giving
    L^2 * E[count^2] / mu^2; the noise contributes d*(sigma^2*mu + N0)/mu^2.
    """
    if stats.mean_count <= 0:
        raise ParameterDomainError("mean participant count must be > 0")
    if lipschitz < 0 or noise_var_max < 0 or channel_noise_var < 0:
        raise ParameterDomainError("constants must be >= 0")
    if dimension < 1:
        raise ParameterDomainError("dimension must be >= 1")
    mu = stats.mean_count
    second_moment_count = mu * mu + stats.count_var
    return (lipschitz ** 2 * second_moment_count / mu ** 2
            + dimension / mu ** 2
            * (noise_var_max * mu + channel_noise_var))


def bound_unknown(params: ConvergenceParams) -> float:
    """Gap bound after ``rounds`` steps with expected-count normalization:
    (2*smoothness / (lambda^2 * T^2)) * sum_t G_t^2."""
    total = 0.0
    for st in params.stats_per_round():
        total += second_moment_bound(
            st, params.lipschitz, params.dimension,
            params.noise_var_max, params.channel_noise_var)
    return (2.0 * params.smoothness
            / (params.strong_convexity ** 2 * params.rounds ** 2) * total)


class OptimalPBound(NamedTuple):
    value: float
    p_star: float
    clamped: bool


def bound_optimal_p(params: ConvergenceParams, delta_prime: float,
                    num_users: int) -> OptimalPBound:
    """bound_unknown specialized to uniform sampling at the
    privacy-optimal probability.

    With a = 2*sqrt(0.5*log(2/delta')), the optimal probability is
    a/sqrt(K); when that reaches 1 the bound falls back to full
    participation and the result is flagged clamped.
    """
    if not 0.0 < delta_prime < 1.0:
        raise ParameterDomainError("delta_prime must be in (0, 1)")
    if num_users < 1:
        raise ParameterDomainError("num_users must be >= 1")
    a = 2.0 * math.sqrt(0.5 * math.log(2.0 / delta_prime))
    p_star = a / math.sqrt(num_users)
    if p_star >= 1.0:
        uni = _uniform_params(params, 1.0, num_users)
        return OptimalPBound(bound_unknown(uni), 1.0, True)
    root_k = math.sqrt(num_users)
    bracket = (params.lipschitz ** 2 * (a * (root_k - 1.0 / root_k) + 1.0)
               / (a * root_k)
               + params.dimension / (a * a * num_users)
               * (a * root_k * params.noise_var_max + params.channel_noise_var))
    value = (2.0 * params.smoothness
             / (params.strong_convexity ** 2 * params.rounds) * bracket)
    return OptimalPBound(value, p_star, False)


def inverse_moments_taylor(mean_count: float,
                           count_var: float) -> Tuple[float, float]:
    """Second-order expansions of E[1/count] and E[1/count^2] around the
    mean: (1/mu + var/mu^3, 1/mu^2 + 3*var/mu^4)."""
    if mean_count <= 0:
        raise ParameterDomainError("mean_count must be > 0")
    if count_var < 0:
        raise ParameterDomainError("count_var must be >= 0")
    mu = mean_count
    return (1.0 / mu + count_var / mu ** 3,
            1.0 / mu ** 2 + 3.0 * count_var / mu ** 4)


def bound_known(params: ConvergenceParams, moments: str = "taylor") -> float:
    """Gap bound for realized-count normalization.

    Per round: L^2/zeta + (d/zeta^2) * (sigma^2_max * E[1/count]
    + E[1/count^2] * N0), with the inverse moments taken either from the
    Taylor expansion ('taylor') or the exact count pmf ('exact', which
    needs params.probs).
    """
    if moments not in ("taylor", "exact"):
        raise ParameterDomainError("moments must be 'taylor' or 'exact'")
    per_round = params.stats_per_round()
    if moments == "exact":
        probs = _probs_per_round(params)
    total = 0.0
    for t, st in enumerate(per_round):
        if st.nonempty_prob <= 0:
            raise ParameterDomainError(
                "non-empty probability must be > 0 for the known-count bound")
        if moments == "taylor":
            inv1, inv2 = inverse_moments_taylor(st.mean_count, st.count_var)
        else:
            inv1, inv2 = inverse_moments_exact(probs[t])
        total += (params.lipschitz ** 2 / st.nonempty_prob
                  + params.dimension / st.nonempty_prob ** 2
                  * (params.noise_var_max * inv1
                     + inv2 * params.channel_noise_var))
    return (2.0 * params.smoothness
            / (params.strong_convexity ** 2 * params.rounds ** 2) * total)


def bound_known_uniform(params: ConvergenceParams, prob: float,
                        num_users: int) -> float:
    """Closed form of bound_known('taylor') for uniform time-invariant
    sampling, written directly in (p, K) with zeta = 1 - (1-p)^K.

    Algebraically identical to the generic Taylor path; kept as a separate
    route so the two can be cross-checked.
    """
    if not 0.0 < prob <= 1.0:
        raise ParameterDomainError("prob must be in (0, 1]")
    if num_users < 1:
        raise ParameterDomainError("num_users must be >= 1")
    kp = num_users * prob
    zeta = -math.expm1(num_users * math.log1p(-prob)) if prob < 1.0 else 1.0
    bracket = (params.lipschitz ** 2 / zeta
               + params.dimension / (kp * zeta ** 2)
               * (params.noise_var_max * (1.0 + (1.0 - prob) / kp)
                  + (1.0 + 3.0 * (1.0 - prob) / kp)
                  * params.channel_noise_var / kp))
    return (2.0 * params.smoothness
            / (params.strong_convexity ** 2 * params.rounds) * bracket)


def _uniform_params(params: ConvergenceParams, prob: float,
                    num_users: int) -> ConvergenceParams:
    mu = num_users * prob
    stats = ParticipantStats(mu, num_users * prob * (1.0 - prob),
                             -math.expm1(num_users * math.log1p(-prob))
                             if prob < 1.0 else 1.0)
    return ConvergenceParams(
        params.strong_convexity, params.smoothness, params.lipschitz,
        params.dimension, params.noise_var_max, params.channel_noise_var,
        params.rounds, stats)


def _probs_per_round(params: ConvergenceParams) -> list:
    if params.probs is None:
        raise ParameterDomainError(
            "exact inverse moments need the probability vector(s) in "
            "ConvergenceParams.probs")
    arr = np.asarray(params.probs, dtype=float)
    if arr.ndim == 1:
        return [arr] * params.rounds
    if arr.ndim == 2 and arr.shape[0] == params.rounds:
        return [arr[t] for t in range(params.rounds)]
    raise ParameterDomainError(
        "probs must be one vector or a (rounds, users) matrix")
