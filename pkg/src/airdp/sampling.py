"""Randomized user participation: policies, draws, and exact count
statistics.

The participant count of independently sampled users follows a
Poisson-binomial law; its exact pmf and conditional inverse moments feed the
known-count convergence bound, and the summary statistics (mean, variance,
non-empty probability) feed everything else.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .errors import ConfigError, EnumerationSizeError, ParameterDomainError

__all__ = [
    "SamplingPolicy",
    "resolve_probabilities",
    "sample_participants",
    "ParticipantStats",
    "participant_stats",
    "count_distribution_exact",
    "inverse_moments_exact",
    "MAX_EXACT_NONUNIFORM",
]

# Contract boundary for the non-uniform exact pmf; beyond this, callers are
# expected to fall back to Monte Carlo.
MAX_EXACT_NONUNIFORM = 25


@dataclass(frozen=True)
class SamplingPolicy:
    """How per-round participation probabilities are produced.

    kind 'uniform'        one probability shared by all users, all rounds
    kind 'schedule'       one probability per round, shared by all users
    kind 'channel_aware'  p = min(1, gain / gain_threshold) from this
                          round's fading gains
    kind 'explicit'       a full (rounds, users) probability matrix
    """

    kind: str
    prob: Optional[float] = None
    schedule: Optional[np.ndarray] = None
    gain_threshold: Optional[float] = None
    matrix: Optional[np.ndarray] = None

    @classmethod
    def uniform(cls, prob: float) -> "SamplingPolicy":
        if not 0.0 <= prob <= 1.0:
            raise ParameterDomainError("prob must be in [0, 1]")
        return cls(kind="uniform", prob=float(prob))

    @classmethod
    def from_schedule(cls, probs: Sequence[float]) -> "SamplingPolicy":
        arr = np.asarray(probs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ParameterDomainError("schedule must be a non-empty vector")
        if np.any((arr < 0) | (arr > 1)):
            raise ParameterDomainError("schedule probabilities must be in [0, 1]")
        return cls(kind="schedule", schedule=arr)

    @classmethod
    def channel_aware(cls, gain_threshold: float) -> "SamplingPolicy":
        if gain_threshold <= 0:
            raise ParameterDomainError("gain_threshold must be > 0")
        return cls(kind="channel_aware", gain_threshold=float(gain_threshold))

    @classmethod
    def explicit(cls, matrix) -> "SamplingPolicy":
        arr = np.asarray(matrix, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise ParameterDomainError("matrix must be 2-d (rounds, users)")
        if np.any((arr < 0) | (arr > 1)):
            raise ParameterDomainError("matrix probabilities must be in [0, 1]")
        return cls(kind="explicit", matrix=arr)


def resolve_probabilities(policy: SamplingPolicy, num_users: int,
                          round_index: int = 0,
                          gains: Optional[np.ndarray] = None) -> np.ndarray:
    """Participation probability vector for one round."""
    if num_users < 1:
        raise ParameterDomainError("num_users must be >= 1")
    if round_index < 0:
        raise ParameterDomainError("round_index must be >= 0")
    if policy.kind == "uniform":
        return np.full(num_users, policy.prob)
    if policy.kind == "schedule":
        if round_index >= policy.schedule.size:
            raise ConfigError(
                f"round {round_index} beyond schedule of length "
                f"{policy.schedule.size}")
        return np.full(num_users, policy.schedule[round_index])
    if policy.kind == "channel_aware":
        if gains is None:
            raise ConfigError("channel_aware policy needs this round's gains")
        g = np.asarray(gains, dtype=float)
        if g.shape != (num_users,):
            raise ConfigError(f"gains must have shape ({num_users},)")
        return np.minimum(1.0, g / policy.gain_threshold)
    if policy.kind == "explicit":
        if policy.matrix.shape[1] != num_users:
            raise ConfigError(
                f"matrix has {policy.matrix.shape[1]} columns, need {num_users}")
        if round_index >= policy.matrix.shape[0]:
            raise ConfigError(
                f"round {round_index} beyond matrix of {policy.matrix.shape[0]} rows")
        return policy.matrix[round_index].copy()
    raise ConfigError(f"unknown policy kind {policy.kind!r}")


def sample_participants(probs: Sequence[float],
                        rng: np.random.Generator) -> np.ndarray:
    """Indices of users participating this round (sorted ascending).

    Canonical draw: one uniform per user, participate iff u < p.  Kernel
    backends replicate this consumption pattern exactly.
    """
    p = _check_probs(probs)
    u = rng.random(p.size)
    return np.flatnonzero(u < p)


@dataclass(frozen=True)
class ParticipantStats:
    """Moments of the participant count: mean, variance, and the
    probability that at least one user participates."""

    mean_count: float
    count_var: float
    nonempty_prob: float


def participant_stats(probs: Sequence[float]) -> ParticipantStats:
    p = _check_probs(probs)
    mu = float(p.sum())
    var = float((p * (1.0 - p)).sum())
    # 1 - prod(1-p) in log space; p == 1 drives the product to exactly 0.
    with np.errstate(divide="ignore"):
        log_all_out = float(np.sum(np.log1p(-p)))
    zeta = 1.0 if np.isneginf(log_all_out) else -float(np.expm1(log_all_out))
    return ParticipantStats(mu, var, min(1.0, max(0.0, zeta)))


def count_distribution_exact(probs: Sequence[float]) -> np.ndarray:
    """Exact pmf of the participant count, index j = P(count == j).

    Uniform probabilities take the binomial closed form at any K.
    Non-uniform vectors are convolved user by user, which is exact but
    quadratic, hence the K <= MAX_EXACT_NONUNIFORM guard.
    """
    p = _check_probs(probs)
    num_users = p.size
    if np.ptp(p) == 0.0:
        return stats.binom.pmf(np.arange(num_users + 1), num_users, p[0])
    if num_users > MAX_EXACT_NONUNIFORM:
        raise EnumerationSizeError(
            f"exact count pmf limited to {MAX_EXACT_NONUNIFORM} users for "
            f"non-uniform probabilities (got {num_users}); estimate by "
            "Monte Carlo instead")
    pmf = np.zeros(num_users + 1)
    pmf[0] = 1.0
    for j, pj in enumerate(p):
        pmf[1:j + 2] = pmf[1:j + 2] * (1.0 - pj) + pmf[:j + 1] * pj
        pmf[0] *= 1.0 - pj
    return pmf


def inverse_moments_exact(probs: Sequence[float]) -> Tuple[float, float]:
    """(E[1/count; count>=1], E[1/count^2; count>=1]) from the exact pmf.

    Empty rounds contribute zero, matching an estimator that outputs zero
    when nobody transmits.
    """
    pmf = count_distribution_exact(probs)
    counts = np.arange(1, pmf.size)
    first = float(np.sum(pmf[1:] / counts))
    second = float(np.sum(pmf[1:] / counts ** 2))
    return first, second


def _check_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ParameterDomainError("probs must be a non-empty 1-d vector")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ParameterDomainError("probabilities must lie in [0, 1]")
    return p
