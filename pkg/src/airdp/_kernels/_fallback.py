"""Numpy reference implementations of the hot-loop kernels.

DRAW PROTOCOL (normative for every backend and for the single-round
reference path in ``airdp.simulate``):

``streams`` is the 5-tuple of independent ``numpy.random.Generator``s
``(participation, fading, user_noise, receiver_noise, batch)``.  Each
simulated round consumes, each draw from its own stream:

  fading         one (K, 2) standard-normal block advancing the scatter
                 chain (train_quadratic only; mc_estimator_rounds models an
                 ideally inverted channel and leaves this stream untouched)
  participation  K uniforms on [0, 1); user k participates iff u[k] < p[k]
  user_noise     one (m, d) standard-normal block, participants in
                 ascending user order; nothing when m == 0
  receiver_noise one (d,) standard-normal block iff channel_noise_var > 0
  batch          reserved for minibatch index draws (unused here)

Because each purpose has its own stream, the order of use *across* streams
within a round is immaterial; the order and block shapes *within* each
stream are binding.
"""
from __future__ import annotations

import math

import numpy as np

from ..channel import fading_step

__all__ = ["fading_chain", "mc_estimator_rounds", "train_quadratic"]


def fading_chain(scatter, rician_factor: float, time_correlation: float,
                 steps: int, rng: np.random.Generator):
    """Advance the scatter chain ``steps`` rounds; returns
    (gains matrix of shape (steps, K), final scatter state)."""
    s = np.asarray(scatter, dtype=complex).copy()
    gains = np.empty((steps, s.size))
    for t in range(steps):
        gains[t], s = fading_step(s, rician_factor, time_correlation, rng)
    return gains, s


def _zeta(probs: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        log_all_out = float(np.log1p(-probs).sum())
    return 1.0 if np.isneginf(log_all_out) else -float(np.expm1(log_all_out))


def mc_estimator_rounds(gradients, probs, noise_std: float,
                        channel_noise_var: float, rounds: int, streams):
    """Monte Carlo moments of both gradient estimators with fixed per-user
    gradients and an ideally inverted channel.

    Returns a dict of accumulated sums over rounds: per-coordinate first
    and second moments of each estimator ('coord_sum_*', 'coord_sq_sum_*'),
    squared-norm first and second moments ('normsq_sum_*',
    'normsq_sq_sum_*'), and the per-round participant counts ('counts').
    Empty rounds contribute the pure-noise estimate in unknown mode and an
    exact zero in known mode.
    """
    part_rng, _, noise_rng, recv_rng, _ = streams
    g = np.ascontiguousarray(gradients, dtype=float)
    p = np.asarray(probs, dtype=float)
    num_users, dim = g.shape
    mu = float(p.sum())
    if mu <= 0:
        raise ValueError("expected participant count must be > 0")
    zeta = _zeta(p)
    coord_sum_u = np.zeros(dim)
    coord_sq_u = np.zeros(dim)
    coord_sum_k = np.zeros(dim)
    coord_sq_k = np.zeros(dim)
    normsq_u = normsq_sq_u = normsq_k = normsq_sq_k = 0.0
    counts = np.empty(rounds, dtype=np.int64)
    sqrt_n0 = math.sqrt(channel_noise_var)
    for t in range(rounds):
        u = part_rng.random(num_users)
        sel = u < p
        m = int(np.count_nonzero(sel))
        counts[t] = m
        if m:
            y = g[sel].sum(axis=0)
            z = noise_rng.standard_normal((m, dim))
            y = y + noise_std * z.sum(axis=0)
        else:
            y = np.zeros(dim)
        if channel_noise_var > 0.0:
            y = y + sqrt_n0 * recv_rng.standard_normal(dim)
        est_u = y / mu
        coord_sum_u += est_u
        coord_sq_u += est_u * est_u
        sq = float(est_u @ est_u)
        normsq_u += sq
        normsq_sq_u += sq * sq
        if m:
            est_k = y / (zeta * m)
            coord_sum_k += est_k
            coord_sq_k += est_k * est_k
            sq = float(est_k @ est_k)
            normsq_k += sq
            normsq_sq_k += sq * sq
    return {
        "coord_sum_unknown": coord_sum_u,
        "coord_sq_sum_unknown": coord_sq_u,
        "coord_sum_known": coord_sum_k,
        "coord_sq_sum_known": coord_sq_k,
        "normsq_sum_unknown": normsq_u,
        "normsq_sq_sum_unknown": normsq_sq_u,
        "normsq_sum_known": normsq_k,
        "normsq_sq_sum_known": normsq_sq_k,
        "counts": counts,
    }


def train_quadratic(curv, shard_means, w0, w_star, f_star: float,
                    probs_matrix, gain_threshold: float, lipschitz: float,
                    noise_std: float, channel_noise_var: float,
                    rician_factor: float, time_correlation: float,
                    scatter0, power: float, estimator_known: bool,
                    eta, streams):
    """Full training loop for the diagonal quadratic task.

    probs_matrix is a (rounds, K) array, or None to derive probabilities
    from the fading gains as min(1, h / gain_threshold).  power is the
    per-round transmit budget (np.inf reproduces exact channel inversion).
    eta is the (rounds,) step-size array.

    Returns (w_final, loss, gap, counts, mean_count, max_prob,
    effective_noise_var) with one entry per round; loss and gap are
    evaluated after the round's model update.
    """
    part_rng, fade_rng, noise_rng, recv_rng, _ = streams
    curv = np.asarray(curv, dtype=float)
    shard_means = np.ascontiguousarray(shard_means, dtype=float)
    num_users, dim = shard_means.shape
    eta = np.asarray(eta, dtype=float)
    rounds = eta.size
    w = np.array(w0, dtype=float, copy=True)
    w_star = np.asarray(w_star, dtype=float)
    scatter = np.asarray(scatter0, dtype=complex).copy()
    if probs_matrix is not None:
        probs_matrix = np.ascontiguousarray(probs_matrix, dtype=float)

    loss = np.empty(rounds)
    gap = np.empty(rounds)
    counts = np.empty(rounds, dtype=np.int64)
    mean_count = np.empty(rounds)
    max_prob = np.empty(rounds)
    eff_noise = np.empty(rounds)
    sigma2 = noise_std * noise_std
    sqrt_n0 = math.sqrt(channel_noise_var)

    for t in range(rounds):
        gains, scatter = fading_step(scatter, rician_factor,
                                     time_correlation, fade_rng)
        if probs_matrix is not None:
            p = probs_matrix[t]
        else:
            p = np.minimum(1.0, gains / gain_threshold)
        mu_t = float(p.sum())
        zeta_t = _zeta(p)
        mean_count[t] = mu_t
        max_prob[t] = float(p.max())

        u = part_rng.random(num_users)
        sel = u < p
        m = int(np.count_nonzero(sel))
        counts[t] = m

        gain_alpha_sq = 0.0
        if m:
            idx = np.flatnonzero(sel)
            grads = w * curv - shard_means[idx]
            sq = np.einsum("ij,ij->i", grads, grads)
            with np.errstate(divide="ignore"):
                scale = np.minimum(1.0, lipschitz / np.sqrt(sq))
            clipped = grads * scale[:, None]
            clipped_sq = sq * scale * scale
            h = gains[idx]
            if power == 0.0:
                alphas = np.zeros(m)
            else:
                energy = clipped_sq + dim * sigma2
                with np.errstate(divide="ignore"):
                    budget = math.sqrt(power) / np.sqrt(energy)
                alphas = np.minimum(1.0 / h, budget)
            z = noise_rng.standard_normal((m, dim))
            x = alphas[:, None] * (clipped + noise_std * z)
            y = (h[:, None] * x).sum(axis=0)
            gain_alpha_sq = float(((h * alphas) ** 2).sum())
        else:
            y = np.zeros(dim)
        if channel_noise_var > 0.0:
            y = y + sqrt_n0 * recv_rng.standard_normal(dim)
        eff_noise[t] = sigma2 * gain_alpha_sq + channel_noise_var

        if estimator_known:
            norm = zeta_t * m
        else:
            norm = mu_t
        if norm > 0.0:
            w = w - eta[t] * (y / norm)
        diff = w - w_star
        gap[t] = 0.5 * float((curv * diff) @ diff)
        loss[t] = gap[t] + f_star
    return w, loss, gap, counts, mean_count, max_prob, eff_noise
