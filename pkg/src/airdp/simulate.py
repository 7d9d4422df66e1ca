"""End-to-end simulation of private federated SGD over the noisy
aggregation channel: synthetic tasks, the single-round reference
implementation, and the training loop with its privacy-accounting trace.

Randomness discipline: every trial owns five purpose-keyed generator
streams (participation, fading, user noise, receiver noise, batch), spawned
from (master_seed, trial).  The per-round draw protocol is documented in
``airdp._kernels._fallback`` and is shared by the compiled kernel, the
numpy kernel, and ``run_round`` here, so any two paths given the same seed
walk identical random sequences.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np
from scipy import optimize
from scipy.special import expit

from . import _kernels
from .accountant import (MechanismParams, adaptive_delta_prime,
                         beta_from_delta, central_epsilon_from_stats,
                         local_epsilon)
from .channel import (ChannelParams, ChannelRealization, advance_realization,
                      empirical_alpha, initial_realization, inversion_alpha,
                      mac_superpose, snr_to_power, stationary_scatter)
from .errors import (ConfigError, InfeasibleConcentrationError,
                     ParameterDomainError)
from .sampling import (SamplingPolicy, participant_stats,
                       resolve_probabilities, sample_participants)

__all__ = [
    "TrialStreams",
    "QuadraticTask",
    "LogisticTask",
    "make_quadratic_task",
    "make_logistic_task",
    "clip_gradient",
    "local_gradient",
    "perturb_and_scale",
    "estimate_unknown",
    "estimate_known",
    "ModelState",
    "RoundOutcome",
    "run_round",
    "TrainConfig",
    "TrainingTrace",
    "run_training",
    "estimator_moments_mc",
    "TRACE_COLUMNS",
]


# ---------------------------------------------------------------------------
# RNG streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialStreams:
    """The five independent generator streams of one trial, one per random
    purpose.  Keeping purposes on separate streams makes draws independent
    of evaluation order across purposes and lets configurations that skip a
    purpose (say, receiver noise) leave every other stream untouched."""

    participation: np.random.Generator
    fading: np.random.Generator
    user_noise: np.random.Generator
    receiver_noise: np.random.Generator
    batch: np.random.Generator

    @classmethod
    def from_seed(cls, master_seed: int, trial: int = 0) -> "TrialStreams":
        root = np.random.SeedSequence(master_seed, spawn_key=(trial,))
        children = root.spawn(5)
        return cls(*(np.random.Generator(np.random.PCG64(c))
                     for c in children))

    def as_tuple(self) -> tuple:
        return (self.participation, self.fading, self.user_noise,
                self.receiver_noise, self.batch)


# ---------------------------------------------------------------------------
# Synthetic tasks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticTask:
    """Diagonal quadratic objective with eigenvalues spanning exactly
    [strong_convexity, smoothness] and a closed-form optimum.

    Each data point u contributes 0.5*w'Aw - u'w; user k holds one shard of
    points, so the user's full-batch gradient is A w - mean(shard_k) and
    the global optimum is w* = A^{-1} (grand mean).
    """

    curvatures: np.ndarray           # (d,) diagonal of A
    points: np.ndarray               # (K, D, d)
    shard_means: np.ndarray          # (K, d)
    w_star: np.ndarray               # (d,)
    f_star: float
    strong_convexity: float
    smoothness: float

    @property
    def num_users(self) -> int:
        return self.points.shape[0]

    @property
    def shard_size(self) -> int:
        return self.points.shape[1]

    @property
    def dimension(self) -> int:
        return self.points.shape[2]

    def gap(self, w: np.ndarray) -> float:
        diff = np.asarray(w) - self.w_star
        return 0.5 * float((self.curvatures * diff) @ diff)

    def loss(self, w: np.ndarray) -> float:
        return self.gap(w) + self.f_star

    def user_gradient(self, user: int, w: np.ndarray,
                      batch_indices: Optional[np.ndarray] = None) -> np.ndarray:
        if batch_indices is None:
            target = self.shard_means[user]
        else:
            idx = np.asarray(batch_indices)
            if idx.size == 0:
                raise ParameterDomainError("batch must be non-empty")
            target = self.points[user, idx].mean(axis=0)
        return w * self.curvatures - target


@dataclass(frozen=True)
class LogisticTask:
    """Two-class Gaussian logistic regression with l2 regularization; the
    optimum is found numerically once at construction."""

    features: np.ndarray             # (K, D, d)
    labels: np.ndarray               # (K, D) in {-1, +1}
    l2_reg: float
    w_star: np.ndarray
    f_star: float

    @property
    def num_users(self) -> int:
        return self.features.shape[0]

    @property
    def shard_size(self) -> int:
        return self.features.shape[1]

    @property
    def dimension(self) -> int:
        return self.features.shape[2]

    def loss(self, w: np.ndarray) -> float:
        x = self.features.reshape(-1, self.dimension)
        y = self.labels.reshape(-1)
        margins = -y * (x @ w)
        data = float(np.mean(np.logaddexp(0.0, margins)))
        return data + 0.5 * self.l2_reg * float(w @ w)

    def gap(self, w: np.ndarray) -> float:
        return self.loss(w) - self.f_star

    def user_gradient(self, user: int, w: np.ndarray,
                      batch_indices: Optional[np.ndarray] = None) -> np.ndarray:
        x = self.features[user]
        y = self.labels[user]
        if batch_indices is not None:
            idx = np.asarray(batch_indices)
            if idx.size == 0:
                raise ParameterDomainError("batch must be non-empty")
            x = x[idx]
            y = y[idx]
        weights = expit(-y * (x @ w))          # sigmoid of the margin
        data_grad = -(y * weights) @ x / x.shape[0]
        return data_grad + self.l2_reg * w


TrainingTask = Union[QuadraticTask, LogisticTask]


def make_quadratic_task(num_users: int, dimension: int, shard_size: int,
                        strong_convexity: float, smoothness: float,
                        rng: np.random.Generator, target_scale: float = 0.3,
                        point_scale: float = 0.1) -> QuadraticTask:
    """Synthesize the quadratic task: curvatures linearly spaced on
    [strong_convexity, smoothness], per-point targets scattered around a
    seeded draw.  target_scale controls the distance of the optimum from
    the origin (and so the initial gradient norms); point_scale the
    per-point scatter."""
    if num_users < 1 or dimension < 1 or shard_size < 1:
        raise ParameterDomainError("num_users, dimension, shard_size >= 1")
    if not 0 < strong_convexity <= smoothness:
        raise ParameterDomainError(
            "need 0 < strong_convexity <= smoothness")
    curv = np.linspace(strong_convexity, smoothness, dimension)
    center = target_scale * rng.standard_normal(dimension)
    raw = rng.standard_normal((num_users, shard_size, dimension))
    raw = raw - raw.mean(axis=(0, 1))
    points = center + point_scale * raw
    grand_mean = points.mean(axis=(0, 1))
    w_star = grand_mean / curv
    f_star = 0.5 * float((curv * w_star) @ w_star) - float(grand_mean @ w_star)
    return QuadraticTask(
        curvatures=curv, points=points, shard_means=points.mean(axis=1),
        w_star=w_star, f_star=f_star, strong_convexity=strong_convexity,
        smoothness=smoothness)


def make_logistic_task(num_users: int, dimension: int, shard_size: int,
                       l2_reg: float, rng: np.random.Generator,
                       separation: float = 1.0) -> LogisticTask:
    if num_users < 1 or dimension < 1 or shard_size < 1:
        raise ParameterDomainError("num_users, dimension, shard_size >= 1")
    if l2_reg <= 0:
        raise ParameterDomainError("l2_reg must be > 0 (strong convexity)")
    direction = rng.standard_normal(dimension)
    direction /= np.linalg.norm(direction)
    labels = rng.integers(0, 2, size=(num_users, shard_size)) * 2 - 1
    noise = rng.standard_normal((num_users, shard_size, dimension))
    features = labels[..., None] * (separation * direction) + noise
    task = LogisticTask(features=features, labels=labels.astype(float),
                        l2_reg=l2_reg,
                        w_star=np.zeros(dimension), f_star=0.0)

    def objective(w):
        x = features.reshape(-1, dimension)
        y = labels.reshape(-1)
        margins = -y * (x @ w)
        value = float(np.mean(np.logaddexp(0.0, margins))) \
            + 0.5 * l2_reg * float(w @ w)
        weights = expit(margins)
        grad = -(y * weights) @ x / x.shape[0] + l2_reg * w
        return value, grad

    result = optimize.minimize(objective, np.zeros(dimension), jac=True,
                               method="L-BFGS-B",
                               options={"gtol": 1e-12, "ftol": 1e-15,
                                        "maxiter": 10_000})
    w_star = result.x
    f_star = objective(w_star)[0]
    return replace(task, w_star=w_star, f_star=f_star)


# ---------------------------------------------------------------------------
# Per-round building blocks
# ---------------------------------------------------------------------------

def clip_gradient(gradient: np.ndarray, lipschitz: float) -> np.ndarray:
    """Rescale to norm at most lipschitz (identity below the threshold)."""
    if lipschitz <= 0:
        raise ParameterDomainError("lipschitz must be > 0")
    g = np.asarray(gradient, dtype=float)
    norm = float(np.linalg.norm(g))
    if norm <= lipschitz:
        return g.copy()
    return g * (lipschitz / norm)


def local_gradient(task: TrainingTask, user: int, w: np.ndarray,
                   batch_indices: Optional[np.ndarray] = None) -> np.ndarray:
    """One user's (mini)batch gradient at w; None means the full shard."""
    return task.user_gradient(user, w, batch_indices)


def perturb_and_scale(clipped: np.ndarray, noise_std: float, alpha: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Transmit signal alpha * (clipped + Gaussian noise).  The noise block
    is drawn even when noise_std is zero so stream consumption does not
    depend on the noise level."""
    if noise_std < 0:
        raise ParameterDomainError("noise_std must be >= 0")
    g = np.asarray(clipped, dtype=float)
    z = rng.standard_normal(g.shape)
    return alpha * (g + noise_std * z)


def estimate_unknown(received: np.ndarray, mean_count: float) -> np.ndarray:
    """Gradient estimate when the server only knows the expected
    participant count: y / mu."""
    if mean_count <= 0:
        raise ParameterDomainError("mean_count must be > 0")
    return np.asarray(received, dtype=float) / mean_count


def estimate_known(received: np.ndarray, count: int,
                   nonempty_prob: float) -> np.ndarray:
    """Gradient estimate when the realized participant set is known:
    y / (zeta * count); an empty round yields the zero vector (the round
    is skipped but still counted)."""
    if not 0.0 < nonempty_prob <= 1.0:
        raise ParameterDomainError("nonempty_prob must be in (0, 1]")
    if count < 0:
        raise ParameterDomainError("count must be >= 0")
    y = np.asarray(received, dtype=float)
    if count == 0:
        return np.zeros_like(y)
    return y / (nonempty_prob * count)


@dataclass(frozen=True)
class ModelState:
    """w after `t` completed rounds; step_size is the one applied last."""

    w: np.ndarray
    t: int = 0
    step_size: float = 0.0


@dataclass(frozen=True)
class RoundOutcome:
    """Everything observable about one round, enough to audit the
    estimator and the effective-noise bookkeeping."""

    participants: np.ndarray         # ascending user indices
    probs: np.ndarray                # (K,) participation probabilities used
    gains: np.ndarray                # (K,) fading gains of the round
    alphas: np.ndarray               # (m,) transmit scales of participants
    received: np.ndarray             # (d,) channel output y
    estimate: np.ndarray             # (d,) gradient estimate
    effective_noise_var: float       # sum h^2 alpha^2 sigma^2 + N0
    skipped: bool                    # True when no estimate was formed


def run_round(task: TrainingTask, model: ModelState, policy: SamplingPolicy,
              channel: ChannelParams, realization: ChannelRealization,
              noise_std, lipschitz: float, step_size: float,
              streams: TrialStreams, estimator: str = "unknown",
              alpha_mode: str = "ideal", power: float = math.inf,
              batch_size: Optional[int] = None,
              ) -> Tuple[RoundOutcome, ModelState, ChannelRealization]:
    """One full round: fade, sample, compute/clip/perturb/scale, superpose,
    estimate, update.  Reference implementation of the kernel protocol."""
    if estimator not in ("unknown", "known"):
        raise ConfigError(f"estimator must be 'unknown' or 'known', "
                          f"got {estimator!r}")
    if alpha_mode not in ("ideal", "empirical"):
        raise ConfigError(f"alpha_mode must be 'ideal' or 'empirical', "
                          f"got {alpha_mode!r}")
    if lipschitz <= 0:
        raise ParameterDomainError("lipschitz must be > 0")
    num_users = task.num_users
    dim = task.dimension
    sigma = np.broadcast_to(np.asarray(noise_std, dtype=float),
                            (num_users,))
    if np.any(sigma < 0):
        raise ParameterDomainError("noise_std must be >= 0")

    realization = advance_realization(realization, channel, streams.fading)
    gains = realization.gains
    probs = resolve_probabilities(policy, num_users, model.t, gains)
    stats = participant_stats(probs)
    participants = sample_participants(probs, streams.participation)
    m = participants.size

    signals = np.empty((m, dim))
    alphas = np.empty(m)
    for slot, user in enumerate(participants):
        if batch_size is None:
            batch = None
        else:
            batch = streams.batch.integers(0, task.shard_size,
                                           size=batch_size)
        grad = local_gradient(task, int(user), model.w, batch)
        grad_sq = float(grad @ grad)
        scale = min(1.0, lipschitz / math.sqrt(grad_sq)) if grad_sq > 0 \
            else 1.0
        clipped = grad * scale
        clipped_sq = grad_sq * scale * scale
        h = float(gains[user])
        if alpha_mode == "ideal":
            alpha = float(inversion_alpha(h))
        else:
            alpha = empirical_alpha(h, power, clipped_sq, dim,
                                    float(sigma[user]) ** 2)
        alphas[slot] = alpha
        signals[slot] = perturb_and_scale(clipped, float(sigma[user]),
                                          alpha, streams.user_noise)
    received = mac_superpose(signals, gains[participants],
                             channel.noise_var, streams.receiver_noise)

    if m:
        ha_sq = (gains[participants] * alphas) ** 2
        eff = float((ha_sq * sigma[participants] ** 2).sum()) \
            + channel.noise_var
    else:
        eff = channel.noise_var

    skipped = False
    if estimator == "unknown":
        if stats.mean_count > 0:
            estimate = estimate_unknown(received, stats.mean_count)
        else:
            estimate = np.zeros(dim)
            skipped = True
    else:
        estimate = estimate_known(received, m, stats.nonempty_prob)
        skipped = m == 0
    new_w = model.w if skipped else model.w - step_size * estimate
    outcome = RoundOutcome(
        participants=participants, probs=probs, gains=gains, alphas=alphas,
        received=received, estimate=estimate, effective_noise_var=eff,
        skipped=skipped)
    new_model = ModelState(w=np.asarray(new_w, dtype=float), t=model.t + 1,
                           step_size=step_size)
    return outcome, new_model, realization


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

TRACE_COLUMNS = ("t", "loss", "gap", "eps_local_max", "eps_central",
                 "eps_central_total", "delta_central_total", "participants",
                 "effective_noise_var")


@dataclass(frozen=True)
class TrainConfig:
    """Everything run_training needs for one configuration.

    step_size None selects the strongly convex schedule 1/(strong_convexity
    * t); a float selects that constant step.  delta_prime None selects the
    adaptive per-round rule (concentration slack derived from the round's
    expected count, padded); a float fixes it.  power None derives the
    budget from channel.snr_db when alpha_mode is 'empirical'.
    """

    task: TrainingTask
    policy: SamplingPolicy
    channel: ChannelParams
    rounds: int
    lipschitz: float
    noise_std: float
    strong_convexity: float
    estimator: str = "unknown"
    alpha_mode: str = "ideal"
    step_size: Optional[float] = None
    batch_size: Optional[int] = None
    power: Optional[float] = None
    delta_local: float = 1e-5
    delta_prime: Optional[float] = None
    delta_tilde: float = 1e-5


@dataclass(frozen=True)
class TrainingTrace:
    """Per-round trace of one trial.  Rounds are 1-based; loss and gap are
    evaluated after the round's update.  The privacy columns are analytic
    (computed from the round's sampling statistics, not from the realized
    draws); *_total columns carry the running composition."""

    round_index: np.ndarray
    loss: np.ndarray
    gap: np.ndarray
    eps_local_max: np.ndarray
    eps_central: np.ndarray
    eps_central_total: np.ndarray
    delta_central_total: np.ndarray
    participants: np.ndarray
    effective_noise_var: np.ndarray
    mean_count: np.ndarray
    max_prob: np.ndarray
    final_w: np.ndarray
    backend: str

    @property
    def final_gap(self) -> float:
        return float(self.gap[-1])

    def columns(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((
            ("t", self.round_index),
            ("loss", self.loss),
            ("gap", self.gap),
            ("eps_local_max", self.eps_local_max),
            ("eps_central", self.eps_central),
            ("eps_central_total", self.eps_central_total),
            ("delta_central_total", self.delta_central_total),
            ("participants", self.participants),
            ("effective_noise_var", self.effective_noise_var),
        ))


def _validate_config(config: TrainConfig) -> None:
    task = config.task
    if not isinstance(task, (QuadraticTask, LogisticTask)):
        raise ConfigError("task must be a QuadraticTask or LogisticTask")
    if config.rounds < 1:
        raise ConfigError("rounds must be >= 1")
    if config.lipschitz <= 0:
        raise ConfigError("lipschitz must be > 0")
    if config.noise_std < 0:
        raise ConfigError("noise_std must be >= 0")
    if config.strong_convexity <= 0:
        raise ConfigError("strong_convexity must be > 0")
    if config.estimator not in ("unknown", "known"):
        raise ConfigError("estimator must be 'unknown' or 'known'")
    if config.alpha_mode not in ("ideal", "empirical"):
        raise ConfigError("alpha_mode must be 'ideal' or 'empirical'")
    if config.step_size is not None and config.step_size <= 0:
        raise ConfigError("step_size must be > 0 when given")
    if config.batch_size is not None and not (
            1 <= config.batch_size <= task.shard_size):
        raise ConfigError("batch_size must be in [1, shard_size]")
    if config.delta_prime is not None and not (
            0.0 < config.delta_prime < 1.0):
        raise ConfigError("delta_prime must be in (0, 1) when given")
    if not 0.0 < config.delta_tilde < 1.0:
        raise ConfigError("delta_tilde must be in (0, 1)")
    if not 0.0 < config.delta_local <= 1.0:
        raise ConfigError("delta_local must be in (0, 1]")
    if config.policy.kind == "schedule" \
            and config.policy.schedule.size < config.rounds:
        raise ConfigError("schedule shorter than the number of rounds")
    if config.policy.kind == "explicit":
        rows, cols = config.policy.matrix.shape
        if rows < config.rounds or cols != task.num_users:
            raise ConfigError("explicit matrix must cover (rounds, users)")
    if config.alpha_mode == "empirical" and config.power is None \
            and config.channel.snr_db is None:
        raise ConfigError(
            "empirical scaling needs channel.snr_db or an explicit power")


def _resolve_power(config: TrainConfig) -> float:
    if config.alpha_mode == "ideal":
        return math.inf if config.power is None else config.power
    if config.power is not None:
        return config.power
    return snr_to_power(config.channel.snr_db, config.task.dimension,
                        config.channel.noise_var)


def _step_sizes(config: TrainConfig) -> np.ndarray:
    t = np.arange(1, config.rounds + 1, dtype=float)
    if config.step_size is None:
        return 1.0 / (config.strong_convexity * t)
    return np.full(config.rounds, float(config.step_size))


def _probs_matrix(config: TrainConfig) -> Optional[np.ndarray]:
    """Materialize per-round probabilities unless they depend on gains."""
    policy = config.policy
    num_users = config.task.num_users
    if policy.kind == "uniform":
        return np.full((config.rounds, num_users), policy.prob)
    if policy.kind == "schedule":
        return np.repeat(policy.schedule[:config.rounds, None], num_users,
                         axis=1)
    if policy.kind == "explicit":
        return np.ascontiguousarray(policy.matrix[:config.rounds])
    return None  # channel_aware: derived from gains inside the loop


def _privacy_columns(config: TrainConfig, mean_count: np.ndarray,
                     max_prob: np.ndarray):
    """Analytic per-round and composed privacy columns from the per-round
    sampling statistics."""
    rounds = mean_count.size
    num_users = config.task.num_users
    eps_local = np.empty(rounds)
    eps_central = np.empty(rounds)
    delta_central = np.empty(rounds)
    if config.noise_std == 0.0:
        # No perturbation mechanism: nothing is protected.
        eps_local.fill(math.inf)
        eps_central.fill(math.inf)
        total_eps = np.full(rounds, math.inf)
        total_delta = np.ones(rounds)
        return eps_local, eps_central, total_eps, total_delta
    params = MechanismParams(
        lipschitz=config.lipschitz, sigma_min=config.noise_std,
        delta_local=config.delta_local,
        channel_noise_var=config.channel.noise_var)
    for t in range(rounds):
        mu = float(mean_count[t])
        pmax = float(max_prob[t])
        if config.delta_prime is not None:
            dp = config.delta_prime
        else:
            dp = adaptive_delta_prime(mu, num_users)
        beta_k = beta_from_delta(dp, num_users) * num_users
        kappa = mu - pmax - beta_k
        eps_local[t] = local_epsilon(params, max(0.0, kappa),
                                     include_channel_noise=True)
        try:
            budget = central_epsilon_from_stats(mu, pmax, num_users, params,
                                                dp)
            eps_central[t] = budget.epsilon
            delta_central[t] = budget.delta
        except InfeasibleConcentrationError:
            eps_central[t] = math.inf
            delta_central[t] = min(
                1.0, dp + pmax * config.delta_local / (1.0 - dp))
    first_order = np.cumsum(eps_central * np.tanh(eps_central / 2.0))
    second_order = np.cumsum(eps_central * eps_central)
    total_eps = first_order + np.sqrt(
        2.0 * math.log(1.0 / config.delta_tilde) * second_order)
    with np.errstate(divide="ignore"):
        log_keep = np.cumsum(np.log1p(-np.minimum(delta_central, 1.0)))
    total_delta = 1.0 - (1.0 - config.delta_tilde) * np.exp(log_keep)
    return eps_local, eps_central, total_eps, np.minimum(1.0, total_delta)


def run_training(config: TrainConfig, master_seed: int, trial: int = 0,
                 backend: Optional[str] = None) -> TrainingTrace:
    """Simulate one trial; deterministic given (config, master_seed, trial).

    backend: None picks the package default kernel for kernel-eligible
    configurations (quadratic task, full batch); 'native'/'numpy' force a
    kernel; 'python' forces the single-round reference loop.  All paths
    follow the same draw protocol, so they agree to floating-point
    reduction order (and exactly in the realized participant sets).
    """
    _validate_config(config)
    if backend not in (None, "native", "numpy", "python"):
        raise ConfigError("backend must be None, 'native', 'numpy', "
                          "or 'python'")
    streams = TrialStreams.from_seed(master_seed, trial)
    power = _resolve_power(config)
    eta = _step_sizes(config)
    kernel_ok = isinstance(config.task, QuadraticTask) \
        and config.batch_size is None
    use_kernel = kernel_ok and backend != "python"
    if backend in ("native", "numpy") and not kernel_ok:
        raise ConfigError(
            f"backend {backend!r} requires a kernel-eligible configuration "
            "(quadratic task, full batch)")

    if use_kernel:
        if backend in ("native", "numpy"):
            kernel = _kernels.get_backend(backend)
            backend_name = backend
        else:
            kernel = _kernels.get_backend(_kernels.BACKEND)
            backend_name = _kernels.BACKEND
        task = config.task
        probs = _probs_matrix(config)
        threshold = config.policy.gain_threshold or 0.0
        scatter0 = stationary_scatter(task.num_users, streams.fading)
        (w, loss, gap, counts, mean_count, max_prob,
         eff_noise) = kernel.train_quadratic(
            task.curvatures, task.shard_means, np.zeros(task.dimension),
            task.w_star, task.f_star, probs, threshold, config.lipschitz,
            config.noise_std, config.channel.noise_var,
            config.channel.rician_factor, config.channel.time_correlation,
            scatter0, power, config.estimator == "known", eta,
            streams.as_tuple())
    else:
        backend_name = "python"
        task = config.task
        model = ModelState(w=np.zeros(task.dimension))
        realization = initial_realization(task.num_users, streams.fading)
        loss = np.empty(config.rounds)
        gap = np.empty(config.rounds)
        counts = np.empty(config.rounds, dtype=np.int64)
        mean_count = np.empty(config.rounds)
        max_prob = np.empty(config.rounds)
        eff_noise = np.empty(config.rounds)
        for t in range(config.rounds):
            outcome, model, realization = run_round(
                task, model, config.policy, config.channel, realization,
                config.noise_std, config.lipschitz, eta[t], streams,
                estimator=config.estimator, alpha_mode=config.alpha_mode,
                power=power, batch_size=config.batch_size)
            counts[t] = outcome.participants.size
            mean_count[t] = outcome.probs.sum()
            max_prob[t] = outcome.probs.max()
            eff_noise[t] = outcome.effective_noise_var
            gap[t] = task.gap(model.w)
            loss[t] = gap[t] + task.f_star
        w = model.w

    eps_local, eps_central, total_eps, total_delta = _privacy_columns(
        config, mean_count, max_prob)
    return TrainingTrace(
        round_index=np.arange(1, config.rounds + 1, dtype=np.int64),
        loss=loss, gap=gap, eps_local_max=eps_local,
        eps_central=eps_central, eps_central_total=total_eps,
        delta_central_total=total_delta, participants=counts,
        mean_count=mean_count, max_prob=max_prob,
        effective_noise_var=eff_noise, final_w=np.asarray(w, dtype=float),
        backend=backend_name)


def estimator_moments_mc(gradients: np.ndarray, probs: np.ndarray,
                         noise_std: float, channel_noise_var: float,
                         rounds: int, master_seed: int, trial: int = 0,
                         backend: Optional[str] = None) -> dict:
    """Monte Carlo moment accumulators for both aggregate estimators.

    Holds the per-user update vectors ``gradients`` (num_users, dim) fixed,
    redraws participation and noise for ``rounds`` independent rounds over an
    inverted unit channel, and accumulates per-coordinate sums / squared sums
    of each estimator plus squared-norm sums and the participant counts.
    Used to check estimator bias and second moments against the closed
    forms; the returned dict matches the kernel accumulator layout.
    """
    gradients = np.ascontiguousarray(gradients, dtype=float)
    probs = np.ascontiguousarray(probs, dtype=float)
    if gradients.ndim != 2:
        raise ParameterDomainError("gradients must be 2-D (num_users, dim)")
    if probs.shape != (gradients.shape[0],):
        raise ParameterDomainError(
            "probs must have one entry per gradient row")
    streams = TrialStreams.from_seed(master_seed, trial)
    kernel = _kernels.get_backend(backend or _kernels.BACKEND)
    return kernel.mc_estimator_rounds(gradients, probs, float(noise_std),
                                      float(channel_noise_var), int(rounds),
                                      streams.as_tuple())
