"""Shared fixtures and helpers for the airdp test suite."""

import math

import numpy as np
import pytest

from airdp import (
    ChannelParams,
    MechanismParams,
    SamplingPolicy,
    TrainConfig,
    make_quadratic_task,
)

# Mechanism used throughout the single-round privacy sweeps: unit gradient
# bound, per-user noise std 3, local failure probability 1e-4, receiver
# noise variance 3.
SWEEP_MECHANISM = MechanismParams(
    lipschitz=1.0, sigma_min=3.0, delta_local=1e-4, channel_noise_var=3.0)

# Mechanism used by the local-budget tables: gradient bound 1 against noise
# variance 0.1 (std sqrt(0.1)), local delta 1e-5, receiver noise variance 1.
TABLE_MECHANISM = MechanismParams(
    lipschitz=1.0, sigma_min=math.sqrt(0.1), delta_local=1e-5,
    channel_noise_var=1.0)


def make_train_config(num_users=20, dimension=30, shard_size=16,
                      strong_convexity=0.2, smoothness=0.9, prob=0.5,
                      rounds=50, lipschitz=2.0, noise_std=math.sqrt(0.1),
                      channel_noise_var=1.0, rician_factor=5.0,
                      time_correlation=0.1, estimator="unknown",
                      alpha_mode="ideal", seed=123, **kwargs):
    """A small training configuration mirroring the 20-user benchmark."""
    rng = np.random.default_rng(seed)
    task = make_quadratic_task(num_users, dimension, shard_size,
                               strong_convexity, smoothness, rng)
    policy = SamplingPolicy.uniform(prob)
    channel = ChannelParams(rician_factor=rician_factor,
                            time_correlation=time_correlation,
                            noise_var=channel_noise_var, snr_db=10.0)
    return TrainConfig(task=task, policy=policy, channel=channel,
                       rounds=rounds, lipschitz=lipschitz,
                       noise_std=noise_std,
                       strong_convexity=strong_convexity,
                       estimator=estimator, alpha_mode=alpha_mode,
                       delta_local=1e-5, **kwargs)


@pytest.fixture
def tmp_csv(tmp_path):
    return tmp_path / "out.csv"
