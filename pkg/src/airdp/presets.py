"""Named, in-repo experiment configurations.

Each preset is a plain JSON-serializable dict of parameters for one or more
experiment kinds; the CLI subcommand (or the ``experiment`` key of a config
file) decides which experiment consumes it.  Presets carry no derived
quantities — everything downstream is recomputed from these primitives, so
a preset echoed into an output header is sufficient to reproduce the run.

``get_preset`` returns a deep copy; mutating it never affects the registry.
"""

import copy
import math

__all__ = ["PRESET_NAMES", "get_preset"]


# Large-population central-privacy sweep: a pure-accounting setting with a
# fixed concentration failure probability, used for the epsilon-vs-K curves
# and for advanced composition over those per-round budgets.
_FIG2 = {
    "master_seed": 20250819,
    "trials": 1,
    "lipschitz": 1.0,
    "sigma_min": 3.0,
    "delta_local": 1e-4,
    "channel_noise_var": 3.0,
    "delta_prime_rule": "fixed",
    "delta_prime": 1e-4,
    "k_grid": [100, 316, 1000, 3162, 10000, 31623, 100000,
               316228, 1000000, 3162278, 10000000],
    "t_grid": [1, 10, 50, 100],
    "delta_slack": 1e-5,
}

# Small-cohort training/bound setting: strongly convex quadratic objective,
# uniform half-probability sampling, unit receiver noise, moderate per-user
# noise, and a slowly varying line-of-sight fading channel.
_FIG3_K20 = {
    "master_seed": 20250819,
    "trials": 5,
    "num_users": 20,
    "dimension": 30,
    "shard_size": 16,
    "rounds": 4000,
    "t_grid": [100, 200, 500, 1000, 2000, 4000],
    "prob": 0.5,
    "lipschitz": 2.0,
    "noise_std": math.sqrt(0.1),
    "channel_noise_var": 1.0,
    "strong_convexity": 0.2,
    "smoothness": 0.9,
    "snr_db": 10.0,
    "alpha_mode": "empirical",
    "rician_factor": 5.0,
    "time_correlation": 0.1,
    "delta_local": 1e-5,
    "delta_prime_rule": "fixed",
    "delta_prime": 1e-5,
    "delta_slack": 1e-5,
    "modes": ["unknown", "known"],
}

# Same setting scaled to a 200-user cohort.
_FIG3_K200 = dict(_FIG3_K20, num_users=200)

# Per-round local-privacy table: 200 users, unit receiver noise, adaptive
# concentration failure probability, channel-aware sampling thresholded at
# gain 2 alongside two uniform probabilities, for two clipping levels.
_TABLE2 = {
    "master_seed": 20250819,
    "trials": 1,
    "num_users": 200,
    "noise_std": math.sqrt(0.1),
    "lipschitz_values": [1.0, 0.1],
    "delta_local": 1e-5,
    "channel_noise_var": 1.0,
    "delta_prime_rule": "adaptive",
    "uniform_probs": [0.9, 0.3],
    "gain_threshold": 2.0,
    "mc_rounds": 2000,
    "rician_factor": 5.0,
    "time_correlation": 0.1,
    "include_channel_noise": True,
}

# Same table with stronger per-user noise and a smaller second clip level.
_TABLE3 = dict(_TABLE2, noise_std=math.sqrt(0.8), lipschitz_values=[1.0, 0.2])

_REGISTRY = {
    "fig2": _FIG2,
    "fig3_k20": _FIG3_K20,
    "fig3_k200": _FIG3_K200,
    "table2": _TABLE2,
    "table3": _TABLE3,
}

PRESET_NAMES = tuple(sorted(_REGISTRY))


def get_preset(name: str) -> dict:
    """Return a deep copy of the named preset's parameter dict."""
    try:
        base = _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
        ) from None
    return copy.deepcopy(base)
