"""Privacy accounting and simulation for noisy over-the-air federated SGD.

The package models a round-based learning system in which randomly
participating users add Gaussian noise to clipped gradients and transmit
them simultaneously over a fading additive-noise channel, so the receiver
only ever sees the superposition.  It provides:

- closed-form per-round and multi-round privacy budgets (local and
  central) that account for the anonymity and masking provided by the
  aggregated channel and by randomized participation (:mod:`.accountant`);
- participant-count distributions and statistics for independent
  per-user sampling (:mod:`.sampling`);
- the fading-channel and power-control model (:mod:`.channel`);
- analytic optimality-gap bounds for strongly convex objectives
  (:mod:`.bounds`);
- a reproducible round-level training simulator with a compiled core and
  a pure-NumPy fallback (:mod:`.simulate`, :mod:`._kernels`);
- experiment runners and a CLI that emit provenance-stamped CSV artifacts
  (:mod:`.experiments`, :mod:`.cli`, :mod:`.presets`).
"""

from ._version import __version__
from .errors import (
    BudgetOverflowWarning,
    ConcentrationShortfallWarning,
    ConfigError,
    EnumerationSizeError,
    ExperimentError,
    InfeasibleConcentrationError,
    ParameterDomainError,
)
from .accountant import (
    COMPARATOR_VARIANTS,
    ConcentrationParams,
    MechanismParams,
    PrivacyBudget,
    adaptive_delta_prime,
    beta_from_delta,
    central_epsilon_from_stats,
    central_epsilon_nonuniform,
    central_epsilon_uniform,
    co_sampling_margin,
    comparator_epsilon,
    compose_heterogeneous,
    compose_heterogeneous_upper,
    compose_homogeneous,
    gaussian_mechanism_epsilon,
    hoeffding_delta,
    local_delta,
    local_epsilon,
    optimal_sampling_probability,
    sensitivity_bound,
)
from .sampling import (
    ParticipantStats,
    SamplingPolicy,
    count_distribution_exact,
    inverse_moments_exact,
    participant_stats,
    resolve_probabilities,
    sample_participants,
)
from .channel import (
    ChannelParams,
    ChannelRealization,
    advance_realization,
    empirical_alpha,
    fading_step,
    initial_realization,
    inversion_alpha,
    mac_superpose,
    snr_to_power,
    stationary_scatter,
)
from .bounds import (
    ConvergenceParams,
    OptimalPBound,
    bound_known,
    bound_known_uniform,
    bound_optimal_p,
    bound_unknown,
    inverse_moments_taylor,
    second_moment_bound,
)
from .simulate import (
    TRACE_COLUMNS,
    LogisticTask,
    ModelState,
    QuadraticTask,
    RoundOutcome,
    TrainConfig,
    TrainingTrace,
    TrialStreams,
    clip_gradient,
    estimate_known,
    estimate_unknown,
    estimator_moments_mc,
    local_gradient,
    make_logistic_task,
    make_quadratic_task,
    perturb_and_scale,
    run_round,
    run_training,
)
from .experiments import (
    EXPERIMENT_NAMES,
    ExperimentResult,
    TrainOutputs,
    run_bound_curves,
    run_composition_sweep,
    run_experiment,
    run_local_dp_table,
    run_privacy_sweep,
    run_train,
)
from .presets import PRESET_NAMES, get_preset
from . import _kernels

__all__ = [
    "__version__",
    # errors and warnings
    "BudgetOverflowWarning",
    "ConcentrationShortfallWarning",
    "ConfigError",
    "EnumerationSizeError",
    "ExperimentError",
    "InfeasibleConcentrationError",
    "ParameterDomainError",
    # accountant
    "COMPARATOR_VARIANTS",
    "ConcentrationParams",
    "MechanismParams",
    "PrivacyBudget",
    "adaptive_delta_prime",
    "beta_from_delta",
    "central_epsilon_from_stats",
    "central_epsilon_nonuniform",
    "central_epsilon_uniform",
    "co_sampling_margin",
    "comparator_epsilon",
    "compose_heterogeneous",
    "compose_heterogeneous_upper",
    "compose_homogeneous",
    "gaussian_mechanism_epsilon",
    "hoeffding_delta",
    "local_delta",
    "local_epsilon",
    "optimal_sampling_probability",
    "sensitivity_bound",
    # sampling
    "ParticipantStats",
    "SamplingPolicy",
    "count_distribution_exact",
    "inverse_moments_exact",
    "participant_stats",
    "resolve_probabilities",
    "sample_participants",
    # channel
    "ChannelParams",
    "ChannelRealization",
    "advance_realization",
    "empirical_alpha",
    "fading_step",
    "initial_realization",
    "inversion_alpha",
    "mac_superpose",
    "snr_to_power",
    "stationary_scatter",
    # bounds
    "ConvergenceParams",
    "OptimalPBound",
    "bound_known",
    "bound_known_uniform",
    "bound_optimal_p",
    "bound_unknown",
    "inverse_moments_taylor",
    "second_moment_bound",
    # simulation
    "TRACE_COLUMNS",
    "LogisticTask",
    "ModelState",
    "QuadraticTask",
    "RoundOutcome",
    "TrainConfig",
    "TrainingTrace",
    "TrialStreams",
    "clip_gradient",
    "estimate_known",
    "estimate_unknown",
    "estimator_moments_mc",
    "local_gradient",
    "make_logistic_task",
    "make_quadratic_task",
    "perturb_and_scale",
    "run_round",
    "run_training",
    # experiments / presets
    "EXPERIMENT_NAMES",
    "ExperimentResult",
    "TrainOutputs",
    "run_bound_curves",
    "run_composition_sweep",
    "run_experiment",
    "run_local_dp_table",
    "run_privacy_sweep",
    "run_train",
    "PRESET_NAMES",
    "get_preset",
]
