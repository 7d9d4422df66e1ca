"""Experiment orchestration and CSV artifact emission.

Every runner takes a plain JSON-style config dict, validates it against the
experiment's schema before any computation, and returns an
:class:`ExperimentResult` whose rendered CSV embeds the fully resolved
config and the tool version.  Re-running an output's embedded config with
the same backend reproduces the file byte for byte: cells are computed
concurrently (``AIRDP_THREADS`` caps the pool) but assembled in a
deterministic grid order, and floats are printed with 17 significant
digits.  Parameter points where the concentration window is empty are
emitted with an ``infeasible`` status marker rather than dropped.
"""

import concurrent.futures
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats as _scipy_stats

from . import _kernels
from ._version import __version__
from .accountant import (
    MechanismParams,
    adaptive_delta_prime,
    central_epsilon_uniform,
    co_sampling_margin,
    comparator_epsilon,
    compose_homogeneous,
    local_epsilon,
    optimal_sampling_probability,
)
from .bounds import ConvergenceParams, bound_known, bound_unknown
from .channel import ChannelParams, stationary_scatter
from .errors import ConfigError, ExperimentError, InfeasibleConcentrationError
from .sampling import SamplingPolicy, participant_stats
from .simulate import (
    TrainConfig,
    TrialStreams,
    make_quadratic_task,
    run_training,
)

__all__ = [
    "EXPERIMENT_NAMES",
    "ExperimentResult",
    "TrainOutputs",
    "max_threads",
    "run_bound_curves",
    "run_composition_sweep",
    "run_experiment",
    "run_local_dp_table",
    "run_privacy_sweep",
    "run_train",
]

EXPERIMENT_NAMES = (
    "privacy_sweep",
    "composition_sweep",
    "local_dp_table",
    "bound_curves",
    "train",
)

# Entropy tag mixed into the seed sequence that builds the synthetic task,
# so task construction never collides with the per-trial draw streams.
_TASK_TAG = 0x7461736B


def max_threads() -> int:
    """Worker cap for concurrent cells: AIRDP_THREADS, else CPU count."""
    raw = os.environ.get("AIRDP_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(
                f"AIRDP_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ConfigError("AIRDP_THREADS must be >= 1")
        return n
    return min(32, os.cpu_count() or 1)


def _parallel_map(fn: Callable, items: Sequence) -> list:
    """Map preserving input order; pool size from :func:`max_threads`."""
    workers = min(max_threads(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Result container and CSV rendering
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    """One CSV cell: strings pass through, ints exact, floats 17 sig digits."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


@dataclass
class ExperimentResult:
    """One experiment artifact: a column table plus provenance comments.

    ``config`` is the fully resolved parameter dict (defaults filled in,
    grids normalized); it is echoed verbatim into the rendered CSV header
    as canonical JSON.  ``header_extras`` and ``footer`` are emitted as
    ``# ``-prefixed comment lines before and after the table.
    """

    experiment: str
    config: dict
    columns: Tuple[str, ...]
    rows: List[tuple]
    header_extras: List[str] = field(default_factory=list)
    footer: List[str] = field(default_factory=list)
    feasible: int = 0
    infeasible: int = 0
    cell: Optional[dict] = None

    def render(self) -> str:
        lines = [f"# airdp {__version__} {self.experiment}"]
        lines.append("# config " + json.dumps(
            self.config, sort_keys=True, separators=(",", ":")))
        for extra in self.header_extras:
            lines.append("# " + extra)
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(_fmt(v) for v in row))
        for note in self.footer:
            lines.append("# " + note)
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(self.render())


@dataclass
class TrainOutputs:
    """Training artifacts: per-(mode, trial) traces plus one summary table."""

    summary: ExperimentResult
    traces: List[ExperimentResult]

    def write(self, path) -> None:
        """Write the summary to ``path`` and traces alongside it.

        A trace for mode m, trial i lands at ``<stem>_<m>_trial<i:04>.csv``
        next to the summary file.
        """
        base = Path(path)
        self.summary.write(base)
        suffix = base.suffix or ".csv"
        for trace in self.traces:
            name = (f"{base.stem}_{trace.cell['mode']}"
                    f"_trial{trace.cell['trial']:04d}{suffix}")
            trace.write(base.with_name(name))


# ---------------------------------------------------------------------------
# Config schema validation
# ---------------------------------------------------------------------------

_REQUIRED = object()


def _bad(key, message):
    raise ConfigError(f"config key {key!r}: {message}")


def _v_int(lo):
    def check(key, value):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            _bad(key, "must be an integer")
        value = int(value)
        if value < lo:
            _bad(key, f"must be >= {lo}")
        return value
    return check


def _v_real(lo=None, hi=None, lo_open=False, hi_open=False):
    def check(key, value):
        if isinstance(value, bool) or not isinstance(
                value, (int, float, np.integer, np.floating)):
            _bad(key, "must be a number")
        value = float(value)
        if not math.isfinite(value):
            _bad(key, "must be finite")
        if lo is not None and (value <= lo if lo_open else value < lo):
            _bad(key, f"must be {'>' if lo_open else '>='} {lo}")
        if hi is not None and (value >= hi if hi_open else value > hi):
            _bad(key, f"must be {'<' if hi_open else '<='} {hi}")
        return value
    return check


def _v_int_grid(key, value):
    if not isinstance(value, (list, tuple)) or not value:
        _bad(key, "must be a nonempty list of integers")
    out = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, (int, np.integer)):
            _bad(key, "must contain only integers")
        if item < 1:
            _bad(key, "entries must be >= 1")
        out.append(int(item))
    return sorted(set(out))


def _v_real_list(element_check):
    def check(key, value):
        if not isinstance(value, (list, tuple)) or not value:
            _bad(key, "must be a nonempty list of numbers")
        return [element_check(key, item) for item in value]
    return check


def _v_choice(options):
    def check(key, value):
        if value not in options:
            _bad(key, f"must be one of {options}")
        return value
    return check


def _v_bool(key, value):
    if not isinstance(value, bool):
        _bad(key, "must be true or false")
    return value


def _v_optional(inner):
    def check(key, value):
        if value is None:
            return None
        return inner(key, value)
    return check


def _v_modes(key, value):
    if not isinstance(value, (list, tuple)) or not value:
        _bad(key, "must be a nonempty list of estimator modes")
    seen = []
    for item in value:
        if item not in ("unknown", "known"):
            _bad(key, "entries must be 'unknown' or 'known'")
        if item in seen:
            _bad(key, "entries must be distinct")
        seen.append(item)
    return list(seen)


_SEED = _v_int(0)
_POS_INT = _v_int(1)
_POS = _v_real(lo=0.0, lo_open=True)
_NONNEG = _v_real(lo=0.0)
_PROB = _v_real(lo=0.0, hi=1.0)
_OPEN_UNIT = _v_real(lo=0.0, hi=1.0, lo_open=True, hi_open=True)

_MECHANISM_KEYS = {
    "lipschitz": (_NONNEG, _REQUIRED),
    "sigma_min": (_POS, _REQUIRED),
    "delta_local": (_v_real(lo=0.0, hi=1.0, lo_open=True), _REQUIRED),
    "channel_noise_var": (_NONNEG, _REQUIRED),
}

_SCHEMAS: Dict[str, dict] = {
    "privacy_sweep": {
        "master_seed": (_SEED, _REQUIRED),
        "k_grid": (_v_int_grid, _REQUIRED),
        "delta_prime_rule": (_v_choice(("fixed",)), "fixed"),
        "delta_prime": (_OPEN_UNIT, _REQUIRED),
        **_MECHANISM_KEYS,
    },
    "composition_sweep": {
        "master_seed": (_SEED, _REQUIRED),
        "k_grid": (_v_int_grid, _REQUIRED),
        "t_grid": (_v_int_grid, _REQUIRED),
        "delta_prime_rule": (_v_choice(("fixed",)), "fixed"),
        "delta_prime": (_OPEN_UNIT, _REQUIRED),
        "delta_slack": (_OPEN_UNIT, 1e-5),
        **_MECHANISM_KEYS,
    },
    "local_dp_table": {
        "master_seed": (_SEED, _REQUIRED),
        "num_users": (_POS_INT, _REQUIRED),
        "noise_std": (_POS, _REQUIRED),
        "lipschitz_values": (_v_real_list(_NONNEG), _REQUIRED),
        "delta_local": (_v_real(lo=0.0, hi=1.0, lo_open=True), _REQUIRED),
        "channel_noise_var": (_NONNEG, _REQUIRED),
        "delta_prime_rule": (_v_choice(("fixed", "adaptive")), "adaptive"),
        "delta_prime": (_v_optional(_OPEN_UNIT), None),
        "uniform_probs": (_v_real_list(_PROB), _REQUIRED),
        "gain_threshold": (_POS, _REQUIRED),
        "mc_rounds": (_POS_INT, 2000),
        "rician_factor": (_NONNEG, _REQUIRED),
        "time_correlation": (_v_real(lo=0.0, hi=1.0, hi_open=True), _REQUIRED),
        "include_channel_noise": (_v_bool, True),
    },
    "bound_curves": {
        "master_seed": (_SEED, _REQUIRED),
        "num_users": (_POS_INT, _REQUIRED),
        "prob": (_v_real(lo=0.0, hi=1.0, lo_open=True), _REQUIRED),
        "t_grid": (_v_int_grid, _REQUIRED),
        "lipschitz": (_NONNEG, _REQUIRED),
        "dimension": (_POS_INT, _REQUIRED),
        "strong_convexity": (_POS, _REQUIRED),
        "smoothness": (_POS, _REQUIRED),
        "noise_std": (_NONNEG, _REQUIRED),
        "channel_noise_var": (_NONNEG, _REQUIRED),
    },
    "train": {
        "master_seed": (_SEED, _REQUIRED),
        "trials": (_POS_INT, 1),
        "num_users": (_POS_INT, _REQUIRED),
        "dimension": (_POS_INT, _REQUIRED),
        "shard_size": (_POS_INT, _REQUIRED),
        "rounds": (_POS_INT, _REQUIRED),
        "prob": (_v_real(lo=0.0, hi=1.0, lo_open=True), _REQUIRED),
        "lipschitz": (_POS, _REQUIRED),
        "noise_std": (_NONNEG, _REQUIRED),
        "channel_noise_var": (_NONNEG, _REQUIRED),
        "strong_convexity": (_POS, _REQUIRED),
        "smoothness": (_POS, _REQUIRED),
        "snr_db": (_v_optional(_v_real()), None),
        "power": (_v_optional(_POS), None),
        "alpha_mode": (_v_choice(("ideal", "empirical")), "ideal"),
        "step_size": (_v_optional(_POS), None),
        "modes": (_v_modes, ["unknown", "known"]),
        "rician_factor": (_NONNEG, _REQUIRED),
        "time_correlation": (_v_real(lo=0.0, hi=1.0, hi_open=True), _REQUIRED),
        "delta_local": (_v_real(lo=0.0, hi=1.0, lo_open=True), 1e-5),
        "delta_prime_rule": (_v_choice(("fixed", "adaptive")), "adaptive"),
        "delta_prime": (_v_optional(_OPEN_UNIT), None),
        "delta_slack": (_OPEN_UNIT, 1e-5),
        "backend": (_v_optional(_v_choice(("native", "numpy", "python"))),
                    None),
    },
}

# Keys any experiment understands; presets bundle parameters for several
# experiments, so keys outside the chosen schema are tolerated as long as
# some experiment consumes them (plus the plumbing keys below).
_ALL_KEYS = {"experiment", "output_path", "trials"}
for _schema in _SCHEMAS.values():
    _ALL_KEYS.update(_schema)


def _resolve(config: dict, experiment: str) -> dict:
    """Validate ``config`` for ``experiment`` and fill defaults.

    Returns only the keys the experiment consumes (plus ``experiment``),
    so the echoed config is minimal and re-runnable.
    """
    if experiment not in _SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}; "
                          f"expected one of {EXPERIMENT_NAMES}")
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    declared = config.get("experiment")
    if declared is not None and declared != experiment:
        raise ConfigError(
            f"config declares experiment {declared!r} but {experiment!r} "
            "was requested")
    unknown = set(config) - _ALL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    resolved = {"experiment": experiment}
    for key, (check, default) in _SCHEMAS[experiment].items():
        if key in config:
            resolved[key] = check(key, config[key])
        elif default is _REQUIRED:
            raise ConfigError(f"missing required config key {key!r}")
        else:
            resolved[key] = json.loads(json.dumps(default))
    if resolved.get("delta_prime_rule") == "fixed" \
            and resolved.get("delta_prime") is None:
        raise ConfigError(
            "delta_prime is required when delta_prime_rule is 'fixed'")
    if experiment == "train":
        if resolved["smoothness"] < resolved["strong_convexity"]:
            raise ConfigError("smoothness must be >= strong_convexity")
        if resolved["alpha_mode"] == "empirical" \
                and resolved["snr_db"] is None and resolved["power"] is None:
            raise ConfigError(
                "empirical power control needs snr_db or power")
    return resolved


def _mechanism_from(cfg: dict) -> MechanismParams:
    return MechanismParams(
        lipschitz=cfg["lipschitz"], sigma_min=cfg["sigma_min"],
        delta_local=cfg["delta_local"],
        channel_noise_var=cfg["channel_noise_var"])


def _delta_prime_for(cfg: dict, expected_count: float,
                     num_users: int) -> float:
    if cfg["delta_prime_rule"] == "fixed":
        return cfg["delta_prime"]
    return adaptive_delta_prime(expected_count, num_users)


def _loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    return float(np.polyfit(np.log(np.asarray(xs, dtype=float)),
                            np.log(np.asarray(ys, dtype=float)), 1)[0])


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------

def run_privacy_sweep(config: dict) -> ExperimentResult:
    """Central budgets vs population size for four aggregation variants.

    One row per population size K: the aggregated channel with optimal-rate
    sampling, the same channel with everyone transmitting, per-user
    (orthogonal) release with the same sampling, and per-user release
    without sampling.  Rows whose concentration window is empty are marked
    ``infeasible``.  The footer reports fitted log-log slopes over the
    feasible rows.
    """
    cfg = _resolve(config, "privacy_sweep")
    params = _mechanism_from(cfg)
    dp = cfg["delta_prime"]

    def cell(num_users: int) -> tuple:
        p_star = optimal_sampling_probability(num_users, dp)
        eps_wireless = comparator_epsilon(
            "wireless_no_sampling", num_users, params, dp)
        eps_orth_sampling = comparator_epsilon(
            "orthogonal_with_sampling", num_users, params, dp)
        eps_orth = comparator_epsilon(
            "orthogonal_no_sampling", num_users, params, dp)
        try:
            eps_ws = central_epsilon_uniform(
                p_star, num_users, params, dp).epsilon
            status = "ok"
        except InfeasibleConcentrationError:
            eps_ws = math.nan
            status = "infeasible"
        return (num_users, eps_ws, eps_wireless, eps_orth_sampling,
                eps_orth, status)

    rows = _parallel_map(cell, cfg["k_grid"])
    feasible = sum(1 for row in rows if row[-1] == "ok")
    footer = []
    for column, index in (("eps_wireless_sampling", 1), ("eps_wireless", 2)):
        pts = [(row[0], row[index]) for row in rows
               if math.isfinite(row[index]) and row[index] > 0.0]
        if len(pts) >= 2:
            slope = _loglog_slope([k for k, _ in pts], [e for _, e in pts])
            footer.append(f"slope {column} {slope:.17g}")
    return ExperimentResult(
        "privacy_sweep", cfg,
        columns=("K", "eps_wireless_sampling", "eps_wireless",
                 "eps_orth_sampling", "eps_orth", "status"),
        rows=rows, footer=footer,
        feasible=feasible, infeasible=len(rows) - feasible)


def run_composition_sweep(config: dict) -> ExperimentResult:
    """Multi-round budgets over a (population, rounds) grid.

    Each cell takes the single-round budget at the optimal sampling
    probability for that population and composes it over T identical
    rounds with the advanced accountant.
    """
    cfg = _resolve(config, "composition_sweep")
    params = _mechanism_from(cfg)
    dp = cfg["delta_prime"]
    slack = cfg["delta_slack"]
    cells = [(k, t) for k in cfg["k_grid"] for t in cfg["t_grid"]]

    def cell(key: Tuple[int, int]) -> tuple:
        num_users, rounds = key
        p_star = optimal_sampling_probability(num_users, dp)
        try:
            per_round = central_epsilon_uniform(p_star, num_users, params, dp)
        except InfeasibleConcentrationError:
            return (num_users, rounds, math.nan, math.nan, "infeasible")
        total = compose_homogeneous(
            per_round.epsilon, per_round.delta, rounds, slack)
        return (num_users, rounds, total.epsilon, total.delta, "ok")

    rows = _parallel_map(cell, cells)
    feasible = sum(1 for row in rows if row[-1] == "ok")
    return ExperimentResult(
        "composition_sweep", cfg,
        columns=("K", "T", "eps_total", "delta_total", "status"),
        rows=rows, feasible=feasible, infeasible=len(rows) - feasible)


def run_local_dp_table(config: dict) -> ExperimentResult:
    """Per-round local budgets across sampling policies and clip levels.

    The gain-thresholded policy's effective participation probability is
    estimated by Monte Carlo over the fading model (mean of min(1, h/h_th)
    across users and rounds); uniform policies use their configured
    probability directly.  Each policy row group is evaluated at every
    clip level with the receiver noise optionally included in the masking
    variance.
    """
    cfg = _resolve(config, "local_dp_table")
    num_users = cfg["num_users"]
    streams = TrialStreams.from_seed(cfg["master_seed"], 0)
    scatter = stationary_scatter(num_users, streams.fading)
    gains, _ = _kernels.fading_chain(
        scatter, cfg["rician_factor"], cfg["time_correlation"],
        cfg["mc_rounds"], streams.fading)
    mean_prob = float(np.minimum(1.0, gains / cfg["gain_threshold"]).mean())
    policies = [("channel_aware", mean_prob)]
    policies += [("uniform", p) for p in cfg["uniform_probs"]]

    rows = []
    for label, prob in policies:
        expected = num_users * prob
        dp = _delta_prime_for(cfg, expected, num_users)
        kappa = co_sampling_margin(np.full(num_users, prob), 0, dp)
        for lipschitz in cfg["lipschitz_values"]:
            params = MechanismParams(
                lipschitz=lipschitz, sigma_min=cfg["noise_std"],
                delta_local=cfg["delta_local"],
                channel_noise_var=cfg["channel_noise_var"])
            eps = local_epsilon(
                params, kappa,
                include_channel_noise=cfg["include_channel_noise"])
            rows.append((label, prob, lipschitz, dp, kappa, eps))
    return ExperimentResult(
        "local_dp_table", cfg,
        columns=("policy", "prob", "lipschitz", "delta_prime", "kappa",
                 "eps_local"),
        rows=rows, feasible=len(rows), infeasible=0)


def run_bound_curves(config: dict) -> ExperimentResult:
    """Analytic optimality-gap bounds over a horizon grid.

    Emits, per horizon T, the count-statistics bound, the known-count
    bound with series-approximated inverse moments, the same bound with
    exact inverse moments, and the relative gap between the approximated
    known-count bound and the count-statistics bound.
    """
    cfg = _resolve(config, "bound_curves")
    probs = np.full(cfg["num_users"], cfg["prob"])
    stats = participant_stats(probs)
    noise_var_max = cfg["noise_std"] ** 2

    def cell(rounds: int) -> tuple:
        params = ConvergenceParams(
            strong_convexity=cfg["strong_convexity"],
            smoothness=cfg["smoothness"], lipschitz=cfg["lipschitz"],
            dimension=cfg["dimension"], noise_var_max=noise_var_max,
            channel_noise_var=cfg["channel_noise_var"], rounds=rounds,
            stats=stats, probs=probs)
        unknown = bound_unknown(params)
        known_taylor = bound_known(params, moments="taylor")
        known_exact = bound_known(params, moments="exact")
        rel_gap = abs(known_taylor - unknown) / unknown
        return (rounds, unknown, known_taylor, known_exact, rel_gap)

    rows = _parallel_map(cell, cfg["t_grid"])
    return ExperimentResult(
        "bound_curves", cfg,
        columns=("T", "bound_unknown", "bound_known_taylor",
                 "bound_known_exact", "relative_gap"),
        rows=rows, feasible=len(rows), infeasible=0)


def run_train(config: dict) -> TrainOutputs:
    """Monte Carlo training runs plus a per-mode final-gap summary.

    Builds one synthetic quadratic task from the master seed, then runs
    ``trials`` independent trials for each estimator mode; trials share
    draw streams across modes, so mode comparisons are paired.  Returns
    the per-(mode, trial) traces and a summary table with the mean final
    optimality gap and its 95% confidence half-width per mode.
    """
    cfg = _resolve(config, "train")
    task_rng = np.random.default_rng(
        np.random.SeedSequence([cfg["master_seed"], _TASK_TAG]))
    task = make_quadratic_task(
        num_users=cfg["num_users"], dimension=cfg["dimension"],
        shard_size=cfg["shard_size"],
        strong_convexity=cfg["strong_convexity"],
        smoothness=cfg["smoothness"], rng=task_rng)
    policy = SamplingPolicy.uniform(cfg["prob"])
    channel = ChannelParams(
        rician_factor=cfg["rician_factor"],
        time_correlation=cfg["time_correlation"],
        noise_var=cfg["channel_noise_var"], snr_db=cfg["snr_db"])
    delta_prime = cfg["delta_prime"] \
        if cfg["delta_prime_rule"] == "fixed" else None

    def train_config(mode: str) -> TrainConfig:
        return TrainConfig(
            task=task, policy=policy, channel=channel,
            rounds=cfg["rounds"], lipschitz=cfg["lipschitz"],
            noise_std=cfg["noise_std"],
            strong_convexity=cfg["strong_convexity"], estimator=mode,
            alpha_mode=cfg["alpha_mode"], step_size=cfg["step_size"],
            power=cfg["power"], delta_local=cfg["delta_local"],
            delta_prime=delta_prime, delta_tilde=cfg["delta_slack"])

    cells = [(mode, trial)
             for mode in cfg["modes"] for trial in range(cfg["trials"])]

    def cell(key: Tuple[str, int]):
        mode, trial = key
        try:
            return run_training(train_config(mode), cfg["master_seed"],
                                trial, backend=cfg["backend"])
        except ConfigError:
            raise
        except Exception as exc:
            raise ExperimentError(
                f"training failed at trial {trial}, mode {mode!r}: "
                f"{exc}") from exc

    results = _parallel_map(cell, cells)

    traces = []
    for (mode, trial), trace in zip(cells, results):
        table = trace.columns()
        rows = list(zip(*table.values()))
        traces.append(ExperimentResult(
            "train_trace", cfg, columns=tuple(table.keys()), rows=rows,
            header_extras=[f"cell mode={mode} trial={trial}",
                           f"backend {trace.backend}"],
            feasible=len(rows), infeasible=0,
            cell={"mode": mode, "trial": trial}))

    summary_rows = []
    backend_name = results[0].backend if results else "-"
    by_mode = {mode: [] for mode in cfg["modes"]}
    for (mode, _trial), trace in zip(cells, results):
        by_mode[mode].append(trace)
    for mode in cfg["modes"]:
        gaps = np.array([trace.gap[-1] for trace in by_mode[mode]])
        losses = np.array([trace.loss[-1] for trace in by_mode[mode]])
        n = gaps.size
        if n >= 2:
            half = float(_scipy_stats.t.ppf(0.975, n - 1)
                         * gaps.std(ddof=1) / math.sqrt(n))
        else:
            half = math.nan
        summary_rows.append((mode, n, cfg["rounds"], float(gaps.mean()),
                             half, float(losses.mean())))
    summary = ExperimentResult(
        "train", cfg,
        columns=("mode", "trials", "rounds", "mean_final_gap",
                 "ci95_half_width", "mean_final_loss"),
        rows=summary_rows, header_extras=[f"backend {backend_name}"],
        feasible=len(summary_rows), infeasible=0)
    return TrainOutputs(summary=summary, traces=traces)


_RUNNERS = {
    "privacy_sweep": run_privacy_sweep,
    "composition_sweep": run_composition_sweep,
    "local_dp_table": run_local_dp_table,
    "bound_curves": run_bound_curves,
    "train": run_train,
}


def run_experiment(experiment: str, config: dict
                   ) -> Union[ExperimentResult, TrainOutputs]:
    """Dispatch to the named experiment's runner."""
    if experiment not in _RUNNERS:
        raise ConfigError(f"unknown experiment {experiment!r}; "
                          f"expected one of {EXPERIMENT_NAMES}")
    return _RUNNERS[experiment](config)
