"""Command-line interface.

Usage::

    airdp <subcommand> --config <path> [--seed N] [--out <path>] [--preset NAME]

Subcommands map onto the experiment runners: ``privacy-sweep``,
``compose``, ``local-dp-table``, ``bounds``, ``train``.  Parameters are
assembled preset-first (``--preset``), then overlaid with the JSON config
file (``--config``), then ``--seed``/``--out``.  Output goes to ``--out``
as CSV, or to stdout when no path is given (``train`` prints only its
summary table; per-trial traces are written only with ``--out``).

Exit codes: 0 on success, 2 on configuration errors, 3 when every
requested parameter point was infeasible.  ``AIRDP_THREADS`` caps the
worker pool used for concurrent cells.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from ._version import __version__
from .errors import ConfigError, ExperimentError
from .experiments import TrainOutputs, run_experiment
from .presets import PRESET_NAMES, get_preset

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_INFEASIBLE = 3

_SUBCOMMANDS = (
    ("privacy-sweep", "privacy_sweep",
     "single-round central budgets over a population grid"),
    ("compose", "composition_sweep",
     "multi-round composed budgets over a (population, rounds) grid"),
    ("local-dp-table", "local_dp_table",
     "per-round local budgets across sampling policies and clip levels"),
    ("bounds", "bound_curves",
     "analytic optimality-gap bounds over a horizon grid"),
    ("train", "train",
     "Monte Carlo training trials with per-trace and summary output"),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airdp",
        description="Privacy accounting and training simulation for "
                    "noisy aggregated SGD with randomized participation.")
    parser.add_argument("--version", action="version",
                        version=f"airdp {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, experiment, help_text in _SUBCOMMANDS:
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", type=Path, default=None,
                         help="JSON config file overlaying the preset")
        sub.add_argument("--preset", choices=PRESET_NAMES, default=None,
                         help="named in-repo parameter bundle")
        sub.add_argument("--seed", type=int, default=None,
                         help="override master_seed")
        sub.add_argument("--out", type=Path, default=None,
                         help="output CSV path (stdout when omitted)")
        sub.set_defaults(experiment=experiment)
    return parser


def _load_config(args: argparse.Namespace) -> dict:
    config: dict = {}
    if args.preset is not None:
        config.update(get_preset(args.preset))
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        try:
            overrides = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config file is not valid JSON: {exc}") from exc
        if not isinstance(overrides, dict):
            raise ConfigError("config file must contain a JSON object")
        config.update(overrides)
    if not config:
        raise ConfigError(
            "no configuration given; pass --preset and/or --config")
    if args.seed is not None:
        config["master_seed"] = args.seed
    return config


def _output_path(args: argparse.Namespace, config: dict) -> Optional[Path]:
    if args.out is not None:
        return args.out
    raw = config.get("output_path")
    if raw is None:
        return None
    if not isinstance(raw, str) or not raw:
        raise ConfigError("config key 'output_path': must be a nonempty "
                          "string when present")
    return Path(raw)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        out = _output_path(args, config)
        result = run_experiment(args.experiment, config)
    except ConfigError as exc:
        print(f"airdp: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except ExperimentError as exc:
        print(f"airdp: {exc}", file=sys.stderr)
        return 1

    if isinstance(result, TrainOutputs):
        if out is not None:
            result.write(out)
        else:
            sys.stdout.write(result.summary.render())
        return EXIT_OK
    if out is not None:
        result.write(out)
    else:
        sys.stdout.write(result.render())
    if result.feasible == 0 and result.infeasible > 0:
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
