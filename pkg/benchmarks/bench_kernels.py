"""Timing comparison of the compiled kernels against the NumPy fallback.

Runs the three kernel entry points (fading chain, estimator Monte Carlo,
quadratic training loop) on identical inputs under each available backend
and prints a table with per-call times and speedups.  The training row
also includes the single-round Python reference loop for scale.

Usage::

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import math
import time

import numpy as np

from airdp import ChannelParams, run_training, stationary_scatter
from airdp import _kernels
from airdp.simulate import TrialStreams

try:  # reuse the suite's canonical 20-user training configuration
    import os
    import sys
    sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..",
                                    "tests"))
    from conftest import make_train_config
except ImportError:  # pragma: no cover - benchmarks are run from a checkout
    raise SystemExit("run from a source checkout (needs tests/conftest.py)")


def best_of(repeats, fn):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_fading(kernel, repeats):
    scatter = stationary_scatter(200, np.random.default_rng(2))
    return best_of(repeats, lambda: kernel.fading_chain(
        scatter, 5.0, 0.1, 20_000, np.random.default_rng(3)))


def bench_mc(kernel, repeats):
    rng = np.random.default_rng(4)
    gradients = rng.normal(size=(20, 30))
    probs = np.full(20, 0.5)
    streams = TrialStreams.from_seed(99, 0)
    return best_of(repeats, lambda: kernel.mc_estimator_rounds(
        gradients, probs, math.sqrt(0.1), 1.0, 20_000, streams.as_tuple()))


def bench_train(backend, repeats):
    config = make_train_config(rounds=2000, seed=7)
    return best_of(repeats, lambda: run_training(config, master_seed=7,
                                                 backend=backend))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3,
                        help="best-of-N timing repeats (default 3)")
    args = parser.parse_args()

    backends = _kernels.available_backends()
    print(f"available kernel backends: {', '.join(backends)}")
    print(f"package default: {_kernels.BACKEND}\n")

    rows = []
    for name in backends:
        kernel = _kernels.get_backend(name)
        rows.append((f"fading_chain 200x20000 [{name}]",
                     bench_fading(kernel, args.repeats)))
    for name in backends:
        kernel = _kernels.get_backend(name)
        rows.append((f"mc_estimator_rounds 20x30x20000 [{name}]",
                     bench_mc(kernel, args.repeats)))
    for name in [*backends, "python"]:
        rows.append((f"train 20x30x2000 [{name}]",
                     bench_train(name, args.repeats)))

    width = max(len(label) for label, _ in rows)
    print(f"{'benchmark':<{width}}  {'best':>10}  relative")
    baselines = {}
    for label, seconds in rows:
        stem = label.split(" [")[0]
        baselines.setdefault(stem, seconds)
        relative = seconds / baselines[stem]
        print(f"{label:<{width}}  {seconds * 1e3:>8.2f}ms  "
              f"{relative:7.2f}x")


if __name__ == "__main__":
    main()
