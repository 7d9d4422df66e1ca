"""Hot-loop kernels: a compiled core with a pure-numpy fallback.

The compiled extension (``_native``, Cython) and the numpy reference
(``_fallback``) implement the same three entry points:

    fading_chain(scatter, rician_factor, time_correlation, steps, rng)
    mc_estimator_rounds(gradients, probs, noise_std, channel_noise_var,
                        rounds, streams)
    train_quadratic(curv, shard_means, w0, w_star, f_star, probs_matrix,
                    gain_threshold, lipschitz, noise_std, channel_noise_var,
                    rician_factor, time_correlation, scatter0, power,
                    estimator_known, eta, streams)

Both consume random draws through numpy BitGenerators using the exact
scalar routines ``numpy.random.Generator`` itself calls, under the draw
protocol documented in ``_fallback``; given the same streams the two
backends therefore walk identical random sequences, and results agree up
to floating-point reduction order (the fading chain is elementwise and
matches bitwise).

Selection: the compiled core is used when importable; set environment
variable ``AIRDP_BACKEND=numpy`` to force the fallback or
``AIRDP_BACKEND=native`` to fail loudly when the extension is missing.
"""
from __future__ import annotations

import importlib
import os

from . import _fallback

__all__ = ["BACKEND", "get_backend", "available_backends",
           "fading_chain", "mc_estimator_rounds", "train_quadratic"]

_requested = os.environ.get("AIRDP_BACKEND", "").strip().lower()
if _requested not in ("", "native", "numpy"):
    raise ImportError(
        f"AIRDP_BACKEND={_requested!r} not recognized; use 'native' or 'numpy'")

_native = None
if _requested != "numpy":
    try:
        _native = importlib.import_module("._native", __name__)
    except ImportError:
        if _requested == "native":
            raise ImportError(
                "AIRDP_BACKEND=native but the compiled kernel extension is "
                "not importable; reinstall with a working C toolchain or "
                "unset AIRDP_BACKEND")
        _native = None

if _native is not None:
    BACKEND = "native"
    _impl = _native
else:
    BACKEND = "numpy"
    _impl = _fallback

fading_chain = _impl.fading_chain
mc_estimator_rounds = _impl.mc_estimator_rounds
train_quadratic = _impl.train_quadratic


def available_backends() -> tuple:
    """Names of importable backends, preferred first."""
    names = []
    if _native is not None:
        names.append("native")
    else:
        try:
            importlib.import_module("._native", __name__)
            names.append("native")
        except ImportError:
            pass
    names.append("numpy")
    return tuple(names)


def get_backend(name: str):
    """Return a specific backend module ('native' or 'numpy'), regardless
    of which one was selected at import; used by parity tests and the
    benchmark."""
    if name == "numpy":
        return _fallback
    if name == "native":
        if _native is not None:
            return _native
        # raises ImportError when the extension is unavailable
        return importlib.import_module("._native", __name__)
    raise ValueError(f"unknown backend {name!r}")
