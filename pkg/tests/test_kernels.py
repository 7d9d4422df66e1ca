"""Backend parity: the compiled kernels against the numpy reference."""

import os
import subprocess
import sys

import numpy as np
import pytest

from airdp import TrialStreams, run_training
from airdp import _kernels
from airdp._kernels import available_backends, get_backend
from airdp.channel import stationary_scatter
from conftest import make_train_config

HAS_NATIVE = "native" in available_backends()
needs_native = pytest.mark.skipif(
    not HAS_NATIVE, reason="compiled kernel extension not built")

# 20-user configurations sit at the edge of the concentration window; some
# rounds legitimately report an infinite central budget.
pytestmark = pytest.mark.filterwarnings(
    "ignore::airdp.errors.BudgetOverflowWarning")


class TestSelection:
    def test_numpy_always_available(self):
        assert "numpy" in available_backends()
        assert _kernels.BACKEND in available_backends()

    def test_get_backend_exposes_entry_points(self):
        for name in available_backends():
            impl = get_backend(name)
            for attr in ("fading_chain", "mc_estimator_rounds",
                         "train_quadratic"):
                assert callable(getattr(impl, attr))

    def test_get_backend_rejects_unknown_name(self):
        with pytest.raises(ValueError):
            get_backend("fortran")

    def test_environment_forces_numpy(self):
        code = ("import airdp._kernels as k; print(k.BACKEND)")
        out = subprocess.run(
            [sys.executable, "-c", code],
            env={**os.environ, "AIRDP_BACKEND": "numpy"},
            capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "numpy"

    def test_environment_rejects_garbage(self):
        out = subprocess.run(
            [sys.executable, "-c", "import airdp._kernels"],
            env={**os.environ, "AIRDP_BACKEND": "cuda"},
            capture_output=True, text=True)
        assert out.returncode != 0
        assert "AIRDP_BACKEND" in out.stderr

    @needs_native
    def test_environment_forces_native(self):
        code = ("import airdp._kernels as k; print(k.BACKEND)")
        out = subprocess.run(
            [sys.executable, "-c", code],
            env={**os.environ, "AIRDP_BACKEND": "native"},
            capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "native"


@needs_native
class TestFadingParity:
    @pytest.mark.parametrize("rician,rho", [
        (5.0, 0.1), (0.0, 0.0), (1e15, 0.9), (2.0, 0.0),
    ])
    def test_bitwise_identical_chains(self, rician, rho):
        scatter = stationary_scatter(16, np.random.default_rng(1))
        results = {}
        for name in ("native", "numpy"):
            impl = get_backend(name)
            rng = np.random.default_rng(77)
            results[name] = impl.fading_chain(scatter.copy(), rician, rho,
                                              200, rng)
        gains_n, state_n = results["native"]
        gains_f, state_f = results["numpy"]
        np.testing.assert_array_equal(gains_n, gains_f)
        np.testing.assert_array_equal(state_n, state_f)


@needs_native
class TestMcParity:
    def test_moments_match(self):
        rng = np.random.default_rng(5)
        gradients = rng.standard_normal((12, 7))
        probs = rng.uniform(0.2, 0.9, size=12)
        results = {}
        for name in ("native", "numpy"):
            impl = get_backend(name)
            streams = TrialStreams.from_seed(2024, trial=1)
            results[name] = impl.mc_estimator_rounds(
                gradients, probs, 0.3, 1.5, 500, streams.as_tuple())
        native, fallback = results["native"], results["numpy"]
        np.testing.assert_array_equal(native["counts"], fallback["counts"])
        for key in ("coord_sum_unknown", "coord_sq_sum_unknown",
                    "coord_sum_known", "coord_sq_sum_known"):
            np.testing.assert_allclose(native[key], fallback[key],
                                       rtol=1e-12)
        for key in ("normsq_sum_unknown", "normsq_sq_sum_unknown",
                    "normsq_sum_known", "normsq_sq_sum_known"):
            assert native[key] == pytest.approx(fallback[key], rel=1e-12)


class TestTrainingParity:
    def _trace(self, backend, estimator="unknown", rounds=120, **kwargs):
        config = make_train_config(rounds=rounds, estimator=estimator,
                                   **kwargs)
        return run_training(config, master_seed=314, backend=backend)

    @needs_native
    @pytest.mark.parametrize("estimator", ["unknown", "known"])
    def test_native_matches_numpy(self, estimator):
        native = self._trace("native", estimator)
        fallback = self._trace("numpy", estimator)
        assert native.backend == "native"
        assert fallback.backend == "numpy"
        np.testing.assert_array_equal(native.participants,
                                      fallback.participants)
        np.testing.assert_allclose(native.gap, fallback.gap, rtol=1e-9)
        np.testing.assert_allclose(native.loss, fallback.loss, rtol=1e-9)
        np.testing.assert_allclose(native.final_w, fallback.final_w,
                                   rtol=1e-9)
        np.testing.assert_allclose(native.effective_noise_var,
                                   fallback.effective_noise_var, rtol=1e-12)
        np.testing.assert_array_equal(native.eps_central,
                                      fallback.eps_central)

    @pytest.mark.parametrize("estimator", ["unknown", "known"])
    def test_reference_loop_matches_kernel(self, estimator):
        kernel = self._trace(None, estimator, rounds=60)
        reference = self._trace("python", estimator, rounds=60)
        assert reference.backend == "python"
        np.testing.assert_array_equal(kernel.participants,
                                      reference.participants)
        np.testing.assert_allclose(kernel.gap, reference.gap, rtol=1e-9)
        np.testing.assert_allclose(kernel.final_w, reference.final_w,
                                   rtol=1e-9)
        np.testing.assert_allclose(kernel.effective_noise_var,
                                   reference.effective_noise_var, rtol=1e-12)

    def test_reference_loop_matches_kernel_channel_aware(self):
        from airdp import SamplingPolicy
        import dataclasses
        config = make_train_config(rounds=40)
        config = dataclasses.replace(
            config, policy=SamplingPolicy.channel_aware(2.0))
        kernel = run_training(config, master_seed=271)
        reference = run_training(config, master_seed=271, backend="python")
        np.testing.assert_array_equal(kernel.participants,
                                      reference.participants)
        np.testing.assert_allclose(kernel.gap, reference.gap, rtol=1e-9)

    def test_reference_loop_matches_kernel_empirical_power(self):
        kernel = self._trace(None, rounds=40, alpha_mode="empirical")
        reference = self._trace("python", rounds=40,
                                alpha_mode="empirical")
        np.testing.assert_array_equal(kernel.participants,
                                      reference.participants)
        np.testing.assert_allclose(kernel.gap, reference.gap, rtol=1e-9)
        np.testing.assert_allclose(kernel.effective_noise_var,
                                   reference.effective_noise_var, rtol=1e-9)
