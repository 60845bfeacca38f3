import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fracwave.analysis import (AttenuationSample, constitutive_stress, decay_rate, fit_power_law,
                               fit_power_law_arrays, measure_attenuation, measure_damped_frequency,
                               measure_decay_rate, validity_window, zero_crossings)
from fracwave.errors import (ConvergenceFailure, DegenerateSignal, InsufficientSignal, InvalidArgument,
                             InvalidWindow)
from fracwave.fem import build_uniform_mesh
from fracwave.trajectory import Trajectory


def synthetic_sweep(alpha0, y, alpha1=0.0, w=(2.0, 3.0, 5.0, 8.0, 13.0)):
    w = np.asarray(w)
    return w, alpha1 + alpha0 * w**y


class TestFit:
    def test_exact_pure_recovery(self):
        w, a = synthetic_sweep(0.02, 1.3)
        fit = fit_power_law_arrays(w, a)
        assert fit.y_hat == pytest.approx(1.3, abs=1e-12)
        assert fit.alpha0_hat == pytest.approx(0.02, rel=1e-12)
        assert fit.residual < 1e-12

    def test_two_term_recovery(self):
        w, a = synthetic_sweep(0.02, 1.6, alpha1=0.05)
        fit = fit_power_law_arrays(w, a, "two_term")
        assert fit.y_hat == pytest.approx(1.6, abs=1e-6)
        assert fit.alpha1_hat == pytest.approx(0.05, rel=1e-5)
        np.testing.assert_allclose(fit.predict(w), a, rtol=1e-8)

    def test_from_samples(self):
        w, a = synthetic_sweep(0.1, 0.5)
        samples = [AttenuationSample(x / (2 * np.pi), x, y, (0.0, 1.0), np.exp(-y)) for x, y in zip(w, a)]
        assert fit_power_law(samples).y_hat == pytest.approx(0.5)

    @pytest.mark.parametrize("w,a,match", [
        ([1.0, 2.0], [1.0, 2.0], "at least 3"),
        ([1.0, 1.0, 2.0], [1.0, 1.0, 2.0], "distinct"),
        ([1.0, 2.0, 3.0], [1.0, -2.0, 3.0], "positive"),
    ])
    def test_rejects(self, w, a, match):
        with pytest.raises(InvalidArgument, match=match):
            fit_power_law_arrays(w, a)

    def test_two_term_needs_four(self):
        with pytest.raises(InvalidArgument, match="at least 4"):
            fit_power_law_arrays([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], "two_term")

    def test_convergence_failure_type(self):
        assert issubclass(ConvergenceFailure, RuntimeError)

    @given(alpha0=st.floats(1e-3, 1.0), y=st.floats(0.0, 2.0), scale=st.floats(0.5, 4.0))
    def test_fit_consistency(self, alpha0, y, scale):
        w = scale * np.array([1.0, 1.5, 2.2, 3.1, 4.7])
        fit = fit_power_law_arrays(w, alpha0 * w**y)
        assert fit.y_hat == pytest.approx(y, abs=1e-9)
        assert fit.alpha0_hat == pytest.approx(alpha0, rel=1e-9)


class TestSignalMeasures:
    def test_zero_crossings(self):
        t = np.linspace(0, 2, 2001)
        tc = zero_crossings(t, np.sin(2 * np.pi * t + 0.3))
        expected = (np.arange(1, 5) * np.pi - 0.3) / (2 * np.pi)
        np.testing.assert_allclose(tc, expected, atol=1e-6)

    def test_decay_rate_synthetic(self):
        t = np.linspace(0, 20, 20001)
        q = np.exp(-0.15 * t) * np.cos(3.0 * t + 0.4)
        assert decay_rate(t, q) == pytest.approx(0.15, rel=1e-3)

    def test_decay_rate_needs_peaks(self):
        t = np.linspace(0, 1, 100)
        with pytest.raises(InsufficientSignal):
            decay_rate(t, np.exp(-t))

    def _traj(self, q, t, shape):
        return Trajectory(t, [], np.empty((len(t), 0)), np.empty((len(t), 0)), full_state_stride=1,
                          full_states=np.outer(q, shape))

    def test_projection_measures(self):
        t = np.linspace(0, 30, 30001)
        shape = np.array([0.3, 1.0, -0.5])
        tr = self._traj(np.exp(-0.1 * t) * np.cos(2.5 * t), t, shape)
        assert measure_damped_frequency(tr, shape) == pytest.approx(2.5, rel=1e-5)
        assert measure_decay_rate(tr, shape) == pytest.approx(0.1, rel=1e-3)

    def test_no_oscillation(self):
        t = np.linspace(0, 5, 501)
        shape = np.ones(2)
        with pytest.raises(InsufficientSignal, match="zero crossings"):
            measure_damped_frequency(self._traj(np.exp(-t), t, shape), shape)

    def test_needs_full_states(self):
        t = np.linspace(0, 1, 10)
        tr = Trajectory(t, [1], np.zeros((10, 1)), np.zeros((10, 1)))
        with pytest.raises(InvalidArgument, match="full state"):
            measure_damped_frequency(tr, np.ones(3))


class TestAttenuation:
    mesh = build_uniform_mesh(10.0, 100, ("free", "fixed"))

    def test_window(self):
        t0, t1 = validity_window(self.mesh, 1.0, 0, (10, 40), burst_duration=2.0)
        assert t0 == 0.0
        assert t1 == pytest.approx(16.0)

    def test_window_too_short(self):
        with pytest.raises(InvalidWindow, match="reflection"):
            validity_window(self.mesh, 1.0, 0, (10, 40), burst_duration=12.0)

    def test_window_needs_downstream_probes(self):
        with pytest.raises(InvalidArgument):
            validity_window(self.mesh, 1.0, 50, (10, 60), burst_duration=1.0)

    def _plane_wave(self, alpha, f=2.0):
        # e^{-alpha x} envelope travelling at c = 1
        t = np.linspace(0, 15, 3001)
        x1, x2 = 1.0, 4.0
        burst = lambda s: np.where((s > 0) & (s < 3), np.sin(np.pi * s / 3) ** 2 * np.sin(2 * np.pi * f * s), 0)  # noqa: E731
        p = np.column_stack([np.exp(-alpha * x1) * burst(t - x1), np.exp(-alpha * x2) * burst(t - x2)])
        return Trajectory(t, [10, 40], p, np.zeros_like(p))

    @pytest.mark.parametrize("method", ["envelope", "peak"])
    def test_recovers_alpha(self, method):
        tr = self._plane_wave(0.3)
        s = measure_attenuation(tr, 2.0, (10, 40), self.mesh, c=1.0, source_node=0, burst_duration=3.0,
                                method=method)
        assert s.alpha_measured == pytest.approx(0.3, rel=1e-3)
        assert s.omega == pytest.approx(4 * np.pi)
        assert s.row()[2:4] == (1.0, 4.0)

    def test_zero_signal(self):
        tr = self._plane_wave(0.3)
        tr.p[:] = 0
        with pytest.raises(DegenerateSignal):
            measure_attenuation(tr, 2.0, (10, 40), self.mesh, c=1.0, window=(0.0, 15.0))

    def test_probe_order_and_presence(self):
        tr = self._plane_wave(0.3)
        with pytest.raises(InvalidArgument, match="x2 > x1"):
            measure_attenuation(tr, 2.0, (40, 10), self.mesh, c=1.0, window=(0, 15))
        with pytest.raises(InvalidArgument, match="not recorded"):
            measure_attenuation(tr, 2.0, (10, 50), self.mesh, c=1.0, window=(0, 15))

    def test_run_too_short(self):
        tr = self._plane_wave(0.3)
        short = Trajectory(tr.times[:500], tr.probes, tr.p[:500], tr.pdot[:500])
        with pytest.raises(InvalidWindow, match="before the burst passes"):
            measure_attenuation(short, 2.0, (10, 40), self.mesh, c=1.0, source_node=0, burst_duration=3.0)


class TestConstitutive:
    def test_stress(self):
        # constitutive law: sigma = E0 eps + 2 alpha0 c rho f^y eps_dot
        s = constitutive_stress([0.1], [2.0], E0=3.0, alpha0=0.5, c=2.0, rho=1.5, f=4.0, y=0.5)
        assert s[0] == pytest.approx(0.3 + 2 * 0.5 * 2.0 * 1.5 * 2.0 * 2.0)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgument, match="length"):
            constitutive_stress([0.1, 0.2], [1.0], 1.0, 0.1, 1.0, 1.0, 1.0, 1.0)

    @given(eps=st.floats(-1, 1), E0=st.floats(0, 10))
    def test_elastic_limit(self, eps, E0):
        assume(np.isfinite(eps))
        s = constitutive_stress([eps], [0.0], E0, 0.3, 1.0, 1.0, 2.0, 1.0)
        assert s[0] == pytest.approx(E0 * eps)
