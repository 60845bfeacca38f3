"""Attenuation and dispersion measurements on simulated signals.

Amplitudes are compared between two probes to get the spatial decay rate
alpha = -ln(A2/A1) / (x2 - x1), which is then fitted to alpha0 * w^y or
alpha1 + alpha0 * w^y.  Fits use the angular wavenumber w = 2 pi f / c of
the carrier, the same variable the damping operator acts on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.signal

from .errors import (ConvergenceFailure, DegenerateSignal, InsufficientSignal, InvalidArgument,
                     InvalidWindow)
from .fem import Mesh
from .trajectory import Trajectory

SAMPLES_HEADER = "f,omega,x1,x2,ratio,alpha"
FIT_HEADER = "form,alpha1_hat,alpha0_hat,y_hat,residual,n_samples"
AMPLITUDE_METHODS = ("envelope", "peak")


@dataclass(frozen=True)
class AttenuationSample:
    frequency: float
    omega: float
    alpha_measured: float
    probe_pair: tuple[float, float]
    amplitude_ratio: float
    method: str = "envelope"

    def row(self):
        x1, x2 = self.probe_pair
        return (self.frequency, self.omega, x1, x2, self.amplitude_ratio, self.alpha_measured)


@dataclass(frozen=True)
class PowerLawFit:
    form: str
    alpha0_hat: float
    y_hat: float
    alpha1_hat: float
    residual: float
    n_samples: int

    def row(self):
        return (self.form, self.alpha1_hat, self.alpha0_hat, self.y_hat, self.residual, self.n_samples)

    def predict(self, omega):
        return self.alpha1_hat + self.alpha0_hat * np.asarray(omega, dtype=float) ** self.y_hat


def _amplitude(x: np.ndarray, method: str) -> float:
    if method == "envelope":
        return float(np.max(np.abs(scipy.signal.hilbert(x))))
    return float(np.max(np.abs(x)))


def validity_window(mesh: Mesh, c: float, source_node: int, probe_pair, burst_duration: float,
                    guard: float = 0.1) -> tuple[float, float]:
    """Time window in which both probes see the whole direct burst and no reflection.

    Returns ``(0, t_reflect)``.  Raises InvalidWindow when the burst has not
    fully passed the far probe before the first reflection arrives at either
    probe.
    """
    xs = mesh.node_coords[source_node]
    x1, x2 = (mesh.node_coords[i] for i in probe_pair)
    if not xs <= x1:
        raise InvalidArgument("probes must lie downstream of the source (x_source <= x1 < x2)")
    L = mesh.length
    t_reflect = (2.0 * L - xs - x2) / c
    if xs > 0:
        t_reflect = min(t_reflect, (xs + x1) / c)
    t_passed = (x2 - xs) / c + (1.0 + guard) * burst_duration
    if t_passed > t_reflect:
        raise InvalidWindow(
            f"burst passes x2 at t={t_passed:.4g} but a boundary reflection reaches the probes at "
            f"t={t_reflect:.4g}; lengthen the domain or shorten the burst"
        )
    return 0.0, t_reflect


def measure_attenuation(traj: Trajectory, carrier: float, probe_pair, mesh: Mesh, *, c: float,
                        source_node: int | None = None, burst_duration: float | None = None,
                        window: tuple[float, float] | None = None,
                        method: str = "envelope") -> AttenuationSample:
    """Spatial attenuation between two probe nodes for a tone-burst run.

    Either pass ``window`` explicitly or give ``source_node`` and
    ``burst_duration`` so it can be derived from the geometry.
    """
    if method not in AMPLITUDE_METHODS:
        raise InvalidArgument(f"method must be one of {AMPLITUDE_METHODS}")
    n1, n2 = (int(i) for i in probe_pair)
    x1, x2 = mesh.node_coords[n1], mesh.node_coords[n2]
    if not x2 > x1:
        raise InvalidArgument(f"probe pair must satisfy x2 > x1, got x1={x1}, x2={x2}")
    if n1 not in traj.probes or n2 not in traj.probes:
        raise InvalidArgument(f"probes {n1}, {n2} were not recorded (have {traj.probes})")
    if window is None:
        if source_node is None or burst_duration is None:
            raise InvalidArgument("need either window or (source_node, burst_duration)")
        window = validity_window(mesh, c, source_node, (n1, n2), burst_duration)
        t_need = (x2 - mesh.node_coords[source_node]) / c + burst_duration
        if traj.times[-1] < t_need:
            raise InvalidWindow(f"run ends at t={traj.times[-1]:.4g} before the burst passes x2 (t={t_need:.4g})")
    t0, t1 = window
    sel = (traj.times >= t0) & (traj.times <= t1)
    if np.count_nonzero(sel) < 8:
        raise InvalidWindow(f"window {window} holds fewer than 8 samples")
    a1 = _amplitude(traj.probe(n1)[sel], method)
    a2 = _amplitude(traj.probe(n2)[sel], method)
    if a1 == 0 or not np.isfinite(a1):
        raise DegenerateSignal(f"zero amplitude at probe node {n1}")
    ratio = a2 / a1
    alpha = -np.log(ratio) / (x2 - x1)
    omega = 2.0 * np.pi * carrier / c
    return AttenuationSample(float(carrier), float(omega), float(alpha), (float(x1), float(x2)),
                             float(ratio), method)


def fit_power_law(samples, form: str = "pure") -> PowerLawFit:
    """Least-squares fit of alpha(w) = alpha1 + alpha0 w^y over the samples' ``omega``.

    ``pure`` fixes alpha1 = 0 and regresses ln(alpha) on ln(w); ``two_term``
    solves the nonlinear problem in the log domain starting from the pure fit.
    """
    samples = list(samples)
    w = np.array([s.omega for s in samples], dtype=float)
    alpha = np.array([s.alpha_measured for s in samples], dtype=float)
    return fit_power_law_arrays(w, alpha, form)


def fit_power_law_arrays(w, alpha, form: str = "pure") -> PowerLawFit:
    w = np.asarray(w, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if form not in ("pure", "two_term"):
        raise InvalidArgument(f"form must be 'pure' or 'two_term', got {form!r}")
    need = 3 if form == "pure" else 4
    if w.size < need:
        raise InvalidArgument(f"{form} fit needs at least {need} samples, got {w.size}")
    if len(np.unique(w)) != w.size:
        raise InvalidArgument("sample frequencies must be distinct")
    if np.any(w <= 0) or np.any(alpha <= 0) or not np.all(np.isfinite(alpha)):
        raise InvalidArgument("log fit needs positive frequencies and attenuations")

    lw, la = np.log(w), np.log(alpha)
    slope, intercept = np.polyfit(lw, la, 1)
    if form == "pure":
        resid = la - (intercept + slope * lw)
        return PowerLawFit("pure", float(np.exp(intercept)), float(slope), 0.0,
                           float(np.sqrt(np.mean(resid**2))), int(w.size))

    def misfit(theta):
        a1, log_a0, y = theta
        return np.log(a1 + np.exp(log_a0) * w**y) - la

    x0 = np.array([0.0, intercept, slope])
    try:
        sol = scipy.optimize.least_squares(
            misfit, x0, bounds=([0.0, -np.inf, -np.inf], [np.inf, np.inf, np.inf]),
            method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000,
        )
    except (ValueError, FloatingPointError) as exc:
        raise ConvergenceFailure(f"two-term fit failed: {exc}", last=x0) from None
    a1, log_a0, y = sol.x
    fit = PowerLawFit("two_term", float(np.exp(log_a0)), float(y), float(a1),
                      float(np.sqrt(np.mean(sol.fun**2))), int(w.size))
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise ConvergenceFailure(f"two-term fit did not converge: {sol.message}",
                                 residual=fit.residual, last=fit)
    return fit


def zero_crossings(t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Linearly interpolated times at which ``x`` changes sign."""
    s = np.signbit(x)
    idx = np.flatnonzero(s[1:] != s[:-1])
    x0, x1 = x[idx], x[idx + 1]
    return t[idx] - x0 * (t[idx + 1] - t[idx]) / (x1 - x0)


def _project(traj: Trajectory, mode_shape) -> tuple[np.ndarray, np.ndarray]:
    if traj.full_states is None or not traj.full_state_stride:
        raise InvalidArgument("trajectory holds no full state vectors (full_state_stride = 0)")
    phi = np.asarray(mode_shape, dtype=float)
    if phi.shape != (traj.full_states.shape[1],):
        raise InvalidArgument("mode shape does not match the state dimension")
    q = traj.full_states @ phi / (phi @ phi)
    return traj.full_times, q


def _significant(t, q, floor=1e-8):
    """Trim the tail where the decaying signal has sunk into round-off."""
    big = np.flatnonzero(np.abs(q) > floor * np.max(np.abs(q)))
    end = big[-1] + 1 if big.size else 0
    return t[:end], q[:end]


def measure_damped_frequency(traj: Trajectory, mode_shape) -> float:
    """Angular frequency of a free-decay run projected on ``mode_shape``.

    Successive zero crossings of a damped oscillation are half a period
    apart; the median spacing gives the frequency.
    """
    t, q = _significant(*_project(traj, mode_shape))
    tc = zero_crossings(t, q)
    if tc.size < 4:
        raise InsufficientSignal(f"only {tc.size} zero crossings; the mode does not oscillate")
    return float(np.pi / np.median(np.diff(tc)))


def decay_rate(t, q) -> float:
    """Exponential decay rate of an oscillation from the slope of its log-envelope.

    Extrema of e^(-a t) cos(w t + phi) share one amplitude factor, so
    ln|q| at the (parabolically refined) extrema is linear in t with slope
    -a.
    """
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    t, q = _significant(t, q, floor=1e-6)
    aq = np.abs(q)
    k = np.flatnonzero((aq[1:-1] > aq[:-2]) & (aq[1:-1] >= aq[2:]) & (np.sign(q[:-2]) == np.sign(q[2:]))) + 1
    if k.size < 3:
        raise InsufficientSignal(f"only {k.size} envelope peaks found")
    ym, y0, yp = aq[k - 1], aq[k], aq[k + 1]
    denom = ym - 2 * y0 + yp
    shift = np.where(denom != 0, 0.5 * (ym - yp) / np.where(denom != 0, denom, 1.0), 0.0)
    dt = t[1] - t[0]
    tp = t[k] + shift * dt
    ap = y0 - 0.25 * (ym - yp) * shift
    slope, _ = np.polyfit(tp, np.log(ap), 1)
    return float(-slope)


def measure_decay_rate(traj: Trajectory, mode_shape) -> float:
    return decay_rate(*_project(traj, mode_shape))


def constitutive_stress(strain, strain_rate, E0: float, alpha0: float, c: float, rho: float,
                        f: float, y: float) -> np.ndarray:
    """Viscoelastic stress sigma = E0 eps + 2 alpha0 c rho f^y eps_dot."""
    eps = np.asarray(strain, dtype=float)
    rate = np.asarray(strain_rate, dtype=float)
    if eps.shape != rate.shape:
        raise InvalidArgument(f"strain {eps.shape} and strain rate {rate.shape} differ in length")
    if min(E0, alpha0, c, rho, f) < 0:
        raise InvalidArgument("constitutive coefficients must be nonnegative")
    return E0 * eps + 2.0 * alpha0 * c * rho * f**y * rate
