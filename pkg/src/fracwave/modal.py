"""Modal superposition solver.

K = Phi diag(omega^2) Phi^T decouples the damped system into independent
oscillators

    q_i'' + 2 a_i q_i' + (c omega_i)^2 q_i = ghat_i(t),

where 2 a_i is the eigenvalue of D on mode i (2 alpha0 c omega_i^y for
the fractional law).  Each one is solved in closed form: the free part from
the initial conditions and the forced part as a Duhamel convolution with
the mode's impulse response, evaluated by trapezoidal quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

from .damping import DampingSpec, modal_damping
from .errors import InvalidArgument, NumericFailure
from .fem import check_spd
from .trajectory import Trajectory

TIE_BAND = 1e-12
REGIMES = ("underdamped", "critical", "overdamped")
DISPERSION_HEADER = "omega,zeta,regime,damped_freq,phase_velocity"


@dataclass(frozen=True)
class ModalBasis:
    omegas: np.ndarray
    Phi: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.omegas)


@dataclass(frozen=True)
class ModeRegime:
    index: int
    zeta: float
    regime: str
    damped_freq: float | None


@dataclass(frozen=True)
class ModalResponse:
    times: np.ndarray
    q: np.ndarray
    qdot: np.ndarray


def eigendecompose(K) -> ModalBasis:
    K = check_spd(K, name="K")
    try:
        lam, Phi = np.linalg.eigh(K)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"eigensolve failed: {exc}") from None
    # null-space modes (free/free) are snapped to exactly zero
    lam = np.where(lam < 1e-12 * lam[-1], 0.0, lam)
    idx = np.argmax(np.abs(Phi), axis=0)
    signs = np.sign(Phi[idx, np.arange(Phi.shape[1])])
    Phi = Phi * signs
    for a in (lam, Phi):
        a.setflags(write=False)
    omegas = np.sqrt(lam)
    omegas.setflags(write=False)
    return ModalBasis(omegas, Phi)


def modal_force(basis: ModalBasis, g) -> np.ndarray:
    """Project a load history (n_times, n) or a single vector (n,) onto the modes."""
    g = np.asarray(g, dtype=float)
    if g.shape[-1] != basis.Phi.shape[0]:
        raise InvalidArgument(f"load dimension {g.shape[-1]} does not match basis size {basis.Phi.shape[0]}")
    return g @ basis.Phi


def _regime_of(zeta_sq):
    radicand = 1.0 - zeta_sq
    if abs(radicand) <= TIE_BAND:
        return "critical"
    return "underdamped" if radicand > 0 else "overdamped"


def classify_mode(omega_i: float, alpha0: float, y: float, c: float = 1.0, index: int = 0) -> ModeRegime:
    if omega_i < 0:
        raise InvalidArgument(f"omega_i must be nonnegative, got {omega_i}")
    if omega_i == 0:
        raise InvalidArgument("zero-frequency modes have no damping ratio; they are solved separately")
    if alpha0 < 0 or not 0 <= y <= 2:
        raise InvalidArgument("need alpha0 >= 0 and y in [0, 2]")
    zeta = alpha0 * omega_i ** (y - 1.0)
    regime = _regime_of(zeta * zeta)
    damped = c * omega_i * np.sqrt(1.0 - zeta * zeta) if regime == "underdamped" else None
    return ModeRegime(index, float(zeta), regime, None if damped is None else float(damped))


def _classify_general(a, w0):
    """Regimes for decay rates ``a`` and undamped angular frequencies ``w0``."""
    a = np.asarray(a, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        zsq = np.where(w0 > 0, (a / np.where(w0 > 0, w0, 1.0)) ** 2, np.where(a > 0, np.inf, 1.0))
    radicand = 1.0 - zsq
    regime = np.where(np.abs(radicand) <= TIE_BAND, 1, np.where(radicand > 0, 0, 2))
    return regime, radicand


def _kernels(a, w0, regime, radicand, t):
    """Impulse response h and its derivative h' for each mode, shape (m, n_times)."""
    a = np.asarray(a, dtype=float)[:, None]
    w0 = np.asarray(w0, dtype=float)[:, None]
    regime = np.asarray(regime)[:, None]
    rad = np.asarray(radicand, dtype=float)[:, None]
    t = np.asarray(t, dtype=float)[None, :]
    h = np.empty((a.shape[0], t.shape[1]))
    hd = np.empty_like(h)
    decay = np.exp(-a * t)

    under = regime[:, 0] == 0
    if np.any(under):
        wd = w0[under] * np.sqrt(rad[under])
        s, co = np.sin(wd * t), np.cos(wd * t)
        h[under] = decay[under] * s / wd
        hd[under] = decay[under] * (co - a[under] * s / wd)

    crit = regime[:, 0] == 1
    if np.any(crit):
        h[crit] = t * decay[crit]
        hd[crit] = decay[crit] * (1.0 - a[crit] * t)

    over = regime[:, 0] == 2
    if np.any(over):
        ao = a[over]
        # b = sqrt(a^2 - w0^2); the w0 * sqrt(-radicand) form keeps precision near critical
        b = np.where(w0[over] > 0, w0[over] * np.sqrt(np.maximum(-rad[over], 0.0)), ao)
        bt = b * t
        small = bt < 1.0
        with np.errstate(over="ignore", invalid="ignore"):
            sinh_d = np.where(small, decay[over] * np.sinh(np.where(small, bt, 0.0)),
                              0.5 * (np.exp((b - ao) * t) - np.exp(-(ao + b) * t)))
            cosh_d = np.where(small, decay[over] * np.cosh(np.where(small, bt, 0.0)),
                              0.5 * (np.exp((b - ao) * t) + np.exp(-(ao + b) * t)))
        h[over] = sinh_d / b
        hd[over] = cosh_d - ao * sinh_d / b
    return h, hd


def _duhamel(force, h, hd, hdd, a, dt):
    """Trapezoidal Duhamel integrals of ``force`` against h and h' (rows = modes).

    The trapezoid sums carry the first Euler-Maclaurin end correction
    -dt^2/12 [F'(t) - F'(0)], which lifts them from second to fourth order
    while the force is still active.  Uses h(0) = 0, h'(0) = 1,
    h''(0) = -2a.
    """
    nt = force.shape[1]
    if nt > 64:
        ch = scipy.signal.fftconvolve(force, h, axes=1)[:, :nt]
        chd = scipy.signal.fftconvolve(force, hd, axes=1)[:, :nt]
    else:
        ch = np.array([np.convolve(f, k)[:nt] for f, k in zip(force, h)])
        chd = np.array([np.convolve(f, k)[:nt] for f, k in zip(force, hd)])
    g0 = force[:, :1]
    q = dt * (ch - 0.5 * g0 * h)
    qd = dt * (chd - 0.5 * g0 * hd - 0.5 * force)

    gdot = np.gradient(force, dt, axis=1, edge_order=2)
    gd0 = gdot[:, :1]
    a = a[:, None]
    # integrand F(tau) = g(tau) k(t - tau); F' = g' k(t - tau) - g k'(t - tau)
    q += dt**2 / 12.0 * (force + gd0 * h - g0 * hd)
    qd += dt**2 / 12.0 * (-(gdot + 2.0 * a * force) + gd0 * hd - g0 * hdd)
    q[:, 0] = 0.0
    qd[:, 0] = 0.0
    return q, qd


def _respond(a, w0, force, q0, qd0, dt):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    w0 = np.atleast_1d(np.asarray(w0, dtype=float))
    force = np.atleast_2d(np.asarray(force, dtype=float))
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))[:, None]
    qd0 = np.atleast_1d(np.asarray(qd0, dtype=float))[:, None]
    t = dt * np.arange(force.shape[1])
    regime, radicand = _classify_general(a, w0)
    h, hd = _kernels(a, w0, regime, radicand, t)
    hdd = -2.0 * a[:, None] * hd - (w0**2)[:, None] * h
    # free response written through the impulse response: q = (v0 + 2 a q0) h + q0 h'
    coef = qd0 + 2.0 * a[:, None] * q0
    q = coef * h + q0 * hd
    qd = coef * hd + q0 * hdd
    if np.any(force):
        qf, qdf = _duhamel(force, h, hd, hdd, a, dt)
        q = q + qf
        qd = qd + qdf
    return t, q, qd


def modal_response(regime: ModeRegime, omega_i: float, alpha0: float, y: float, c: float, force,
                   q0: float, qdot0: float, dt: float) -> ModalResponse:
    """Response of one fractional-law mode; ``force`` is ghat_i sampled every ``dt``."""
    if not dt > 0:
        raise InvalidArgument("dt must be positive")
    force = np.asarray(force, dtype=float)
    if force.ndim != 1 or force.size < 2:
        raise InvalidArgument("force must be a 1-D series with at least two samples")
    expected = classify_mode(omega_i, alpha0, y, c, regime.index)
    if expected.regime != regime.regime:
        raise InvalidArgument(
            f"regime {regime.regime!r} does not match parameters (they give {expected.regime!r})"
        )
    a = alpha0 * c * omega_i**y
    t, q, qd = _respond(a, c * omega_i, force[None, :], q0, qdot0, dt)
    return ModalResponse(t, q[0], qd[0])


def superpose(basis: ModalBasis, responses, rows=None) -> tuple[np.ndarray, np.ndarray]:
    """p = Phi q and pdot = Phi qdot, as (n_times, n_rows) arrays.

    ``responses`` is a sequence of ModalResponse (one per mode); ``rows``
    optionally restricts the output to selected physical DOFs.
    """
    responses = list(responses)
    if len(responses) != basis.n_modes:
        raise InvalidArgument(f"got {len(responses)} modal responses for {basis.n_modes} modes")
    Q = np.stack([r.q for r in responses], axis=1)
    Qd = np.stack([r.qdot for r in responses], axis=1)
    Phi = basis.Phi if rows is None else basis.Phi[list(rows)]
    return Q @ Phi.T, Qd @ Phi.T


def max_stable_dt(basis: ModalBasis, c: float) -> float:
    """Largest step for which the sampled kernels keep >= 10 points per period."""
    w = float(np.max(basis.omegas)) * c
    return np.inf if w == 0 else 0.1 * 2.0 * np.pi / w


def solve_modal(basis: ModalBasis, spec: DampingSpec, c: float, source, times, p0=None, pdot0=None,
                *, probes=(), probe_labels=None, full_state_stride: int = 0) -> Trajectory:
    """Superposed analytic solution on a uniform time grid.

    Mirrors :func:`fracwave.integrator.integrate`: ``source`` is an
    Excitation or None, ``probes`` are row indices.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise InvalidArgument("times must be a uniform grid with at least two points")
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=1e-9, atol=0):
        raise InvalidArgument("times must be uniformly spaced")
    limit = max_stable_dt(basis, c)
    if dt > limit * (1 + 1e-12):
        raise InvalidArgument(
            f"modal solver needs dt <= 0.1 * 2*pi/(c*omega_max) = {limit:.6g}, got dt = {dt:.6g}"
        )
    n = basis.Phi.shape[0]
    zeros = np.zeros(n)
    p0 = zeros if p0 is None else np.asarray(p0, dtype=float)
    pdot0 = zeros if pdot0 is None else np.asarray(pdot0, dtype=float)
    if p0.shape != (n,) or pdot0.shape != (n,):
        raise InvalidArgument("initial conditions must match the basis dimension")
    probes = [int(i) for i in probes]
    labels = list(probes if probe_labels is None else probe_labels)

    a = 0.5 * modal_damping(spec, basis.omegas, c)
    w0 = c * basis.omegas
    if source is None:
        force = np.zeros((n, times.size))
    else:
        force = np.outer(modal_force(basis, source.load), source.sample(times))
    _, Q, Qd = _respond(a, w0, force, modal_force(basis, p0), modal_force(basis, pdot0), dt)
    Phi_p = basis.Phi[probes]
    full = None
    if full_state_stride:
        full = (basis.Phi @ Q[:, ::full_state_stride]).T
    if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(Qd))):
        raise NumericFailure("modal response produced non-finite values")
    return Trajectory(
        times=times - times[0],
        probes=labels,
        p=(Phi_p @ Q).T,
        pdot=(Phi_p @ Qd).T,
        full_state_stride=full_state_stride,
        full_states=full,
        meta={"scheme": "modal", "dt": float(dt), "c": c},
    )


@dataclass(frozen=True)
class DispersionRow:
    omega: float
    zeta: float
    regime: str
    damped_freq: float | None
    phase_velocity: float | None


def dispersion_curve(basis: ModalBasis, alpha0: float, y: float, c: float = 1.0) -> list[DispersionRow]:
    rows = []
    for i, w in enumerate(basis.omegas):
        if w == 0:
            # rigid mode: decay 2 alpha0 c 0^y against zero stiffness
            regime = "overdamped" if (y == 0 and alpha0 > 0) else "critical"
            rows.append(DispersionRow(0.0, float("nan"), regime, None, None))
            continue
        m = classify_mode(w, alpha0, y, c, i)
        pv = None if m.damped_freq is None else m.damped_freq / w
        rows.append(DispersionRow(float(w), m.zeta, m.regime, m.damped_freq, pv))
    return rows


def dispersion_curve_for(basis: ModalBasis, spec: DampingSpec, c: float = 1.0) -> list[DispersionRow]:
    """Dispersion table for any damping law, via its per-mode decay rate."""
    if spec.kind == "fractional":
        return dispersion_curve(basis, spec.alpha0, spec.y, c)
    a = 0.5 * modal_damping(spec, basis.omegas, c)
    w0 = c * basis.omegas
    regime, radicand = _classify_general(a, w0)
    rows = []
    for w, ai, r, rad in zip(basis.omegas, a, regime, radicand):
        zeta = ai / (c * w) if w > 0 else float("nan")
        wd = c * w * np.sqrt(rad) if r == 0 else None
        rows.append(DispersionRow(float(w), float(zeta), REGIMES[r], None if wd is None else float(wd),
                                  None if wd is None else float(wd / w)))
    return rows
