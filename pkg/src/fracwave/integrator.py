"""Direct time integration of p'' + D p' + c^2 K p = g(t).

D is built once per run (see ``damping.build_damping_matrix``); the schemes
here only ever see fixed matrices.  Several sources sharing K and D can be
stepped together as columns of one state matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import InvalidArgument, NumericFailure
from .trajectory import Trajectory

SCHEMES = ("newmark_avg_accel", "central_difference")


# -- excitation signals -----------------------------------------------------


@dataclass(frozen=True)
class ToneBurst:
    f: float
    n_cycles: float = 10
    window: str = "hann"
    t_start: float = 0.0

    kind = "tone_burst"

    def __post_init__(self):
        if not (self.f > 0 and self.n_cycles > 0 and self.t_start >= 0):
            raise InvalidArgument("tone_burst needs f > 0, n_cycles > 0, t_start >= 0")
        if self.window not in ("hann", "rect"):
            raise InvalidArgument(f"tone_burst window must be 'hann' or 'rect', got {self.window!r}")

    @property
    def duration(self) -> float:
        return self.n_cycles / self.f

    @property
    def t_stop(self) -> float:
        return self.t_start + self.duration


@dataclass(frozen=True)
class GaussianPulse:
    t0: float
    sigma: float

    kind = "gaussian_pulse"

    def __post_init__(self):
        if not (self.t0 > 0 and self.sigma > 0):
            raise InvalidArgument("gaussian_pulse needs t0 > 0 and sigma > 0")

    @property
    def bandwidth(self) -> float:
        return 1.0 / (2.0 * np.pi * self.sigma)

    @property
    def t_stop(self) -> float:
        return self.t0 + 10.0 * self.sigma


@dataclass(frozen=True)
class Ricker:
    f_peak: float
    t0: float

    kind = "ricker"

    def __post_init__(self):
        if not (self.f_peak > 0 and self.t0 > 0):
            raise InvalidArgument("ricker needs f_peak > 0 and t0 > 0")

    @property
    def t_stop(self) -> float:
        return self.t0 + 3.0 / self.f_peak


SIGNALS = {cls.kind: cls for cls in (ToneBurst, GaussianPulse, Ricker)}


def make_signal(kind: str, **params):
    if kind not in SIGNALS:
        raise InvalidArgument(f"unknown excitation kind {kind!r}; expected one of {sorted(SIGNALS)}")
    try:
        return SIGNALS[kind](**params)
    except TypeError as exc:
        raise InvalidArgument(f"bad parameters for {kind}: {exc}") from None


def excitation_signal(signal, times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if isinstance(signal, ToneBurst):
        tau = t - signal.t_start
        inside = (tau >= 0) & (tau <= signal.duration)
        s = np.sin(2.0 * np.pi * signal.f * tau)
        if signal.window == "hann":
            s = s * np.sin(np.pi * tau / signal.duration) ** 2
        return np.where(inside, s, 0.0)
    if isinstance(signal, GaussianPulse):
        return np.exp(-0.5 * ((t - signal.t0) / signal.sigma) ** 2)
    if isinstance(signal, Ricker):
        arg = (np.pi * signal.f_peak * (t - signal.t0)) ** 2
        return (1.0 - 2.0 * arg) * np.exp(-arg)
    raise InvalidArgument(f"not an excitation signal: {signal!r}")


@dataclass(frozen=True)
class Excitation:
    """Spatial load vector times a scalar signal: g(t) = load * s(t)."""

    load: np.ndarray
    signal: object

    def sample(self, times) -> np.ndarray:
        return excitation_signal(self.signal, times)


# -- solver ------------------------------------------------------------------


@dataclass(frozen=True)
class SolverConfig:
    scheme: str = "newmark_avg_accel"
    dt: float = 1e-3
    t_end: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidArgument(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not (self.dt > 0 and self.t_end > 0 and self.c > 0):
            raise InvalidArgument("dt, t_end and c must be positive")
        if self.dt > self.t_end:
            raise InvalidArgument(f"dt={self.dt} exceeds t_end={self.t_end}")

    @property
    def n_steps(self) -> int:
        return int(np.ceil(self.t_end / self.dt - 1e-9))

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


def stability_bound(K, c: float) -> float:
    """Largest stable central-difference step, 2 / (c * max omega)."""
    lam_max = scipy.linalg.eigvalsh(np.asarray(K), subset_by_index=[K.shape[0] - 1, K.shape[0] - 1])[0]
    return 2.0 / (c * np.sqrt(max(lam_max, 0.0)))


def energy(K, c: float, p, pdot) -> float:
    p = np.asarray(p, dtype=float)
    pdot = np.asarray(pdot, dtype=float)
    if p.shape != pdot.shape or p.shape[0] != np.shape(K)[0]:
        raise InvalidArgument("dimension mismatch between K, p and pdot")
    return 0.5 * float(pdot @ pdot) + 0.5 * c**2 * float(p @ (K @ p))


def _operator(K):
    K = np.asarray(K, dtype=float)
    if K.shape[0] > 64 and np.count_nonzero(K) < 0.1 * K.size:
        return scipy.sparse.csr_matrix(K)
    return K


def _columns(x, n, m, name):
    if x is None:
        return np.zeros((n, m))
    x = np.asarray(x, dtype=float)
    if x.shape == (n,):
        return np.repeat(x[:, None], m, axis=1)
    if x.shape == (n, m):
        return x.copy()
    raise InvalidArgument(f"{name} has shape {x.shape}, expected ({n},) or ({n}, {m})")


def integrate(K, D, source, config: SolverConfig, p0=None, pdot0=None, *, probes=(),
              probe_labels=None, full_state_stride: int = 0, record_energy: bool = False) -> Trajectory:
    """Integrate one run; ``source`` is an :class:`Excitation` or None (g = 0).

    ``probes`` are row indices of K; ``probe_labels`` (default: the same
    indices) name them in the returned trajectory.
    """
    return integrate_many(K, D, [source], config, p0, pdot0, probes=probes, probe_labels=probe_labels,
                          full_state_stride=full_state_stride, record_energy=record_energy)[0]


def integrate_many(K, D, sources, config: SolverConfig, p0=None, pdot0=None, *, probes=(),
                   probe_labels=None, full_state_stride: int = 0,
                   record_energy: bool = False) -> list[Trajectory]:
    """Integrate several independent runs that share K, D and the time grid."""
    K = np.asarray(K, dtype=float)
    D = np.asarray(D, dtype=float)
    n = K.shape[0]
    if K.shape != (n, n) or D.shape != (n, n):
        raise InvalidArgument(f"K {K.shape} and D {D.shape} must be square and equal-sized")
    sources = list(sources)
    m = len(sources)
    if m == 0:
        raise InvalidArgument("at least one source (or None) is required")
    probes = [int(i) for i in probes]
    if any(i < 0 or i >= n for i in probes):
        raise InvalidArgument(f"probe index out of range 0..{n - 1}: {probes}")
    labels = list(probes if probe_labels is None else probe_labels)
    if len(labels) != len(probes):
        raise InvalidArgument("probe_labels must match probes")
    if full_state_stride < 0:
        raise InvalidArgument("full_state_stride must be >= 0")

    c = config.c
    dt = config.dt
    c2 = c * c
    if not (np.isfinite(c2) and np.all(np.isfinite(K)) and np.all(np.isfinite(D))):
        raise NumericFailure("system matrices or c^2 are not finite")
    times = config.times()
    nt = len(times)

    loads = np.zeros((n, m))
    signals = np.zeros((m, nt))
    for j, src in enumerate(sources):
        if src is None:
            continue
        load = np.asarray(src.load, dtype=float)
        if load.shape != (n,):
            raise InvalidArgument(f"source load has shape {load.shape}, expected ({n},)")
        loads[:, j] = load
        signals[j] = src.sample(times)

    u = _columns(p0, n, m, "p0")
    v = _columns(pdot0, n, m, "pdot0")
    Kop = _operator(K)
    has_damping = bool(np.any(D))

    P = np.empty((nt, len(probes), m))
    V = np.empty((nt, len(probes), m))
    n_kept = (nt - 1) // full_state_stride + 1 if full_state_stride else 0
    F = np.empty((n_kept, n, m)) if full_state_stride else None
    E = np.empty((nt, m)) if record_energy else None

    def record(k, u, v):
        P[k] = u[probes]
        V[k] = v[probes]
        if full_state_stride and k % full_state_stride == 0:
            F[k // full_state_stride] = u
        if record_energy:
            E[k] = 0.5 * np.einsum("ij,ij->j", v, v) + 0.5 * c**2 * np.einsum("ij,ij->j", u, Kop @ u)

    if config.scheme == "newmark_avg_accel":
        # beta = 1/4, gamma = 1/2: trapezoidal rule, no numerical dissipation
        a0 = 4.0 / dt**2
        a1 = 2.0 / dt
        a2 = 4.0 / dt
        k_eff = c2 * K + a1 * D + a0 * np.eye(n)
        try:
            chol = scipy.linalg.cho_factor(k_eff)
        except np.linalg.LinAlgError as exc:
            raise NumericFailure(f"effective stiffness factorization failed: {exc}") from None
        k_inv = scipy.linalg.cho_solve(chol, np.eye(n))
        Ku = Kop @ u
        Dv = D @ v if has_damping else 0.0
        a = loads * signals[:, 0] - c2 * Ku - Dv
        record(0, u, v)
        for k in range(1, nt):
            # solve for the increment and take the new acceleration from the
            # equation of motion; both avoid differences of large nearby terms
            g = loads * signals[:, k]
            du = k_inv @ (g - c2 * Ku + a2 * v + a + Dv)
            u = u + du
            v = a1 * du - v
            Ku = Kop @ u
            Dv = D @ v if has_damping else 0.0
            a = g - c2 * Ku - Dv
            record(k, u, v)
            if k % 256 == 0 and not np.all(np.isfinite(u)):
                raise NumericFailure(f"non-finite state at step {k} (t={times[k]:.6g})")
        margin = None
    else:
        bound = stability_bound(K, c)
        margin = bound / dt
        if not dt < bound:
            raise InvalidArgument(
                f"central_difference unstable: dt={dt:.6g} must be < 2/(c*omega_max) = {bound:.6g}"
            )
        # damping taken at the centred velocity: (I + dt/2 D) u+ = ...
        if has_damping:
            lhs_inv = np.linalg.inv(np.eye(n) + 0.5 * dt * D)
        acc = loads * signals[:, 0] - c2 * (Kop @ u) - (D @ v if has_damping else 0.0)
        u_prev = u - dt * v + 0.5 * dt**2 * acc
        signals_ext = np.concatenate([signals, np.zeros((m, 1))], axis=1)
        for k in range(nt):
            rhs = 2.0 * u - u_prev + dt**2 * (loads * signals_ext[:, k] - c2 * (Kop @ u))
            if has_damping:
                rhs += 0.5 * dt * (D @ u_prev)
                u_next = lhs_inv @ rhs
            else:
                u_next = rhs
            v = (u_next - u_prev) / (2.0 * dt)
            record(k, u, v)
            u_prev, u = u, u_next
            if k % 256 == 0 and not np.all(np.isfinite(u)):
                raise NumericFailure(f"non-finite state at step {k} (t={times[k]:.6g})")

    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(u))):
        raise NumericFailure("integration produced non-finite values")

    out = []
    for j in range(m):
        out.append(Trajectory(
            times=times,
            probes=labels,
            p=np.ascontiguousarray(P[:, :, j]),
            pdot=np.ascontiguousarray(V[:, :, j]),
            full_state_stride=full_state_stride,
            full_states=None if F is None else np.ascontiguousarray(F[:, :, j]),
            energy=None if E is None else E[:, j].copy(),
            meta={"scheme": config.scheme, "dt": dt, "c": c, "stability_margin": margin},
        ))
    return out
