"""Scenario files and the run drivers behind the CLI.

A scenario is a YAML mapping::

    mesh:       {length: 6.0, n_elements: 1200, boundary: [free, fixed]}
    physics:    {c: 1.0, damping: {kind: fractional, alpha0: 0.002, y: 1.5}}
    excitation: {kind: tone_burst, source_node: 0,
                 parameters: {f: 4.0, n_cycles: 15, window: hann}}
    initial:    {mode: 1, amplitude: 1.0}          # optional
    solver:     {scheme: newmark_avg_accel, dt: 0.004, t_end: 10.0,
                 choice: direct, full_state_stride: 0}
    probes:     [50, 350]
    outputs:    out/
    seed:       0
    sweep:      {carriers: [2, 4, 8], probe_pair: [50, 350], form: pure}
    dispersion: {free_decay_modes: 5}

Validation errors name the offending field (``physics.damping.kind``).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import analysis, fem, modal
from .damping import DampingSpec, build_damping_matrix
from .errors import InsufficientSignal, InvalidArgument
from .integrator import (SCHEMES, Excitation, SolverConfig, ToneBurst, excitation_signal, integrate,
                         integrate_many, make_signal)
from .trajectory import Trajectory

SOLVER_CHOICES = ("direct", "modal", "both")
MIN_ELEMENTS_PER_WAVELENGTH = 10


class ConfigError(InvalidArgument):
    pass


@dataclass
class Scenario:
    mesh: fem.Mesh
    c: float
    damping: DampingSpec
    signal: object | None
    source_node: int | None
    scheme: str = "newmark_avg_accel"
    dt: float | None = None
    t_end: float | None = None
    solver_choice: str = "direct"
    probes: list[int] = field(default_factory=list)
    outputs: str = "out"
    seed: int = 0
    initial_mode: int | None = None
    initial_amplitude: float = 1.0
    full_state_stride: int = 0
    sweep: dict = field(default_factory=dict)
    dispersion: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _get(d, key, path, kind=None, required=True, default=None):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected a mapping")
    if key not in d or d[key] is None:
        if required:
            raise ConfigError(f"{path}.{key}: missing required field".lstrip("."))
        return default
    v = d[key]
    where = f"{path}.{key}".lstrip(".")
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {v!r}")
        v = float(v)
        if not np.isfinite(v):
            raise ConfigError(f"{where}: must be finite")
    elif kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{where}: expected an integer, got {v!r}")
    elif kind is str:
        if not isinstance(v, str):
            raise ConfigError(f"{where}: expected a string, got {v!r}")
    elif kind is list:
        if not isinstance(v, list):
            raise ConfigError(f"{where}: expected a list, got {v!r}")
    elif kind is dict:
        if not isinstance(v, dict):
            raise ConfigError(f"{where}: expected a mapping, got {v!r}")
    return v


def _wrap(path, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except InvalidArgument as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith(path) else f"{path}: {msg}") from None


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"cannot parse {path}{where}: {getattr(exc, 'problem', exc)}") from None
    return scenario_from_dict(data)


def scenario_from_dict(data) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigError("scenario: top level must be a mapping")
    raw = copy.deepcopy(data)

    m = _get(data, "mesh", "", dict)
    boundary = _get(m, "boundary", "mesh", list, required=False, default=["fixed", "fixed"])
    mesh = _wrap("mesh", fem.build_uniform_mesh, _get(m, "length", "mesh", float),
                 _get(m, "n_elements", "mesh", int), boundary)

    phys = _get(data, "physics", "", dict)
    c = _get(phys, "c", "physics", float)
    if c <= 0:
        raise ConfigError("physics.c: wave speed must be positive")
    damp = _get(phys, "damping", "physics", dict)
    if "kind" not in damp:
        raise ConfigError("physics.damping.kind: missing required field")
    spec = _wrap("physics.damping", DampingSpec.from_dict, damp)

    exc = _get(data, "excitation", "", dict, required=False, default={"kind": "none"})
    kind = _get(exc, "kind", "excitation", str)
    signal, source_node = None, None
    if kind != "none":
        params = _get(exc, "parameters", "excitation", dict, required=False, default={})
        signal = _wrap("excitation.parameters", make_signal, kind, **params)
        source_node = _get(exc, "source_node", "excitation", int)
        if not 0 <= source_node < mesh.n_nodes:
            raise ConfigError(f"excitation.source_node: node {source_node} outside mesh 0..{mesh.n_nodes - 1}")
    if spec.kind == "single_freq":
        if not isinstance(signal, ToneBurst):
            raise ConfigError("physics.damping.kind: single_freq damping only applies to a tone_burst excitation")
        spec = replace(spec, f=signal.f)

    s = _get(data, "solver", "", dict, required=False, default={})
    choice = _get(s, "choice", "solver", str, required=False, default="direct")
    if choice not in SOLVER_CHOICES:
        raise ConfigError(f"solver.choice: expected one of {SOLVER_CHOICES}, got {choice!r}")
    scheme = _get(s, "scheme", "solver", str, required=False, default="newmark_avg_accel")
    if scheme not in SCHEMES:
        raise ConfigError(f"solver.scheme: expected one of {SCHEMES}, got {scheme!r}")
    dt = _get(s, "dt", "solver", float, required=False, default=None)
    t_end = _get(s, "t_end", "solver", float, required=False, default=None)
    if dt is not None and dt <= 0:
        raise ConfigError("solver.dt: must be positive")
    if t_end is not None:
        if t_end <= 0:
            raise ConfigError("solver.t_end: must be positive")
        if dt is not None and dt > t_end:
            raise ConfigError(f"solver.dt: dt={dt} exceeds t_end={t_end}")
    stride = _get(s, "full_state_stride", "solver", int, required=False, default=0)
    if stride < 0:
        raise ConfigError("solver.full_state_stride: must be >= 0")

    probes = _get(data, "probes", "", list, required=False, default=[])
    for i, p in enumerate(probes):
        if isinstance(p, bool) or not isinstance(p, int) or not 0 <= p < mesh.n_nodes:
            raise ConfigError(f"probes[{i}]: {p!r} is not a node index in 0..{mesh.n_nodes - 1}")

    init = _get(data, "initial", "", dict, required=False, default={})
    mode = _get(init, "mode", "initial", int, required=False, default=None)
    if mode is not None and mode < 1:
        raise ConfigError("initial.mode: modes are numbered from 1")
    amp = _get(init, "amplitude", "initial", float, required=False, default=1.0)

    sweep = _get(data, "sweep", "", dict, required=False, default={})
    disp = _get(data, "dispersion", "", dict, required=False, default={})

    return Scenario(
        mesh=mesh, c=c, damping=spec, signal=signal, source_node=source_node, scheme=scheme, dt=dt,
        t_end=t_end, solver_choice=choice, probes=list(probes),
        outputs=str(_get(data, "outputs", "", str, required=False, default="out")),
        seed=_get(data, "seed", "", int, required=False, default=0),
        initial_mode=mode, initial_amplitude=amp, full_state_stride=stride,
        sweep=sweep, dispersion=disp, raw=raw,
    )


# -- drivers --------------------------------------------------------------------


@dataclass
class Prepared:
    system: fem.AssembledSystem
    D: np.ndarray
    basis: modal.ModalBasis | None = None

    def get_basis(self):
        if self.basis is None:
            self.basis = modal.eigendecompose(self.system.K)
        return self.basis


def prepare(sc: Scenario, spec: DampingSpec | None = None) -> Prepared:
    system = fem.assemble(sc.mesh)
    D = build_damping_matrix(system.K, spec or sc.damping, sc.c)
    return Prepared(system, D)


def solver_config(sc: Scenario, t_end: float | None = None) -> SolverConfig:
    """SolverConfig from the scenario; ``t_end`` fills in when the file omits it."""
    if sc.dt is None:
        raise ConfigError("solver.dt: missing required field")
    t_end = sc.t_end if sc.t_end is not None else t_end
    if t_end is None:
        raise ConfigError("solver.t_end: missing required field")
    return _wrap("solver", SolverConfig, sc.scheme, sc.dt, t_end, sc.c)


def _initial(sc: Scenario, prep: Prepared):
    if sc.initial_mode is None:
        return None
    basis = prep.get_basis()
    if sc.initial_mode > basis.n_modes:
        raise ConfigError(f"initial.mode: only {basis.n_modes} modes exist")
    return sc.initial_amplitude * basis.Phi[:, sc.initial_mode - 1].copy()


def _probe_dofs(sc: Scenario, system, probes=None):
    probes = sc.probes if probes is None else probes
    return [_wrap("probes", system.dof_of, p) for p in probes]


def _source(sc: Scenario, system, signal=None):
    signal = signal or sc.signal
    if signal is None:
        return None
    load = _wrap("excitation.source_node", fem.point_source_vector, system, sc.source_node)
    return Excitation(load, signal)


def run_simulation(sc: Scenario, prep: Prepared | None = None) -> dict:
    """Run the scenario with its solver choice; returns {'direct': traj, 'modal': traj, ...}."""
    cfg = solver_config(sc)
    prep = prep or prepare(sc)
    system = prep.system
    dofs = _probe_dofs(sc, system)
    src = _source(sc, system)
    p0 = _initial(sc, prep)
    out = {}
    if sc.solver_choice in ("direct", "both"):
        out["direct"] = integrate(system.K, prep.D, src, cfg, p0, None, probes=dofs, probe_labels=sc.probes,
                                  full_state_stride=sc.full_state_stride, record_energy=True)
    if sc.solver_choice in ("modal", "both"):
        basis = prep.get_basis()
        out["modal"] = _wrap("solver.dt", modal.solve_modal, basis, sc.damping, sc.c, src, cfg.times(), p0,
                             None, probes=dofs, probe_labels=sc.probes,
                             full_state_stride=sc.full_state_stride)
    if "direct" in out and "modal" in out:
        a, b = out["direct"].p, out["modal"].p
        out["rel_l2"] = float(np.linalg.norm(a - b) / np.linalg.norm(b)) if np.any(b) else float(np.linalg.norm(a))
    return out


def energy_drift(traj: Trajectory, signal=None) -> float | None:
    """Relative energy change after the source has switched off (lossless check)."""
    if traj.energy is None:
        return None
    start = 0
    if signal is not None:
        s = np.abs(excitation_signal(signal, traj.times))
        active = np.flatnonzero(s > 1e-14 * max(s.max(), 1e-300))
        start = active[-1] + 1 if active.size else 0
    e = traj.energy[start:]
    if e.size < 2 or e[0] == 0:
        return None
    return float(np.max(np.abs(e - e[0])) / e[0])


@dataclass
class SweepResult:
    samples: list
    fit: analysis.PowerLawFit
    trajectories: list


def sweep_carriers(sc: Scenario, carriers=None) -> list[float]:
    carriers = list(carriers if carriers is not None else sc.sweep.get("carriers", []))
    if len(carriers) < 3:
        raise ConfigError(f"sweep.carriers: need at least 3 carriers, got {len(carriers)}")
    if any(isinstance(f, bool) or not isinstance(f, (int, float)) or not f > 0 for f in carriers):
        raise ConfigError("sweep.carriers: carriers must be positive numbers")
    if len(set(map(float, carriers))) != len(carriers):
        raise ConfigError("sweep.carriers: duplicate carrier frequencies")
    h = sc.mesh.h
    for f in carriers:
        per_wl = sc.c / (f * h)
        if per_wl < MIN_ELEMENTS_PER_WAVELENGTH:
            raise ConfigError(
                f"sweep.carriers: carrier {f} gives {per_wl:.2f} elements per wavelength; the resolution "
                f"rule needs c/(f*h) >= {MIN_ELEMENTS_PER_WAVELENGTH}"
            )
    return [float(f) for f in carriers]


def run_sweep(sc: Scenario, carriers=None, method: str = "envelope") -> SweepResult:
    """One tone-burst run per carrier, attenuation between the probe pair, power-law fit."""
    carriers = sweep_carriers(sc, carriers)
    if not isinstance(sc.signal, ToneBurst):
        raise ConfigError("excitation.kind: sweep needs a tone_burst excitation template")
    if sc.signal.n_cycles < 10:
        raise ConfigError(
            f"excitation.parameters.n_cycles: sweep bursts need >= 10 cycles, got {sc.signal.n_cycles}")
    pair = sc.sweep.get("probe_pair", sc.probes[:2])
    if len(pair) != 2:
        raise ConfigError("sweep.probe_pair: need two probe nodes")
    form = sc.sweep.get("form", "two_term" if sc.damping.kind == "two_term" else "pure")
    if form not in ("pure", "two_term"):
        raise ConfigError(f"sweep.form: expected 'pure' or 'two_term', got {form!r}")
    signals = [replace(sc.signal, f=f) for f in carriers]
    windows = [
        _wrap("sweep", analysis.validity_window, sc.mesh, sc.c, sc.source_node, pair, s.t_stop)
        for s in signals
    ]
    cfg = solver_config(sc, t_end=max(w[1] for w in windows))

    system = fem.assemble(sc.mesh)
    dofs = _probe_dofs(sc, system, pair)
    trajs = []
    if sc.damping.kind == "single_freq":
        groups = [([i], replace(sc.damping, f=f)) for i, f in enumerate(carriers)]
    else:
        groups = [(list(range(len(carriers))), sc.damping)]
    by_index = {}
    for idx, spec in groups:
        prep = Prepared(system, build_damping_matrix(system.K, spec, sc.c))
        sources = [_source(sc, system, signals[i]) for i in idx]
        if sc.solver_choice == "modal":
            basis = prep.get_basis()
            res = [_wrap("solver.dt", modal.solve_modal, basis, spec, sc.c, s, cfg.times(), probes=dofs,
                         probe_labels=pair) for s in sources]
        else:
            res = integrate_many(system.K, prep.D, sources, cfg, probes=dofs, probe_labels=pair)
        by_index.update(zip(idx, res))
    trajs = [by_index[i] for i in range(len(carriers))]
    samples = [
        _wrap("sweep", analysis.measure_attenuation, tr, f, pair, sc.mesh, c=sc.c, window=w, method=method)
        for tr, f, w in zip(trajs, carriers, windows)
    ]
    fit = analysis.fit_power_law(samples, form)
    return SweepResult(samples, fit, trajs)


@dataclass
class FreeDecayRow:
    mode: int
    omega: float
    regime: str
    predicted: float | None
    measured: float | None

    @property
    def rel_error(self):
        if self.predicted is None or self.measured is None:
            return None
        return abs(self.measured - self.predicted) / self.predicted


FREE_DECAY_HEADER = "mode,omega,regime,predicted_damped_freq,measured_damped_freq,rel_error"


def free_decay_check(sc: Scenario, n_modes: int, prep: Prepared | None = None) -> list[FreeDecayRow]:
    """Direct free-decay runs started on each of the lowest ``n_modes`` modes.

    The damped angular frequency measured from each run is set against the
    modal prediction c*omega*sqrt(1 - zeta^2).
    """
    cfg = solver_config(sc)
    prep = prep or prepare(sc)
    basis = prep.get_basis()
    modes = [k for k in range(basis.n_modes) if basis.omegas[k] > 0][:n_modes]
    table = modal.dispersion_curve_for(basis, sc.damping, sc.c)
    p0 = basis.Phi[:, modes]
    trajs = integrate_many(prep.system.K, prep.D, [None] * len(modes), cfg, p0, None, full_state_stride=1)
    rows = []
    for k, tr in zip(modes, trajs):
        row = table[k]
        try:
            measured = analysis.measure_damped_frequency(tr, basis.Phi[:, k])
        except InsufficientSignal:
            measured = None
        rows.append(FreeDecayRow(k + 1, row.omega, row.regime, row.damped_freq, measured))
    return rows
