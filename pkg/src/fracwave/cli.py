"""Command-line front end.

Exit codes: 0 success, 2 configuration or validation error, 3 numeric
failure.  Every run writes ``manifest.json`` into the output directory,
listing each file it produced with a SHA-256 checksum.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__, analysis, matfun, modal
from .errors import (ConvergenceFailure, DegenerateSignal, InsufficientSignal, InvalidArgument,
                     InvalidMatrix, InvalidWindow, NumericFailure)
from .scenario import (FREE_DECAY_HEADER, ConfigError, free_decay_check, load_scenario, prepare,
                       run_simulation, run_sweep)
from .scenario import energy_drift as _energy_drift
from .trajectory import atomic_write_text, rows_to_csv, write_trajectory

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _Run:
    """Collects output files and results for the manifest."""

    def __init__(self, command, out_dir, seed, scenario_echo=None):
        self.command = command
        self.out = Path(out_dir)
        self.seed = seed
        self.scenario = scenario_echo
        self.files = []
        self.results = {}
        self.t0 = time.perf_counter()

    def write(self, name, text):
        path = atomic_write_text(self.out / name, text)
        self.files.append(path)
        return path

    def add(self, *paths):
        self.files.extend(Path(p) for p in paths)

    def finish(self):
        entries = []
        for p in self.files:
            data = p.read_bytes()
            entries.append({"path": p.name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()})
        manifest = {
            "command": self.command,
            "scenario": self.scenario,
            "seed": self.seed,
            "versions": {
                "fracwave": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "results": self.results,
            "timings": {"wall_seconds": time.perf_counter() - self.t0},
            "files": entries,
        }
        atomic_write_text(self.out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _scenario(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    path = Path(args.config)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    sc = load_scenario(path)
    raw = dict(sc.raw)
    if args.solver:
        sc = replace(sc, solver_choice=args.solver)
        raw.setdefault("solver", {})
        raw["solver"] = {**raw["solver"], "choice": args.solver}
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
        raw["seed"] = args.seed
    out = args.out or sc.outputs
    raw["outputs"] = str(out)
    return replace(sc, raw=raw, outputs=str(out))


def _metadata(sc, solver_name):
    return {
        "mesh": {"length": sc.mesh.length, "n_elements": sc.mesh.n_elements, "boundary": list(sc.mesh.boundary)},
        "c": sc.c,
        "damping": sc.damping.as_dict(),
        "solver": {"scheme": sc.scheme if solver_name == "direct" else "modal", "dt": sc.dt, "t_end": sc.t_end},
        "excitation": None if sc.signal is None else {"kind": sc.signal.kind, **vars(sc.signal),
                                                      "source_node": sc.source_node},
        "seed": sc.seed,
    }


def cmd_simulate(args):
    sc = _scenario(args)
    run = _Run("simulate", sc.outputs, sc.seed, sc.raw)
    res = run_simulation(sc)
    for name in ("direct", "modal"):
        if name in res:
            run.add(*write_trajectory(res[name], run.out / f"trajectory_{name}.csv", _metadata(sc, name)))
    if "direct" in res:
        tr = res["direct"]
        run.results["energy_drift"] = _energy_drift(tr, sc.signal)
        steps = np.diff(tr.energy)
        run.results["max_energy_increase"] = float(max(steps.max(initial=0.0), 0.0) / max(tr.energy[0], 1e-300))
    if "rel_l2" in res:
        record = {"rel_l2": res["rel_l2"], "probes": list(sc.probes), "reference": "modal"}
        run.write("comparison.json", json.dumps(record, indent=2, sort_keys=True) + "\n")
        run.results["rel_l2_direct_vs_modal"] = res["rel_l2"]
    run.finish()


def cmd_sweep(args):
    sc = _scenario(args)
    carriers = None
    if args.carriers:
        carriers = _float_list(args.carriers, "--carriers")
    run = _Run("sweep", sc.outputs, sc.seed, sc.raw)
    res = run_sweep(sc, carriers)
    run.write("samples.csv", rows_to_csv(analysis.SAMPLES_HEADER.split(","), [s.row() for s in res.samples]))
    run.write("fit_report.csv", rows_to_csv(analysis.FIT_HEADER.split(","), [res.fit.row()]))
    run.results["fit"] = dict(zip(analysis.FIT_HEADER.split(","), res.fit.row()))
    run.finish()


def cmd_dispersion(args):
    sc = _scenario(args)
    run = _Run("dispersion", sc.outputs, sc.seed, sc.raw)
    prep = prepare(sc)
    table = modal.dispersion_curve_for(prep.get_basis(), sc.damping, sc.c)
    run.write("dispersion.csv", rows_to_csv(
        modal.DISPERSION_HEADER.split(","),
        [(r.omega, r.zeta, r.regime, r.damped_freq, r.phase_velocity) for r in table]))
    m = sc.dispersion.get("free_decay_modes", 0)
    if isinstance(m, bool) or not isinstance(m, int) or m < 0:
        raise ConfigError(f"dispersion.free_decay_modes: expected a nonnegative integer, got {m!r}")
    if m:
        rows = free_decay_check(sc, m, prep)
        run.write("free_decay.csv", rows_to_csv(
            FREE_DECAY_HEADER.split(","),
            [(r.mode, r.omega, r.regime, r.predicted, r.measured, r.rel_error) for r in rows]))
        errs = [r.rel_error for r in rows if r.rel_error is not None]
        run.results["max_rel_error_damped_freq"] = max(errs) if errs else None
    run.finish()


def cmd_matpow_bench(args):
    sizes = [int(v) for v in _float_list(args.sizes, "--sizes")]
    if args.reps < 1:
        raise ConfigError(f"--reps: must be >= 1, got {args.reps}")
    if not 0 <= args.p <= 1:
        raise ConfigError(f"--p: must lie in [0, 1], got {args.p}")
    seed = 0 if args.seed is None else args.seed
    run = _Run("matpow-bench", args.out or "out", seed,
               {"sizes": sizes, "p": args.p, "reps": args.reps, "seed": seed})
    rows = matfun.benchmark_power_methods(sizes, args.p, args.reps, seed=seed)
    run.write("matpow_bench.csv", rows_to_csv(
        matfun.BENCH_HEADER.split(","), [(r.n, r.method, r.p, r.median_seconds, r.residual) for r in rows]))
    run.results["max_residual"] = max((r.residual for r in rows), default=None)
    run.finish()


def cmd_fit(args):
    if not args.samples:
        raise ConfigError("--samples is required")
    path = Path(args.samples)
    if not path.is_file():
        raise ConfigError(f"samples file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"omega", "alpha"} - set(reader.fieldnames or [])
        if missing:
            raise ConfigError(f"{path}: missing column(s) {sorted(missing)}")
        try:
            rows = [(float(r["omega"]), float(r["alpha"])) for r in reader]
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    w, a = (np.array(col) for col in zip(*rows)) if rows else (np.empty(0), np.empty(0))
    fit = analysis.fit_power_law_arrays(w, a, args.form)
    run = _Run("fit", args.out or "out", args.seed, {"samples": str(path), "form": args.form})
    run.write("fit_report.csv", rows_to_csv(analysis.FIT_HEADER.split(","), [fit.row()]))
    run.results["fit"] = dict(zip(analysis.FIT_HEADER.split(","), fit.row()))
    run.finish()


def _float_list(text, flag):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{flag}: expected comma-separated numbers, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="fracwave", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario YAML file")
    common.add_argument("--out", help="output directory (overrides scenario 'outputs')")
    common.add_argument("--seed", type=int, help="seed recorded in outputs (overrides scenario 'seed')")
    common.add_argument("--solver", choices=("direct", "modal", "both"), help="override solver.choice")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run one scenario")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("sweep", parents=[common], help="tone-burst carrier sweep and power-law fit")
    p.add_argument("--carriers", help="comma-separated carrier frequencies (overrides sweep.carriers)")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("dispersion", parents=[common], help="modal dispersion table and free-decay check")
    p.set_defaults(func=cmd_dispersion)
    p = sub.add_parser("matpow-bench", parents=[common], help="time the matrix-power routes")
    p.add_argument("--sizes", default="64,128,256")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--reps", type=int, default=3)
    p.set_defaults(func=cmd_matpow_bench)
    p = sub.add_parser("fit", parents=[common], help="fit a power law to an existing samples CSV")
    p.add_argument("--samples", help="CSV with columns f,omega,x1,x2,ratio,alpha")
    p.add_argument("--form", choices=("pure", "two_term"), default="pure")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (InvalidArgument, InvalidWindow) as exc:
        print(f"fracwave {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, ConvergenceFailure, InvalidMatrix, DegenerateSignal, InsufficientSignal,
            FloatingPointError, OverflowError, np.linalg.LinAlgError) as exc:
        print(f"fracwave {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
