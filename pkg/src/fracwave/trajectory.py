"""Solver output container and its CSV/JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class Trajectory:
    times: np.ndarray
    probes: list[int]
    p: np.ndarray  # (n_times, n_probes)
    pdot: np.ndarray
    full_state_stride: int = 0
    full_states: np.ndarray | None = None  # (n_kept, n_dofs), rows at times[::stride]
    energy: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def full_times(self) -> np.ndarray:
        if not self.full_state_stride:
            return np.empty(0)
        return self.times[:: self.full_state_stride]

    def probe(self, node: int) -> np.ndarray:
        return self.p[:, self.probes.index(node)]

    def probe_velocity(self, node: int) -> np.ndarray:
        return self.pdot[:, self.probes.index(node)]


def fmt(x) -> str:
    """Shortest round-trip float text, so identical runs give identical bytes."""
    if x is None:
        return ""
    if isinstance(x, (str, bool)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def rows_to_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def trajectory_header(traj: Trajectory) -> list[str]:
    cols = ["t"]
    for i in traj.probes:
        cols += [f"probe_{i}_p", f"probe_{i}_v"]
    return cols


def write_trajectory(traj: Trajectory, path, metadata: dict | None = None) -> tuple[Path, Path]:
    """Write ``<path>`` as CSV and ``<path>`` with a .json suffix as the sidecar record."""
    path = Path(path)
    interleaved = np.empty((len(traj.times), 2 * len(traj.probes)))
    interleaved[:, 0::2] = traj.p
    interleaved[:, 1::2] = traj.pdot
    rows = (
        [t, *vals] for t, vals in zip(traj.times, interleaved)
    )
    csv_path = atomic_write_text(path, rows_to_csv(trajectory_header(traj), rows))
    side = dict(metadata or {})
    side.setdefault("probes", list(map(int, traj.probes)))
    side.setdefault("n_times", int(len(traj.times)))
    json_path = atomic_write_text(path.with_suffix(".json"), json.dumps(side, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def read_trajectory(path) -> Trajectory:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    probes = [int(h.split("_")[1]) for h in header[1::2]]
    data = data.reshape(-1, len(header))
    return Trajectory(data[:, 0], probes, data[:, 1::2], data[:, 2::2])
