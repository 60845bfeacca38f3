import csv
import hashlib
import json

import numpy as np
import pytest
import yaml

from fracwave import cli
from fracwave.errors import InvalidArgument
from fracwave.scenario import (ConfigError, energy_drift, free_decay_check, load_scenario, run_simulation,
                               run_sweep, scenario_from_dict, sweep_carriers)
from fracwave.trajectory import Trajectory, read_trajectory, rows_to_csv, write_trajectory

BASE = {
    "mesh": {"length": 1.0, "n_elements": 60, "boundary": ["fixed", "fixed"]},
    "physics": {"c": 1.0, "damping": {"kind": "fractional", "alpha0": 0.02, "y": 1.3}},
    "excitation": {"kind": "gaussian_pulse", "source_node": 20, "parameters": {"t0": 0.2, "sigma": 0.05}},
    "solver": {"scheme": "newmark_avg_accel", "dt": 0.002, "t_end": 0.5, "choice": "both"},
    "probes": [10, 40],
    "seed": 7,
}


def scenario(**overrides):
    d = json.loads(json.dumps(BASE))
    for path, value in overrides.items():
        node = d
        *head, last = path.split(".")
        for k in head:
            node = node.setdefault(k, {})
        if value is None:
            node.pop(last, None)
        else:
            node[last] = value
    return d


def write_yaml(tmp_path, data, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


class TestScenarioParsing:
    def test_valid(self):
        sc = scenario_from_dict(scenario())
        assert sc.mesh.n_elements == 60
        assert sc.damping.y == 1.3
        assert sc.signal.sigma == 0.05
        assert sc.solver_choice == "both"

    @pytest.mark.parametrize("path,value,field", [
        ("physics.damping.kind", None, "physics.damping.kind"),
        ("physics.c", "fast", "physics.c"),
        ("mesh.n_elements", None, "mesh.n_elements"),
        ("solver.choice", "sideways", "solver.choice"),
        ("solver.scheme", "rk4", "solver.scheme"),
        ("excitation.kind", "chirp", "excitation"),
        ("probes", [10, 99], "probes"),
    ])
    def test_errors_name_the_field(self, path, value, field):
        with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
            sc = scenario_from_dict(scenario(**{path: value}))
            run_simulation(sc)

    def test_config_error_is_invalid_argument(self):
        assert issubclass(ConfigError, InvalidArgument)

    def test_yaml_syntax_error_has_position(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("mesh: {length: 1.0\nphysics: [")
        with pytest.raises(ConfigError, match="line"):
            load_scenario(path)

    def test_single_freq_takes_carrier(self):
        d = scenario(**{"physics.damping": {"kind": "single_freq", "alpha0": 0.1, "y": 1.0},
                        "excitation": {"kind": "tone_burst", "source_node": 5,
                                       "parameters": {"f": 3.0, "n_cycles": 4}}})
        assert scenario_from_dict(d).damping.f == 3.0

    def test_sweep_needs_long_bursts(self):
        d = scenario(excitation={"kind": "tone_burst", "source_node": 0,
                                 "parameters": {"f": 1.0, "n_cycles": 5}})
        d["mesh"]["boundary"] = ["free", "fixed"]
        with pytest.raises(ConfigError, match="n_cycles"):
            run_sweep(scenario_from_dict(d), [0.5, 1.0, 1.5])

    def test_sweep_resolution_rule(self):
        sc = scenario_from_dict(scenario())
        with pytest.raises(ConfigError, match="elements per wavelength"):
            sweep_carriers(sc, [1.0, 2.0, 10.0])
        with pytest.raises(ConfigError, match="at least 3"):
            sweep_carriers(sc, [1.0, 2.0])


class TestRunners:
    def test_both_solvers_agree(self):
        res = run_simulation(scenario_from_dict(scenario()))
        assert res["rel_l2"] < 1e-3
        assert res["direct"].probes == [10, 40]

    def test_lossless_energy_drift(self):
        sc = scenario_from_dict(scenario(**{"physics.damping": {"kind": "fractional", "alpha0": 0.0, "y": 1.0},
                                            "solver.choice": "direct", "solver.t_end": 1.0}))
        tr = run_simulation(sc)["direct"]
        assert energy_drift(tr, sc.signal) < 1e-12

    def test_free_decay_rows(self):
        sc = scenario_from_dict(scenario(**{"excitation": None, "solver.t_end": 6.0,
                                            "physics.damping.alpha0": 0.05}))
        rows = free_decay_check(sc, 2)
        assert [r.mode for r in rows] == [1, 2]
        assert all(r.rel_error < 1e-3 for r in rows)


class TestTrajectoryIO:
    def test_round_trip(self, tmp_path):
        t = np.linspace(0, 1, 5)
        tr = Trajectory(t, [3, 8], np.random.default_rng(0).standard_normal((5, 2)), np.ones((5, 2)) / 3)
        csv_path, json_path = write_trajectory(tr, tmp_path / "traj.csv", {"seed": 1})
        back = read_trajectory(csv_path)
        assert back.probes == [3, 8]
        np.testing.assert_array_equal(back.p, tr.p)
        np.testing.assert_array_equal(back.pdot, tr.pdot)
        assert json.loads(json_path.read_text())["seed"] == 1

    def test_csv_is_lf_terminated(self):
        assert rows_to_csv(["a", "b"], [(1, 0.1)]) == "a,b\n1,0.1\n"


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


class TestCli:
    def test_simulate_outputs_and_manifest(self, tmp_path):
        out = tmp_path / "out"
        assert run_cli("simulate", "--config", write_yaml(tmp_path, scenario()), "--out", out) == 0
        names = {p.name for p in out.iterdir()}
        assert {"trajectory_direct.csv", "trajectory_modal.csv", "comparison.json", "manifest.json"} <= names
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 7
        for entry in manifest["files"]:
            assert hashlib.sha256((out / entry["path"]).read_bytes()).hexdigest() == entry["sha256"]
        assert manifest["results"]["rel_l2_direct_vs_modal"] < 1e-3

    def test_seed_and_solver_overrides(self, tmp_path):
        out = tmp_path / "out"
        assert run_cli("simulate", "--config", write_yaml(tmp_path, scenario()), "--out", out,
                       "--seed", 11, "--solver", "modal") == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 11
        assert not (out / "trajectory_direct.csv").exists()

    def test_dispersion(self, tmp_path):
        d = scenario(**{"excitation": None, "solver.t_end": 3.0, "dispersion": {"free_decay_modes": 2}})
        out = tmp_path / "out"
        assert run_cli("dispersion", "--config", write_yaml(tmp_path, d), "--out", out) == 0
        rows = list(csv.DictReader((out / "dispersion.csv").open()))
        assert len(rows) == 59 and rows[0]["regime"] == "underdamped"
        assert (out / "free_decay.csv").exists()

    def test_matpow_bench(self, tmp_path):
        assert run_cli("matpow-bench", "--sizes", "8,12", "--reps", 1, "--out", tmp_path) == 0
        rows = list(csv.DictReader((tmp_path / "matpow_bench.csv").open()))
        assert len(rows) == 4

    def test_fit(self, tmp_path):
        w = np.array([1.0, 2.0, 3.0, 5.0])
        path = tmp_path / "samples.csv"
        path.write_text(rows_to_csv(["f", "omega", "x1", "x2", "ratio", "alpha"],
                                    [(x, x, 0, 1, 1, 0.1 * x**1.5) for x in w]))
        assert run_cli("fit", "--samples", path, "--out", tmp_path) == 0
        row = next(csv.DictReader((tmp_path / "fit_report.csv").open()))
        assert float(row["y_hat"]) == pytest.approx(1.5)

    @pytest.mark.parametrize("argv", [
        ("simulate",),
        ("simulate", "--config", "/nonexistent.yaml"),
        ("matpow-bench", "--sizes", "a,b"),
        ("matpow-bench", "--p", "2"),
        ("fit", "--samples", "/nonexistent.csv"),
    ])
    def test_usage_errors_exit_2(self, tmp_path, argv):
        assert run_cli(*argv, "--out", tmp_path) == 2

    def test_bad_field_exit_2(self, tmp_path, capsys):
        path = write_yaml(tmp_path, scenario(**{"physics.damping.kind": "coulomb"}))
        assert run_cli("simulate", "--config", path, "--out", tmp_path / "o") == 2
        assert "physics.damping" in capsys.readouterr().err

    def test_unknown_subcommand_exit_2(self):
        with pytest.raises(SystemExit) as info:
            run_cli("explode")
        assert info.value.code == 2

    def test_numeric_failure_exit_3(self, tmp_path, capsys):
        path = write_yaml(tmp_path, scenario(**{"physics.c": 1e200}))
        assert run_cli("simulate", "--config", path, "--out", tmp_path / "o") == 3
        assert "numeric failure" in capsys.readouterr().err
