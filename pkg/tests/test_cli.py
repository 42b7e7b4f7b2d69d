import json
import subprocess
import sys

import numpy as np
import pytest

from entctrl.cli import main

SMALL_CONFIG = {"preset": "paper-sec4", "tf": 0.4, "n_steps": 80,
                "solver": {"max_sweeps": 40}}


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def constant_schedule_doc(tf=0.4, n=80, level=-1.0):
    return {"t0": 0.0, "tf": tf, "n_steps": n,
            "values": [[level] * n, [level] * n, [level] * n]}


def read_csv(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    return header, data


def test_presets_list(capsys):
    assert main(["presets", "list"]) == 0
    out = capsys.readouterr().out
    assert "paper-sec4" in out
    assert "phi_plus" in out


def test_simulate_writes_expected_files(tmp_path):
    cfg = write_json(tmp_path / "config.json", SMALL_CONFIG)
    sched = write_json(tmp_path / "sched.json", constant_schedule_doc())
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--schedule", sched,
                 "--out-dir", str(out), "--quiet"]) == 0
    header, data = read_csv(out / "timeseries.csv")
    assert header == ["t", "u_1", "u_2", "u_3", "concurrence_eq3",
                      "wootters_concurrence", "purity_reduced"]
    assert data.shape[0] == 81
    t = data[:, 0]
    assert np.all(np.diff(t) > 0)
    assert np.max(np.abs(np.diff(t) - 0.005)) < 1e-12
    conc = data[:, 4]
    assert np.all((conc >= 0) & (conc <= 1))
    assert np.all(np.abs(data[:, 1:4]) <= 1.0)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["sweeps_used"] == 0
    assert summary["converged"] is None
    assert summary["config_echo"]["n_steps"] == 80
    assert "out_dir" not in summary["config_echo"]


def test_simulate_zero_length_horizon(tmp_path):
    cfg = write_json(tmp_path / "config.json", SMALL_CONFIG)
    sched = write_json(tmp_path / "sched.json",
                       {"t0": 0.0, "tf": 0.0, "n_steps": 0,
                        "values": [[], [], []]})
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--schedule", sched,
                 "--out-dir", str(out), "--quiet"]) == 0
    header, data = read_csv(out / "timeseries.csv")
    assert data.shape[0] == 1
    # concurrence column equals the initial diagnostic value sqrt(2(1 - 0.99005))
    assert abs(data[0, 4] - np.sqrt(2 * (1 - 0.99005))) < 1e-9


def test_simulate_rejects_out_of_bound_schedule(tmp_path):
    cfg = write_json(tmp_path / "config.json", SMALL_CONFIG)
    sched = write_json(tmp_path / "sched.json", constant_schedule_doc(level=-1.5))
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--schedule", sched,
                 "--out-dir", str(out), "--quiet"]) == 2
    assert not (out / "timeseries.csv").exists()


def test_simulate_rejects_channel_mismatch(tmp_path):
    cfg = write_json(tmp_path / "config.json", SMALL_CONFIG)
    sched = write_json(tmp_path / "sched.json",
                       {"t0": 0.0, "tf": 0.4, "n_steps": 80,
                        "values": [[-1.0] * 80]})
    assert main(["simulate", "--config", cfg, "--schedule", sched,
                 "--out-dir", str(tmp_path / "out"), "--quiet"]) == 2


def test_simulate_rejects_malformed_schedule(tmp_path):
    cfg = write_json(tmp_path / "config.json", SMALL_CONFIG)
    sched = tmp_path / "sched.json"
    sched.write_text("{not json")
    assert main(["simulate", "--config", cfg, "--schedule", str(sched),
                 "--out-dir", str(tmp_path / "out"), "--quiet"]) == 2


def test_optimize_fixed_tf(tmp_path):
    cfg = write_json(tmp_path / "config.json", SMALL_CONFIG)
    out = tmp_path / "out"
    assert main(["optimize", "--config", cfg, "--out-dir", str(out), "--quiet"]) == 0
    header, data = read_csv(out / "timeseries.csv")
    assert header[-3:] == ["phi_1", "phi_2", "phi_3"]
    assert data.shape[0] == 81
    assert set(np.unique(data[:, 1:4])) <= {-1.0, 1.0}
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"] is True
    assert summary["objective"] == pytest.approx(
        -summary["concurrence_final"] + 0.1 * summary["tf"], abs=1e-12)
    hist = summary["objective_history"]
    assert all(a >= b for a, b in zip(hist, hist[1:]))


def test_optimize_cli_overrides_land_in_echo(tmp_path):
    cfg = write_json(tmp_path / "config.json", SMALL_CONFIG)
    out = tmp_path / "out"
    assert main(["optimize", "--config", cfg, "--out-dir", str(out),
                 "--n-steps", "60", "--gamma", "0.2", "--tf", "0.3",
                 "--quiet"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    echo = summary["config_echo"]
    assert echo["n_steps"] == 60
    assert float(echo["gamma"]) == 0.2
    assert float(echo["tf"]) == 0.3
    assert summary["tf"] == 0.3


def test_out_dir_env_and_flag_precedence(tmp_path, monkeypatch):
    cfg = write_json(tmp_path / "config.json", SMALL_CONFIG)
    sched = write_json(tmp_path / "sched.json", constant_schedule_doc())
    env_dir = tmp_path / "env_out"
    monkeypatch.setenv("ENTCTRL_OUT_DIR", str(env_dir))
    assert main(["simulate", "--config", cfg, "--schedule", sched, "--quiet"]) == 0
    assert (env_dir / "summary.json").exists()
    flag_dir = tmp_path / "flag_out"
    assert main(["simulate", "--config", cfg, "--schedule", sched,
                 "--out-dir", str(flag_dir), "--quiet"]) == 0
    assert (flag_dir / "summary.json").exists()


def test_simulate_runs_are_byte_identical(tmp_path):
    cfg = write_json(tmp_path / "config.json", SMALL_CONFIG)
    sched = write_json(tmp_path / "sched.json", constant_schedule_doc())
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--schedule", sched,
                 "--out-dir", str(a), "--quiet"]) == 0
    assert main(["simulate", "--config", cfg, "--schedule", sched,
                 "--out-dir", str(b), "--quiet"]) == 0
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
    assert (a / "timeseries.csv").read_bytes() == (b / "timeseries.csv").read_bytes()


def test_missing_config_returns_error(tmp_path):
    assert main(["optimize", "--config", str(tmp_path / "none.json"),
                 "--quiet"]) == 2


def test_module_entry_point(tmp_path):
    cfg = write_json(tmp_path / "config.json", SMALL_CONFIG)
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "entctrl", "optimize", "--config", cfg,
         "--out-dir", str(out), "--quiet"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "summary.json").exists()
