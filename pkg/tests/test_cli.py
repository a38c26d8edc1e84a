import json

import numpy as np
import pytest

from ptflow.cli import main
from ptflow.model import Phase, State, speed
from ptflow.output import (
    load_ledger,
    load_snapshot,
    load_spacetime,
    snapshot_times,
)


def test_catalog_command(capsys):
    assert main(["catalog"]) == 0
    out = capsys.readouterr().out
    assert "test1:" in out and "example4:" in out


def test_run_writes_all_files(tmp_path):
    out_dir = tmp_path / "t1"
    assert main(["run", "test1", "--out", str(out_dir)]) == 0
    assert (out_dir / "snapshot_0.csv").is_file()
    assert (out_dir / "snapshot_900.csv").is_file()
    assert (out_dir / "spacetime.csv").is_file()
    assert (out_dir / "ledger.csv").is_file()
    meta = json.loads((out_dir / "meta.json").read_text())
    assert meta["n_cells"] == 400
    assert meta["scenario"]["t_final"] == 900.0
    assert "scenario_sha256" in meta

    snap = load_snapshot(out_dir, 900.0)
    assert snap.x.size == 400
    # emitted speeds are consistent with the state and phase
    from ptflow.model import ModelParams

    p = ModelParams()
    for i in range(0, 400, 37):
        s = State(float(snap.rho[i]), float(snap.q[i]))
        assert snap.v[i] == pytest.approx(
            speed(s, Phase(int(snap.phase[i])), p), rel=1e-12)


def test_run_uniform_ledger_constant(tmp_path):
    out_dir = tmp_path / "uc"
    assert main(["run", "uniform_const", "--out", str(out_dir)]) == 0
    led = load_ledger(out_dir)
    m = np.asarray(led.mass)
    assert np.max(np.abs(m - m[0])) <= 1e-12 * m[0]


def test_run_example2_snapshots(tmp_path):
    out_dir = tmp_path / "ex2"
    assert main(["run", "example2", "--out", str(out_dir),
                 "--trajectories"]) == 0
    assert snapshot_times(out_dir) == [0.0, 50.0, 200.0, 250.0]
    assert (out_dir / "trajectories.csv").is_file()


def test_run_overrides(tmp_path):
    out_dir = tmp_path / "ovr"
    assert main(["run", "test1", "--dx", "400", "--t-final", "100",
                 "--snapshots", "0,100", "--out", str(out_dir)]) == 0
    snap = load_snapshot(out_dir, 100.0)
    assert snap.x.size == 200


def test_run_scenario_file(tmp_path):
    doc = {
        "schema_version": 1,
        "grid": {"x_left": 0.0, "x_right": 8000.0, "n_cells": 40},
        "t_final": 50.0,
        "ic": {"breakpoints": [], "pieces": [
            {"rho": 0.05, "v": 7.941, "phase": "congested"}]},
        "bc_left": {"kind": "free"},
        "bc_right": {"kind": "free"},
        "output": {"snapshots": [50.0]},
    }
    path = tmp_path / "sc.json"
    path.write_text(json.dumps(doc))
    assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 0


def test_exit_codes(tmp_path, capsys):
    assert main(["run", "nope", "--out", str(tmp_path / "x")]) == 3
    assert "scenario error" in capsys.readouterr().err
    assert main(["run", "test1", "--cfl", "1.5",
                 "--out", str(tmp_path / "y")]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["run"])  # missing positional
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_numerics_exit_code(monkeypatch, tmp_path):
    import ptflow.cli as cli
    from ptflow.stepper import NumericsError

    def boom(*a, **k):
        raise NumericsError("synthetic")

    monkeypatch.setattr(cli, "run", boom)
    assert main(["run", "test1", "--out", str(tmp_path / "z")]) == 4


def test_determinism_across_workers(tmp_path):
    dirs = []
    for w in ("1", "2"):
        d = tmp_path / f"w{w}"
        assert main(["run", "test3", "--workers", w, "--out", str(d)]) == 0
        dirs.append(d)
    for name in ("snapshot_900.csv", "spacetime.csv", "ledger.csv"):
        a = (dirs[0] / name).read_bytes()
        b = (dirs[1] / name).read_bytes()
        assert a == b, name


def test_convergence_command(tmp_path, capsys):
    out_dir = tmp_path / "conv"
    assert main(["convergence", "advection_smooth", "--dx-list", "200,100",
                 "--ref-dx", "50", "--out", str(out_dir)]) == 0
    text = (out_dir / "convergence.csv").read_text()
    lines = text.strip().splitlines()
    assert lines[0] == "dx,l1_rho,eoc"
    assert len(lines) == 3


def test_diag_commands(tmp_path, capsys):
    out_dir = tmp_path / "t7"
    assert main(["run", "test7", "--out", str(out_dir)]) == 0
    assert main(["diag", "plateaus", str(out_dir), "--t", "900"]) == 0
    out = capsys.readouterr().out
    assert out.count("rho=") == 3
    assert main(["diag", "front", str(out_dir), "--threshold", "0.1383",
                 "--t-window", "300,900", "--x-window", "39100,42100"]) == 0
    out = capsys.readouterr().out
    assert "front speed" in out


def test_spacetime_round_trip(tmp_path):
    out_dir = tmp_path / "rt"
    assert main(["run", "uniform_const", "--out", str(out_dir)]) == 0
    st = load_spacetime(out_dir)
    assert st.x.size == 100
    assert st.times[0] == 0.0 and st.times[-1] == 100.0
    np.testing.assert_array_equal(st.rho[0], st.rho[-1])
