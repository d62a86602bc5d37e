import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from ddstl.cli import run
from ddstl.lti import read_series_csv, read_trajectory_csv
from ddstl.report import load_schema

SPEC = "G[2,4] (y1 >= 0.5 and y1 <= 1)"


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run(["generate", "--system", "car", "--steps", "200", "--seed", "7", "--box", "-2,2",
                "--out", str(d / "data.csv")]) == 0
    (d / "init.csv").write_text("t,u1,y1\n-3,0,0\n-2,0,0\n-1,0,0\n")
    (d / "spec.stl").write_text(SPEC + "\n")
    return d


def _synth(files, out, *extra):
    return run(["synthesize", "--data", str(files / "data.csv"), "--init", str(files / "init.csv"),
                "--spec", str(files / "spec.stl"), "--tini", "3", "--box", "-2,2", "--nx-bound", "3",
                "--out-dir", str(out), *extra])


def test_generate_is_deterministic(files, tmp_path):
    run(["generate", "--system", "car", "--steps", "200", "--seed", "7", "--box", "-2,2",
         "--out", str(tmp_path / "again.csv")])
    assert (tmp_path / "again.csv").read_text() == (files / "data.csv").read_text()
    data = read_trajectory_csv(files / "data.csv")
    assert data.length == 200 and np.all(np.abs(data.u) <= 2)


def test_generate_building_has_disturbances(tmp_path):
    assert run(["generate", "--system", "building", "--steps", "30", "--seed", "1", "--box", "0,300",
                "--out", str(tmp_path / "b.csv")]) == 0
    assert read_trajectory_csv(tmp_path / "b.csv").n_d == 7


def test_synthesize_then_verify(files, tmp_path):
    out = tmp_path / "run"
    assert _synth(files, out, "--system", "car", "--export-lp", str(tmp_path / "a.lp")) == 0
    rep = json.loads((out / "report.json").read_text())
    jsonschema.validate(rep, load_schema())
    assert rep["verdict"] == "Satisfied" and rep["status"] == "optimal" and rep["L"] == 4
    assert rep["max_prediction_error"] < 1e-6
    assert set(rep["files"]) == {"u_opt", "y_pred", "y_closed_loop", "plot", "init"}
    y = read_series_csv(out / "y_pred.csv")["y1"]
    assert np.all((y[2:5] >= 0.5) & (y[2:5] <= 1))
    code = run(["verify", "--system", "car", "--init", str(out / "init.csv"), "--inputs", str(out / "u_opt.csv"),
                "--spec", str(files / "spec.stl"), "--out", str(tmp_path / "y.csv")])
    assert code == 0
    np.testing.assert_allclose(read_series_csv(tmp_path / "y.csv")["y1"], y, atol=1e-6)

    assert run(["export-lp", "--data", str(files / "data.csv"), "--init", str(files / "init.csv"),
                "--spec", str(files / "spec.stl"), "--tini", "3", "--box", "-2,2", "--nx-bound", "3",
                "--out", str(tmp_path / "b.lp")]) == 0
    assert (tmp_path / "a.lp").read_text() == (tmp_path / "b.lp").read_text()


def test_verify_reports_violation(files, tmp_path, capsys):
    (tmp_path / "u.csv").write_text("t,u1\n" + "".join(f"{t},0\n" for t in range(5)))
    code = run(["verify", "--system", "car", "--init", str(files / "init.csv"), "--inputs", str(tmp_path / "u.csv"),
                "--spec", str(files / "spec.stl")])
    assert code == 1
    assert "Violated t_fail=2" in capsys.readouterr().out


def test_infeasible_exit_code(files, tmp_path):
    (tmp_path / "bad.stl").write_text("G[0,3] y1 > 1000000\n")
    out = tmp_path / "inf"
    code = run(["synthesize", "--data", str(files / "data.csv"), "--init", str(files / "init.csv"),
                "--spec", str(tmp_path / "bad.stl"), "--tini", "3", "--box", "-2,2", "--out-dir", str(out)])
    assert code == 1
    rep = json.loads((out / "report.json").read_text())
    assert rep["verdict"] == "Infeasible" and rep["objective"] is None


def test_usage_errors(files, tmp_path, caplog):
    (tmp_path / "syntax.stl").write_text("G[0,3] (y1 > \n")
    code = run(["synthesize", "--data", str(files / "data.csv"), "--init", str(files / "init.csv"),
                "--spec", str(tmp_path / "syntax.stl"), "--tini", "3", "--out-dir", str(tmp_path / "o")])
    assert code == 2 and "line" in caplog.text
    assert _synth(files, tmp_path / "o", "--tini", "4") == 2
    assert run(["synthesize"]) == 2
    assert run(["bogus"]) == 2
    assert _synth(files, tmp_path / "o", "--q", "1") == 2


def test_missing_file_exit_code(files, tmp_path):
    code = run(["synthesize", "--data", str(tmp_path / "nope.csv"), "--init", str(files / "init.csv"),
                "--spec", str(files / "spec.stl"), "--tini", "3", "--out-dir", str(tmp_path / "o")])
    assert code == 3


def test_far_initialization_rejected(files, tmp_path):
    (tmp_path / "far.csv").write_text("t,u1,y1\n-3,0,0\n-2,0,0\n-1,0,5\n")
    code = run(["synthesize", "--data", str(files / "data.csv"), "--init", str(tmp_path / "far.csv"),
                "--spec", str(files / "spec.stl"), "--tini", "3", "--out-dir", str(tmp_path / "o")])
    assert code == 1


def test_config_file(files, tmp_path):
    (tmp_path / "cfg.ini").write_text("milp.big_m = 5000\nsolver.node_limit = 5000\n")
    out = tmp_path / "c"
    assert _synth(files, out, "--config", str(tmp_path / "cfg.ini")) == 0
    assert json.loads((out / "report.json").read_text())["encoding"]["big_m"] == 5000
    (tmp_path / "bad.ini").write_text("milp.nope = 1\n")
    assert _synth(files, tmp_path / "d", "--config", str(tmp_path / "bad.ini")) == 2


def test_reproduce_scenario_one(tmp_path):
    out = tmp_path / "s1"
    assert run(["reproduce", "scenario1", "--out-dir", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    jsonschema.validate(rep, load_schema())
    assert rep["verdict"] == "Satisfied" and rep["scenario"] == "scenario1"
    assert 0 < rep["initialization"]["projection_distance"] < 1e-4
    plot = read_series_csv(out / "plot.csv")
    assert np.all(plot["spec_band_low"][5:11] == 2)
    assert (out / "data.csv").exists() and (out / "init.csv").exists()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ddstl", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("generate", "synthesize", "verify", "reproduce", "export-lp"):
        assert cmd in proc.stdout
