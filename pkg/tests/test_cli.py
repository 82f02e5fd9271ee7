import json
from importlib import resources

import pytest

from ltvgain.cli import main
from ltvgain.io import read_signal_csv, load_spec
from ltvgain import forward_gain


def fixture(name):
    return str(resources.files("ltvgain") / "fixtures" / name)


def test_analyze_combined_g1(tmp_path):
    out, dist = tmp_path / "r.json", tmp_path / "d.csv"
    assert main(["analyze", fixture("g1.json"), "--tol", "5e-3", "--out", str(out), "--dist-out", str(dist)]) == 0
    rep = json.loads(out.read_text())
    assert rep["algorithm"] == "combined"
    assert rep["gamma_ub"] - rep["gamma_lb"] <= 5e-3 * (1 + 1e-12)
    assert rep["gamma_lb"] - 5e-3 <= 7.159 <= rep["gamma_ub"] + 5e-3
    sys, _ = load_spec(fixture("g1.json"))
    assert forward_gain(sys, read_signal_csv(dist))[0] >= rep["gamma_lb"] - 10 * 5e-3


def test_analyze_bisect_sine_ltv(capsys):
    assert main(["analyze", fixture("sine_ltv.json"), "--algo", "bisect", "--tol", "0.01"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert 9 <= rep["rde_solves"] <= 11
    assert rep["gamma_lb"] == pytest.approx(1.799, abs=0.01)
    assert rep["gamma_ub"] == pytest.approx(1.809, abs=0.01)


def test_analyze_power_reports_no_upper_bound(capsys):
    assert main(["analyze", fixture("g1.json"), "--algo", "power", "--tol", "5e-3"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert "gamma_ub" not in rep and rep["power_iterations"] >= 2


def test_analyze_not_converged_exit_code(capsys, monkeypatch):
    import ltvgain.cli as cli
    from ltvgain.combined import combined_gain

    monkeypatch.setattr(cli, "combined_gain", lambda *a, **k: combined_gain(*a, **{**k, "max_outer": 1}))
    assert main(["analyze", fixture("sine_ltv.json"), "--tol", "0.01"]) == 2


def test_analyze_bad_dims_exit_one(tmp_path, capsys):
    doc = json.loads(open(fixture("g1.json")).read())
    doc["dims"]["n_d"] = 2
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["analyze", str(path)]) == 1
    assert "matrices.B" in capsys.readouterr().err


def test_missing_file(capsys):
    assert main(["validate", "/nonexistent/spec.json"]) == 1


def test_l2e_scalar(tmp_path, capsys):
    assert main(["l2e", fixture("scalar.json"), "--tau", "1.0"]) == 0
    tau, gain = capsys.readouterr().out.strip().split(",")
    assert float(gain) == pytest.approx(0.65752, abs=1e-4)


def test_l2e_budget_and_profile(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["l2e", fixture("scalar.json"), "--tau", "0.5,1.0", "--budget", "5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "tau,gain,v1" and len(lines) == 3
    assert float(lines[2].split(",")[1]) == pytest.approx(5 * 0.65752, abs=5e-4)


def test_l2e_integrators_all_taus(tmp_path):
    spec = {
        "horizon": 1.0,
        "dims": {"n_x": 2, "n_d": 2, "n_E": 2},
        "matrices": {
            "A": {"constant": [[0, 0], [0, 0]]},
            "B": {"constant": [[1, 0], [0, 1]]},
            "C_E": {"constant": [[1, 0], [0, 1]]},
        },
        "solver": {"steps": 100},
    }
    path, out = tmp_path / "s.json", tmp_path / "p.csv"
    path.write_text(json.dumps(spec))
    assert main(["l2e", str(path), "--tau", "all", "--out", str(out)]) == 0
    rows = [list(map(float, r.split(","))) for r in out.read_text().splitlines()[1:]]
    assert len(rows) == 101
    assert all(abs(g - tau**0.5) < 1e-12 for tau, g, *_ in rows)


def test_l2e_disturbance_csv(tmp_path):
    dist = tmp_path / "d.csv"
    assert main(["l2e", fixture("scalar.json"), "--tau", "1.0", "--dist-out", str(dist)]) == 0
    assert read_signal_csv(dist).dim == 1


def test_l2e_rejects_l2_channel(capsys):
    assert main(["l2e", fixture("g1.json")]) == 1
    assert "n_I = 0" in capsys.readouterr().err


def test_validate(tmp_path, capsys):
    assert main(["validate", fixture("g2.json")]) == 0
    doc = json.loads(open(fixture("g1.json")).read())
    doc["matrices"]["A"] = {"gridded": {"times": [0, 0, 10], "samples": [[[0, 0], [0, 0]]] * 3}}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["validate", str(path)]) == 1
    assert "times not strictly increasing" in capsys.readouterr().out


def test_bench_smoke(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bench", "--orders", "1", "--samples", "1", "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0].split(",")
    assert header[:4] == ["n_x", "mean_T_RDE", "mean_T_PI", "ratio"] and "mean_T_combined" in header
