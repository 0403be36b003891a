"""End-to-end CLI runs: exit codes, artifact schemas, determinism."""

import json
import math

import pytest

from qplab.cli import main

NEAR_RESONANT_CF = [1, 1, 1, 20, 72004899337, 1]


def _write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def _read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    header = body[0].split(",")
    rows = [ln.split(",") for ln in body[1:]]
    return comments, header, rows


# -- exit codes -----------------------------------------------------------------


def test_missing_command_exits_2(capsys):
    assert main([]) == 2
    capsys.readouterr()


def test_version_exits_0(capsys):
    assert main(["--version"]) == 0
    assert "qplab" in capsys.readouterr().out


def test_bad_config_file_exits_2(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["scan-lyapunov", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["scan-lyapunov", "--config", str(tmp_path / "missing.json")]) == 2
    capsys.readouterr()


def test_bad_omega_spec_exits_2(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"model": {"omega": {"unknown": 1}}})
    assert main(["reduce", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    cfg2 = _write_config(tmp_path, {"model": {"omega": {"golden": 40, "cf": [1]}}},
                         name="two-kinds.json")
    assert main(["reduce", "--config", cfg2, "--out", str(tmp_path / "o")]) == 2
    capsys.readouterr()


def test_bad_scan_parameters_exit_2(tmp_path, capsys):
    assert main(["scan-lyapunov", "--E-step", "0", "--out", str(tmp_path / "o")]) == 2
    assert main(["scan-lyapunov", "--workers", "0", "--out", str(tmp_path / "o")]) == 2
    cfg = _write_config(tmp_path, {"seed": -3})
    assert main(["scan-lyapunov", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    capsys.readouterr()


def test_domain_error_exits_3(tmp_path, capsys):
    # conjugation is impossible for a frequency whose beta eats the strip
    cfg = _write_config(tmp_path, {"model": {"omega": {"cf": NEAR_RESONANT_CF}}})
    assert main(["reduce", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    capsys.readouterr()


def test_resource_limit_exits_4(tmp_path, capsys):
    cfg = _write_config(tmp_path, {
        "model": {"omega": {"liouville": {"target_beta": 3.0, "n_terms": 6}}},
        "scan": {"stages": [3]},
    })
    assert main(["gordon-probe", "--config", cfg, "--out", str(tmp_path / "o")]) == 4
    capsys.readouterr()


# -- scan-lyapunov -----------------------------------------------------------------


SCAN_CFG = {
    "model": {"K": 0.0},
    "scan": {"E": {"min": 0.0, "max": 4.0, "step": 1.0}, "n": 3000, "phases": 4},
}


def test_scan_artifacts_and_values(tmp_path):
    cfg = _write_config(tmp_path, SCAN_CFG)
    out = tmp_path / "run"
    assert main(["scan-lyapunov", "--config", cfg, "--out", str(out)]) == 0
    comments, header, rows = _read_csv(out / "lyapunov.csv")
    assert len(comments) == 3
    assert comments[0].startswith("# qplab=")
    assert "config_sha256=" in comments[0]
    assert header == ["E", "omega_id", "K", "n", "phases", "L", "stderr"]
    assert [float(r[0]) for r in rows] == [0.0, 1.0, 2.0, 3.0, 4.0]
    assert all(r[1] == "golden" for r in rows)
    assert all(float(r[5]) < 0.02 for r in rows)  # K=0 band is non-hyperbolic
    svg = (out / "lyapunov.svg").read_text(encoding="utf-8")
    assert svg.startswith("<?xml")
    assert "<svg" in svg and "polyline" in svg


def test_repeat_runs_are_byte_identical(tmp_path):
    cfg = _write_config(tmp_path, SCAN_CFG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["scan-lyapunov", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["scan-lyapunov", "--config", cfg, "--out", str(out2),
                 "--workers", "2"]) == 0
    assert (out1 / "lyapunov.csv").read_bytes() == (out2 / "lyapunov.csv").read_bytes()
    assert (out1 / "lyapunov.svg").read_bytes() == (out2 / "lyapunov.svg").read_bytes()


def test_flags_override_config(tmp_path):
    cfg = _write_config(tmp_path, {
        "model": {"K": 1.0},
        "scan": {"E": {"min": 0.0, "max": 4.0, "step": 1.0}, "n": 500, "phases": 4},
    })
    out = tmp_path / "run"
    assert main(["scan-lyapunov", "--config", cfg, "--out", str(out), "--K", "0",
                 "--E-min", "1", "--E-max", "2", "--E-step", "0.5"]) == 0
    _, _, rows = _read_csv(out / "lyapunov.csv")
    assert [float(r[0]) for r in rows] == [1.0, 1.5, 2.0]
    assert all(float(r[2]) == 0.0 for r in rows)


def test_seed_changes_hash_but_not_rows(tmp_path):
    cfg = _write_config(tmp_path, SCAN_CFG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["scan-lyapunov", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["scan-lyapunov", "--config", cfg, "--out", str(out2),
                 "--seed", "7"]) == 0
    c1, _, r1 = _read_csv(out1 / "lyapunov.csv")
    c2, _, r2 = _read_csv(out2 / "lyapunov.csv")
    assert r1 == r2
    assert c1[0] != c2[0]  # config hash covers the seed


# -- spectrum ------------------------------------------------------------------------


def test_spectrum_closed_form(tmp_path):
    cfg = _write_config(tmp_path, {
        "model": {"K": 0.0},
        "scan": {"N": 50, "theta": 0.0, "interval": [0.5, 3.5], "tol": 1e-10},
    })
    out = tmp_path / "run"
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
    _, header, rows = _read_csv(out / "spectrum.csv")
    assert header == ["theta", "N", "index", "E", "residual", "decay_rate",
                      "fit_quality"]
    expected = [2.0 - 2.0 * math.cos(math.pi * k / 51.0) for k in range(1, 51)]
    expected = [e for e in expected if 0.5 < e < 3.5]
    got = [float(r[3]) for r in rows]
    assert len(got) == len(expected)
    for a, b in zip(got, expected):
        assert a == pytest.approx(b, abs=1e-8)
    for r in rows:
        assert float(r[4]) <= 1e-8 * (1.0 + abs(float(r[3])))
    assert (out / "spectrum.svg").exists()


# -- reduce --------------------------------------------------------------------------


def test_reduce_free_model_artifact(tmp_path):
    cfg = _write_config(tmp_path, {"model": {"K": 0.0}})
    out = tmp_path / "run"
    assert main(["reduce", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads((out / "reduce.json").read_text(encoding="utf-8"))
    assert set(doc) == {"qplab", "numpy", "scipy", "config_sha256", "config", "result"}
    assert doc["config"]["command"] == "reduce"
    rep = doc["result"]["report"]
    assert rep["k_hat"] == pytest.approx(-1.0)
    assert all(v < 1e-10 for v in rep["residuals"].values())
    pert = doc["result"]["perturbation"]
    assert pert["within_threshold"] is True
    assert pert["e_max"] == 0.01


# -- gordon-probe ----------------------------------------------------------------------


def test_gordon_probe_free_model(tmp_path):
    cfg = _write_config(tmp_path, {"model": {"K": 0.0},
                                   "scan": {"max_q": 50}})
    out = tmp_path / "run"
    assert main(["gordon-probe", "--config", cfg, "--out", str(out),
                 "--E", "0.5", "--theta", "0.1"]) == 0
    doc = json.loads((out / "gordon.json").read_text(encoding="utf-8"))
    result = doc["result"]
    assert result["degenerate"] is True
    assert result["E"] == 0.5
    assert result["per_scale"]
    assert all(p["approximant_error"] == 0.0 for p in result["per_scale"])


# -- classify-freq -----------------------------------------------------------------------


def test_classify_golden(tmp_path):
    out = tmp_path / "run"
    assert main(["classify-freq", "--out", str(out), "--n-max", "20",
                 "--n-range", "200"]) == 0
    doc = json.loads((out / "classify.json").read_text(encoding="utf-8"))
    result = doc["result"]
    assert result["omega_id"] == "golden"
    assert result["beta"]["value"] == 0.0
    assert result["dc"]["passed"] is True
    assert result["sdc"]["passed"] is True
    assert result["criterion"]["met"] is False
    assert len(result["beta"]["stages"]) == 19


def test_classify_rejects_rational(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"model": {"omega": {"fraction": [2, 5]}}})
    assert main(["classify-freq", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    capsys.readouterr()


# -- phase-diagram -----------------------------------------------------------------------


def test_phase_diagram_grid(tmp_path):
    out = tmp_path / "run"
    assert main(["phase-diagram", "--out", str(out), "--k-list", "0,1",
                 "--E-min", "0", "--E-max", "2", "--E-step", "1",
                 "--n", "1000", "--phases", "4"]) == 0
    _, header, rows = _read_csv(out / "phase_diagram.csv")
    assert header == ["K", "E", "omega_id", "n", "phases", "L", "stderr"]
    assert [float(r[0]) for r in rows] == [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
    assert [float(r[1]) for r in rows] == [0.0, 1.0, 2.0, 0.0, 1.0, 2.0]
    assert (out / "phase_diagram.svg").exists()


def test_custom_profile_modes(tmp_path):
    cfg = _write_config(tmp_path, {
        "model": {"K": 1.0, "f_modes": {"1": 1.0, "2": 0.25}},
        "scan": {"E": {"min": 0.0, "max": 1.0, "step": 1.0}, "n": 500, "phases": 4},
    })
    out = tmp_path / "run"
    assert main(["scan-lyapunov", "--config", cfg, "--out", str(out)]) == 0
    _, _, rows = _read_csv(out / "lyapunov.csv")
    assert len(rows) == 2
    assert all(float(r[5]) >= 0.0 for r in rows)
