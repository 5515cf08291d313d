from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from twowell.cli import main


def write_cfg(tmp_path, **cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


CC_RANK_ONE = dict(op="curlcurl", F=[[0.5, 0.0], [0.0, 0.0]], a0=[[0, 0], [0, 0]], a1=[[1, 0], [0, 0]])
CURL = dict(op="curl", F=[[1.0, 0.0], [0.0, 0.5]], a0=[[0, 0], [0, 0]], a1=[[2, 0], [0, 1]])
DIV_EQUI = dict(op="div", F=[[0.5, 0.0], [0.0, 0.5]], a0=[[0, 0], [0, 0]], a1=[[1, 0], [0, 1]])


def analyze(tmp_path, capsys, cfg):
    assert main(["analyze", "--config", write_cfg(tmp_path, **cfg)]) == 0
    return json.loads(capsys.readouterr().out)


def test_analyze_examples(tmp_path, capsys):
    rep = analyze(tmp_path, capsys, CC_RANK_ONE)
    assert rep["predicted_exponent"] == "4/5"
    assert rep["compatibility"]["vanishing_order"] == 2
    assert rep["relaxation"]["theta_tilde"] == pytest.approx(0.5)
    rep = analyze(tmp_path, capsys, CURL)
    assert rep["predicted_exponent"] == "2/3"
    assert rep["compatibility"]["h"] == pytest.approx(1.0)
    assert rep["relaxation"]["regime"] == "mixing"
    rep = analyze(tmp_path, capsys, DIV_EQUI)
    assert rep["predicted_exponent"] == "open"
    assert rep["compatibility"]["equicompatible"] is True
    assert "relaxation" not in rep


def test_config_errors(tmp_path, capsys):
    assert main(["analyze", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["analyze", "--config", write_cfg(tmp_path, **CURL, bogus=1)]) == 2
    assert main(["analyze", "--config", write_cfg(tmp_path, op="grad", F=[[0]], a0=[[0]], a1=[[1]])]) == 2
    assert main(["analyze", "--config", write_cfg(tmp_path, **{**CURL, "F": [[1, 2, 3]]})]) == 2
    assert main(["sweep", "--config", write_cfg(tmp_path, **CURL), "--tau", "0.6"]) == 2
    bad = dict(CC_RANK_ONE, a1=[[1, 2], [0, 0]])
    assert main(["analyze", "--config", write_cfg(tmp_path, **bad)]) == 2
    assert "config error" in capsys.readouterr().err


def test_degenerate_exit(tmp_path):
    same = dict(CURL, a1=CURL["a0"])
    assert main(["analyze", "--config", write_cfg(tmp_path, **same)]) == 3
    assert main(["sweep", "--config", write_cfg(tmp_path, **DIV_EQUI)]) == 3
    assert main(["construct", "--config", write_cfg(tmp_path, **DIV_EQUI)]) == 3


def test_construct_outputs(tmp_path, capsys):
    out, led = tmp_path / "f.csv", tmp_path / "l.json"
    cfg = write_cfg(tmp_path, **CURL, N=4)
    assert main(["construct", "--config", cfg, "--grid-n", "16", "--out", str(out), "--ledger", str(led)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "x1,x2,v1,v2,phase"
    assert len(rows) == 1 + 17 * 17
    arr = np.array([r.split(",") for r in rows[1:]], dtype=float)
    assert set(np.unique(arr[:, 4])) <= {0.0, 1.0}
    ledger = json.loads(led.read_text())
    assert ledger["N"] == 4
    assert ledger["elastic"] == pytest.approx(ledger["excess"] + ledger["elastic_compat"] + 2 * ledger["cross"])


def test_construct_pure_regime(tmp_path, capsys):
    cfg = write_cfg(tmp_path, **dict(CURL, F=[[5, 0], [0, 5]]))
    assert main(["construct", "--config", cfg, "--grid-n", "4", "--out", str(tmp_path / "f.csv")]) == 0
    led = json.loads(capsys.readouterr().out)
    assert led["surface"] == 0.0 and led["path"] in ("pure0", "pure1")


def test_sweep_and_fit(tmp_path, capsys):
    out = tmp_path / "s.csv"
    cfg = write_cfg(tmp_path, **CURL, eps_start=1e-7, eps_end=1e-3, points=9)
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert 0.63 <= summary["fit"]["slope"] <= 0.70
    assert main(["fit", str(out)]) == 0
    assert "slope = 0.6" in capsys.readouterr().out
    assert main(["fit", str(out), "--window", "1.0", "2.0"]) == 2
    assert main(["fit", str(tmp_path / "nope.csv")]) == 2


def test_oracle_exit_codes(tmp_path, capsys):
    assert main(["oracle", "--cases", "5"]) == 0
    assert "FAIL" not in capsys.readouterr().out
    assert main(["oracle", "--cases", "3", "--inject-h-offset", "1e-3"]) == 4
    assert "FAIL" in capsys.readouterr().out
    cfg = write_cfg(tmp_path, **CURL)
    assert main(["oracle", "--config", cfg, "--out", str(tmp_path / "o.json")]) == 0
    assert json.loads((tmp_path / "o.json").read_text())["passed"] is True


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "twowell", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("analyze", "construct", "sweep", "fit", "oracle"):
        assert cmd in res.stdout
