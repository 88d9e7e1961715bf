import json
from pathlib import Path

import pytest

from skillcheck.cli import main

GOLDEN = Path(__file__).parent / "golden" / "demo"
ROOT = Path(__file__).parent.parent


def test_run_exam_matches_golden(tmp_path, capsys):
    assert main(["run-exam", "--config", str(ROOT / "configs/demo_exam.cfg"), "--out", str(tmp_path)]) == 0
    assert "conservation: ok" in capsys.readouterr().out
    for name in ("scores.csv", "payout.json", "events.log", "state.json"):
        assert (tmp_path / name).read_bytes() == (GOLDEN / name).read_bytes(), name


def test_verify_golden_log(capsys):
    assert main(["verify", str(GOLDEN / "events.log"), "--replay"]) == 0
    assert capsys.readouterr().out.startswith("OK:")


@pytest.mark.parametrize("offset", [0, 4, 100, -1])
def test_verify_detects_tamper(tmp_path, offset, capsys):
    data = bytearray((GOLDEN / "events.log").read_bytes())
    data[offset] ^= 0x01
    p = tmp_path / "bad.log"
    p.write_bytes(bytes(data))
    assert main(["verify", str(p)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_verify_missing_file(tmp_path):
    assert main(["verify", str(tmp_path / "nope.log")]) == 2


def _small_props(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text(
        "exam.n = 20\nexam.m = 8\nexam.ell = 4\nexam.K = 4\n"
        "harness.replicas = 1000\nharness.instances = 10\nharness.modes = own-noise-y\n"
        f"run.seed = 1\nrun.out = {tmp_path / 'out'}\n"
    )
    return cfg


def test_properties_writes_outputs(tmp_path, capsys):
    assert main(["properties", "--config", str(_small_props(tmp_path))]) == 0
    out = tmp_path / "out"
    doc = json.loads((out / "verdicts.json").read_text())
    assert doc["passed"] and doc["seed"] == 1
    header = (out / "properties.csv").read_text().splitlines()[0]
    assert header == "check,grid_point,replica,utility"


def test_properties_single_check(tmp_path, capsys):
    assert main(["properties", "--config", str(_small_props(tmp_path)), "--check", "pointwise"]) == 0
    assert "pointwise: 10/10" in capsys.readouterr().out


def test_calibrate(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("exam.n = 20\nexam.m = 8\nexam.ell = 4\nexam.K = 4\nbudget.k_net = 500\nbudget.mc_samples = 500\n")
    assert main(["calibrate", "--config", str(cfg), "--out", str(tmp_path), "--seed", "5"]) == 0
    rep = json.loads((tmp_path / "calibration.json").read_text())
    assert rep["alpha"] * rep["estimate"] == pytest.approx(400.0)
    assert rep["seed"] == 5


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("exam.n = 20\nwhat = 1\n")
    assert main(["run-exam", "--config", str(cfg)]) == 2
    assert "bad.cfg:2:" in capsys.readouterr().err


def test_usage_error():
    assert main(["frobnicate"]) == 2
    assert main([]) == 2
