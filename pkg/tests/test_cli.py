"""CLI: config layering, schemas, output formats, exit codes."""

import io
import os
import subprocess
import sys

import numpy as np
import pytest

from stfde.cli import _resolve_workers, main, parse_config
from stfde.errors import ConfigurationError


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_weights_output(capsys):
    code, out, _ = run_cli(["weights", "--beta", "0.5", "--count", "2"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert [float(v) for v in lines] == [1.0, -0.5, -0.125]
    assert all(len(v.split("e")[0].replace("-", "").replace(".", "")) == 17 for v in lines)


def test_weights_requires_parameters(capsys):
    code, _, err = run_cli(["weights", "--beta", "0.5"], capsys)
    assert code == 2
    assert "count" in err


def test_rates_table_one_row(capsys):
    code, out, _ = run_cli(["rates", "--alpha", "1", "--gamma", "0", "--s", "0"], capsys)
    assert code == 0
    assert "strong_temporal 0.5" in out
    assert "strong_spatial 1-eps" in out


def test_defaults_without_config():
    params = parse_config("converge-time")
    assert params["alpha"] == 0.5
    assert params["gamma"] == 0.5
    assert params["m"] == 2.0
    assert params["seed"] == 42
    assert params["trajectories"] == 100
    assert params["levels"] == "40,80,160,320,640"
    assert params["reference"] == 3200


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("gamma = 0.9\nalpha = 0.3\n# comment\n\nseed = 7\n")
    params = parse_config("converge-time", str(cfg), {"gamma": "0.4"})
    assert params["gamma"] == 0.4  # flag beats file
    assert params["alpha"] == 0.3
    assert params["seed"] == 7


def test_config_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus = 1\n")
    with pytest.raises(ConfigurationError, match="bogus"):
        parse_config("converge-time", str(cfg))


def test_config_parse_error_carries_line_number(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha = 0.5\nnot a pair\n")
    with pytest.raises(ConfigurationError, match=":2"):
        parse_config("converge-time", str(cfg))


def test_boundary_alpha_gamma_rejected(capsys):
    code, _, err = run_cli(["rates", "--alpha", "0.2", "--gamma", "0.3"], capsys)
    assert code == 2
    assert "alpha + gamma > 1/2" in err


def test_solve_csv_shape(capsys):
    code, out, _ = run_cli(
        ["solve", "--mesh", "8", "--steps", "5", "--seed", "3"], capsys
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "t," + ",".join(f"x_{i}" for i in range(1, 8))
    assert len(lines) == 1 + 6
    assert float(lines[-1].split(",")[0]) == 1.0


def test_verify_passes(capsys):
    code, out, _ = run_cli(["verify"], capsys)
    assert code == 0
    assert "CHECK" in out
    assert " fail " not in out


def test_study_csv_reproducible_across_workers(tmp_path, capsys):
    args = [
        "converge-time", "--mesh", "16", "--levels", "20,40", "--reference", "80",
        "--trajectories", "3", "--seed", "5",
    ]
    code1, out1, _ = run_cli(args + ["--workers", "1"], capsys)
    code2, out2, _ = run_cli(args + ["--workers", "2"], capsys)
    assert code1 == code2 == 0
    assert out1 == out2
    assert out1.splitlines()[0] == "level,param,strong_error,weak_error,strong_ratio,weak_ratio"


def test_output_file(tmp_path, capsys):
    target = tmp_path / "w.txt"
    code, out, _ = run_cli(
        ["weights", "--beta", "-0.5", "--count", "1", "--output", str(target)], capsys
    )
    assert code == 0
    assert out == ""
    assert target.read_text().splitlines()[1].startswith("5.0000000000000000e-01")


def test_workers_resolution(monkeypatch):
    monkeypatch.delenv("STFDE_WORKERS", raising=False)
    assert _resolve_workers("3") == 3
    monkeypatch.setenv("STFDE_WORKERS", "5")
    assert _resolve_workers(None) == 5
    assert _resolve_workers("2") == 2  # flag beats environment
    monkeypatch.delenv("STFDE_WORKERS")
    assert _resolve_workers(None) >= 1


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "stfde.cli", "rates", "--alpha", "0.4", "--gamma", "0.3"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "weak_temporal 0.7-eps" in proc.stdout
