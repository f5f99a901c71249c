"""Command-line behaviour: exit codes, output and the module entry point."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

from fracrds.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main

NOISE = {"noise": {"hurst": 0.75, "step": 2**-6, "n_past": 64, "n_future": 64, "seed": 1}}


def write(tmp_path, obj, name="cfg.json"):
    f = tmp_path / name
    f.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(f)


def test_success(tmp_path, capsys):
    code = main(["generate-noise", "--config", write(tmp_path, NOISE), "--out", str(tmp_path / "o")])
    assert code == EXIT_OK == 0
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "ok" and "path.csv" in out["files"]
    assert (tmp_path / "o" / "manifest.json").exists()


def test_plots_flag(tmp_path):
    main(["generate-noise", "--config", write(tmp_path, NOISE), "--out", str(tmp_path / "o"), "--plots"])
    assert (tmp_path / "o" / "path.svg").exists()


def test_config_errors(tmp_path, capsys):
    bad = {"noise": {**NOISE["noise"], "hurst": 0.4}}
    assert main(["generate-noise", "--config", write(tmp_path, bad)]) == EXIT_CONFIG == 2
    assert "(1/2, 1)" in capsys.readouterr().err
    assert main(["generate-noise", "--config", write(tmp_path, "{oops", "b.json")]) == 2
    assert "line 1, column 2" in capsys.readouterr().err


def test_numerical_failure(tmp_path, capsys):
    cfg = {
        "noise": {"hurst": 0.75, "step": 2**-7, "n_future": 128, "seed": 3},
        "model": {"type": "linear", "params": {"a": 1}, "beta": 900},
        "solver": {"dt": 2**-7},
        "initial": {"seed": 1},
        "window": [0, 1],
    }
    code = main(["solve", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert code == EXIT_NUMERICAL == 3
    assert "TransformOverflowError" in capsys.readouterr().err
    assert [p.name for p in (tmp_path / "o").iterdir()] == ["manifest.json"]


def test_unknown_task_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["fly", "--config", write(tmp_path, NOISE)])
    assert info.value.code == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "fracrds", "generate-noise", "--config", write(tmp_path, NOISE),
         "--out", str(tmp_path / "o")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["task"] == "generate-noise"
