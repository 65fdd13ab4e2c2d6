import csv
import json
import subprocess
import sys

import pytest

from metamax.cli import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, EXIT_RUNTIME, main
from metamax.core import InvariantViolation


def write(path, text):
    path.write_text(text)
    return str(path)


def test_run_with_flat_config(tmp_path, capsys):
    cfg = write(
        tmp_path / "exp.cfg",
        "benchmark = synthetic\nlimits = [1.0, 0.5]\nstrategies = metamax, unif\nk = 5\nbudget = 300\nruns = 3\n",
    )
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "metamax" in text and "unif" in text
    for name in ("curves.csv", "traces.csv", "rounds.csv"):
        assert (out / name).exists()
    rows = list(csv.DictReader((out / "curves.csv").open()))
    assert {r["strategy"] for r in rows} == {"metamax", "unif"}
    assert all(r["runs"] == "3" for r in rows)


def test_run_overrides(tmp_path):
    cfg = write(tmp_path / "exp.json", json.dumps({"benchmark": {"kind": "griewank_mod", "dim": 2}, "budget": 100}))
    out = tmp_path / "o"
    rc = main(["run", "--config", cfg, "--strategy", "rand,luby", "--budget", "60", "--runs", "2", "--seed", "3", "--out", str(out)])
    assert rc == EXIT_OK
    rows = list(csv.DictReader((out / "curves.csv").open()))
    assert {r["strategy"] for r in rows} == {"rand", "luby"}
    assert max(int(r["checkpoint_evals"]) for r in rows) == 60
    assert (out / "rounds.csv").read_text().count("\n") == 1


def test_run_without_config(tmp_path):
    rc = main(["run", "--benchmark", "griewank_mod", "--strategy", "metamax_k", "--k", "4", "--budget", "50", "--runs", "1"])
    assert rc == EXIT_OK


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--benchmark", "nope"],
        ["run"],
        ["run", "--benchmark", "griewank_mod", "--strategy", "best"],
        ["run", "--benchmark", "griewank_mod", "--runs", "0"],
        ["run", "--config", "/nonexistent/file.cfg"],
        ["run", "--budget", "many"],
        ["frobnicate"],
    ],
)
def test_config_errors_exit_1(argv, capsys):
    try:
        rc = main(argv)
    except SystemExit as exc:
        rc = exc.code
    assert rc == EXIT_CONFIG


def test_unknown_config_key_exit_1(tmp_path):
    cfg = write(tmp_path / "bad.cfg", "benchmark = griewank_mod\ncolour = blue\n")
    assert main(["run", "--config", cfg]) == EXIT_CONFIG


def test_runtime_failure_exit_2(tmp_path):
    cfg = write(
        tmp_path / "sub.json",
        json.dumps({"benchmark": {"kind": "subprocess", "command": ["/nonexistent/program"], "dim": 1}, "strategies": ["rand"], "budget": 5, "runs": 1}),
    )
    assert main(["run", "--config", cfg]) == EXIT_RUNTIME


def test_unwritable_output_exit_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rc = main(["run", "--benchmark", "griewank_mod", "--strategy", "rand", "--budget", "5", "--runs", "1", "--out", str(blocker / "d")])
    assert rc == EXIT_RUNTIME


def test_invariant_violation_exit_3(monkeypatch):
    import metamax.cli as cli

    def boom(*a, **k):
        raise InvariantViolation("round 3: leader has 9 steps")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert main(["run", "--benchmark", "griewank_mod", "--budget", "5", "--runs", "1"]) == EXIT_INVARIANT


def test_report_growth(tmp_path, capsys):
    out = tmp_path / "g"
    assert main(["run", "--benchmark", "griewank_mod", "--strategy", "metamax", "--budget", "3000", "--runs", "2", "--out", str(out)]) == 0
    capsys.readouterr()
    ratios = tmp_path / "ratios.csv"
    rc = main(["report", "growth", "--in", str(out / "rounds.csv"), "--tail", "100", "--out", str(ratios)])
    assert rc == EXIT_OK
    text = capsys.readouterr().out
    assert "tail band" in text
    rows = list(csv.DictReader(ratios.open()))
    assert rows and all(float(r["ratio"]) > 0 for r in rows)


def test_report_growth_errors(tmp_path):
    assert main(["report", "growth", "--in", str(tmp_path / "missing.csv")]) == EXIT_RUNTIME
    bad = write(tmp_path / "bad.csv", "a,b\n1,2\n")
    assert main(["report", "growth", "--in", bad]) == EXIT_CONFIG
    fixed = write(tmp_path / "r.csv", "strategy,run,round,leader,leader_steps,total_steps,best_value\nunif,0,1,0,1,2,0.5\n")
    assert main(["report", "growth", "--in", fixed]) == EXIT_CONFIG


def test_verify_theorems_exit_codes(monkeypatch, capsys):
    import metamax.cli as cli
    from metamax.harness import ProbeResult

    monkeypatch.setattr(cli, "verify_theorems", lambda quick: [ProbeResult("a", True, "ok")])
    assert main(["verify", "theorems", "--quick"]) == EXIT_OK
    monkeypatch.setattr(cli, "verify_theorems", lambda quick: [ProbeResult("a", False, "share 0.3")])
    assert main(["verify", "theorems"]) == EXIT_INVARIANT
    assert "FAIL a" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "metamax", "run", "--benchmark", "griewank_mod", "--strategy", "metamax", "--budget", "100", "--runs", "2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    bad = subprocess.run([sys.executable, "-m", "metamax", "run", "--benchmark", "nope"], capture_output=True, text=True)
    assert bad.returncode == 1 and "invalid config" in bad.stderr
