import json
import subprocess
import sys
from pathlib import Path

import pytest

from tacheck.cli import main

MODELS = Path(__file__).resolve().parent.parent / "models"


def run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_check_nondeterministic_all_satisfied(capsys):
    code, out, _ = run(["check", MODELS / "proposed_nondet.tam", MODELS / "proposed_nondet.tq"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert [l.split(":")[0] for l in lines[:3]] == ["SATISFIED"] * 3
    assert lines[-1] == "* zeno runs are not excluded"


def test_check_no_time_deadlocks(tmp_path, capsys):
    q = tmp_path / "q.tq"
    q.write_text("A[] not deadlock\n")
    code, out, _ = run(["check", MODELS / "proposed_notime.tam", q], capsys)
    assert code == 1
    assert out.startswith("NOT SATISFIED: A[] not deadlock (explored=")


def test_check_writes_trace(tmp_path, capsys):
    trace = tmp_path / "t.json"
    code, _, _ = run(["check", MODELS / "proposed_det.tam", MODELS / "proposed_det.tq", "--trace", trace], capsys)
    assert code == 1
    doc = json.loads(trace.read_text())
    assert doc[0]["query"] == "A[] not deadlock" and doc[0]["satisfied"] is False
    assert doc[0]["trace"][0]["label"] == "init"


def test_missing_file(capsys):
    code, _, err = run(["check", "nope.tam", "nope.tq"], capsys)
    assert code == 2 and "cannot read" in err


def test_parse_error_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.tam"
    bad.write_text("clock x;\nprocess P { loc a init a; }\nsystem P;\n")
    code, _, err = run(["check", bad, MODELS / "existing.tq"], capsys)
    assert code == 2
    assert f"{bad}:2:" in err


def test_budget_exceeded(capsys):
    code, _, err = run(["check", MODELS / "proposed_nondet.tam", MODELS / "proposed_nondet.tq", "--budget", "5"], capsys)
    assert code == 2 and "budget" in err


def test_simulate_zero_steps(capsys):
    code, out, _ = run(["simulate", MODELS / "proposed_nondet.tam", "--seed", "1", "--steps", "0"], capsys)
    assert code == 0 and json.loads(out)["trace"] == []


def test_simulate_no_time_deadlock_seed(capsys):
    code, out, _ = run(["simulate", MODELS / "proposed_notime.tam", "--seed", "0", "--steps", "20"], capsys)
    assert json.loads(out)["deadlock"] is True


def test_timing_csv(capsys):
    code, out, _ = run(["timing", "--zeta", "1", "--theta", "2", "--alphas", "0..3"], capsys)
    rows = [l.split(",") for l in out.splitlines()]
    assert rows[0] == ["point", "alpha", "closed_form", "measured"]
    assert len(rows) == 1 + 4 * 8
    assert all(r[2] == r[3] for r in rows[1:])
    assert ["GenReady", "1", "6", "6"] in rows


def test_timing_empty_alphas(capsys):
    code, out, _ = run(["timing", "--zeta", "1", "--theta", "2", "--alphas", ""], capsys)
    assert code == 0 and out == "point,alpha,closed_form,measured\n"


def test_timing_negative_is_an_error(capsys):
    code, _, _ = run(["timing", "--zeta", "-1", "--theta", "2"], capsys)
    assert code == 2


def test_timing_plot(tmp_path, capsys):
    png = tmp_path / "t.png"
    code, _, _ = run(["timing", "--zeta", "1", "--theta", "2", "--alphas", "0..5", "--plot", png], capsys)
    assert code == 0 and png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_models_list(capsys):
    code, out, _ = run(["models", "list"], capsys)
    assert code == 0 and len(out.splitlines()) == 5


def test_models_emit(tmp_path, capsys):
    code, _, _ = run(["models", "emit", "proposed_det", tmp_path], capsys)
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["proposed_det.tam", "proposed_det.tq"]
    code, _, _ = run(["check", tmp_path / "proposed_det.tam", tmp_path / "proposed_det.tq"], capsys)
    assert code == 1


def test_models_emit_unknown(tmp_path, capsys):
    code, _, _ = run(["models", "emit", "nope", tmp_path], capsys)
    assert code == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "tacheck.cli", "models", "list"], capture_output=True, text=True
    )
    assert out.returncode == 0 and "existing" in out.stdout
