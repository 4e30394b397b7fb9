"""Tests for the command-line interface."""

import csv
import json
import logging

import pytest
from click.testing import CliRunner

from ballstream.__main__ import cli
from ballstream.config import config
from ballstream.writeout import read_provenance


@pytest.fixture(autouse=True)
def _out_dir(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "out_dir", str(tmp_path / "default-out"))
    yield
    for handler in logging.root.handlers[:]:
        logging.root.removeHandler(handler)
        handler.close()


def _invoke(*args):
    return CliRunner().invoke(cli, list(args))


def _rows(path):
    with open(path, encoding="utf-8") as f:
        return list(csv.DictReader(line for line in f if not line.startswith("#")))


def test_run_writes_results(tmp_path):
    """Test a run on a synthetic stream."""
    out = tmp_path / "run"
    result = _invoke(
        "run", "--data", "synth:uniform_threshold", "--variant", "base",
        "--rate", "1.0", "--seed", "7", "--n", "500", "--out", str(out),
    )
    assert result.exit_code == 0, result.output
    (row,) = _rows(out / "results.csv")
    assert row["variant"] == "base"
    assert 0.0 <= float(row["final_accuracy"]) <= 1.0
    assert read_provenance(str(out / "results.csv"))["seed"] == 7

    document = json.loads((out / "results.json").read_text(encoding="utf-8"))
    (report,) = document["runs"]
    assert report["steps"] == 500
    assert report["trace"][-1]["step"] == 500


def test_run_budget_bounds_model_size(tmp_path):
    """Test that --budget caps the reported model size."""
    out = tmp_path / "budget"
    result = _invoke(
        "run", "--data", "synth:rotating_hyperplane:noise=0.1", "--variant", "auto-adj",
        "--budget", "100", "--n", "3000", "--out", str(out),
    )
    assert result.exit_code == 0, result.output
    document = json.loads((out / "results.json").read_text(encoding="utf-8"))
    (report,) = document["runs"]
    assert report["final_model_size"] <= 100
    assert report["max_model_size"] <= 100
    assert report["budget"] == 100


def test_run_is_byte_identical_on_rerun(tmp_path):
    """Test determinism of result files, wherever they are written."""
    args = ["run", "--data", "synth:two_moons_like:noise=0.1", "--variant", "base",
            "--binary", "--rate", "0.5", "--n", "800", "--seed", "3"]
    assert _invoke(*args, "--out", str(tmp_path / "a")).exit_code == 0
    assert _invoke(*args, "--out", str(tmp_path / "b")).exit_code == 0
    for name in ("results.csv", "results.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_replay_reproduces_run(tmp_path):
    """Test that the embedded spec reruns to identical files."""
    first = tmp_path / "first"
    dump = tmp_path / "balls.jsonl"
    result = _invoke(
        "run", "--data", "synth:multiclass_blobs:classes=3", "--variant", "auto",
        "--n", "600", "--out", str(first), "--dump-model", str(dump),
    )
    assert result.exit_code == 0, result.output
    lines = [json.loads(line) for line in dump.read_text(encoding="utf-8").splitlines()]
    assert lines[0]["kind"] == "header"
    assert {line["kind"] for line in lines[1:]} == {"ball"}

    second = tmp_path / "second"
    result = _invoke("replay", str(first / "results.csv"), "--out", str(second))
    assert result.exit_code == 0, result.output
    assert (first / "results.csv").read_bytes() == (second / "results.csv").read_bytes()


def test_sweep_grid(tmp_path):
    """Test a 4-rate by 2-variant grid with shared masks."""
    out = tmp_path / "sweep"
    args = ["sweep", "--data", "synth:two_moons_like", "--n", "400", "--out", str(out),
            "--variant", "base", "--variant", "auto-adj"]
    for rate in ("0.01", "0.03", "0.05", "0.1"):
        args += ["--rate", rate]
    result = _invoke(*args)
    assert result.exit_code == 0, result.output

    rows = _rows(out / "sweep.csv")
    assert len(rows) == 8
    assert [row["variant"] for row in rows] == ["base"] * 4 + ["auto-adj"] * 4
    assert len(_rows(out / "summary.csv")) == 8

    runs = json.loads((out / "sweep.json").read_text(encoding="utf-8"))["runs"]
    assert [r["updates"] for r in runs[:4]] == [r["updates"] for r in runs[4:]]


def test_sweep_fractional_budgets(tmp_path):
    """Test that each --budget-frac adds one budgeted run sized from the stream length."""
    out = tmp_path / "fractions"
    result = _invoke(
        "sweep", "--data", "synth:rotating_hyperplane", "--n", "2000", "--variant", "auto-adj",
        "--budget-frac", "0.01", "--budget-frac", "0.05", "--out", str(out),
    )
    assert result.exit_code == 0, result.output
    runs = json.loads((out / "sweep.json").read_text(encoding="utf-8"))["runs"]
    assert [r["budget"] for r in runs] == [20, 100]
    assert all(r["max_model_size"] <= r["budget"] for r in runs)
    assert read_provenance(str(out / "sweep.csv"))["budget_fracs"] == [0.01, 0.05]

    bad = _invoke("sweep", "--data", "synth:rotating_hyperplane", "--budget-frac", "1.5",
                  "--out", str(tmp_path / "bad"))
    assert bad.exit_code == 1


def test_sweep_missing_path_is_usage_error(tmp_path):
    """Test that a missing data file fails before any output is written."""
    out = tmp_path / "nothing"
    result = _invoke("sweep", "--data", str(tmp_path / "missing.libsvm"), "--out", str(out))
    assert result.exit_code == 1
    assert not out.exists()


@pytest.mark.parametrize(
    "args",
    [
        ["run", "--data", "synth:uniform_threshold", "--budget", "5", "--budget-frac", "0.1"],
        ["run", "--data", "synth:uniform_threshold", "--variant", "auto", "--binary"],
        ["run", "--data", "synth:uniform_threshold", "--variant", "base-adj", "--binary"],
        ["run", "--data", "synth:nope"],
        ["run", "--data", "synth:uniform_threshold", "--rate", "1.5"],
        ["run", "--variant", "base"],
    ],
)
def test_usage_errors(args, tmp_path):
    """Test exit status 1 for invalid specs."""
    result = _invoke(*args, "--out", str(tmp_path / "o"))
    assert result.exit_code == 1


def test_bad_data_exit_code(tmp_path):
    """Test exit status 2 when the stream itself is unusable."""
    data = tmp_path / "labels.libsvm"
    data.write_text("0 1:0.1\n7 1:0.2\n", encoding="utf-8")
    result = _invoke("run", "--data", str(data), "--variant", "base", "--binary", "--out", str(tmp_path / "o"))
    assert result.exit_code == 2

    broken = tmp_path / "broken.libsvm"
    broken.write_text("".join("1 x:y\n" if i % 10 == 0 else f"1 1:{i}\n" for i in range(1200)), encoding="utf-8")
    result = _invoke("run", "--data", str(broken), "--out", str(tmp_path / "p"))
    assert result.exit_code == 2


def test_run_survives_invalid_utf8_record(tmp_path):
    """Test that one undecodable record is skipped and the run completes."""
    data = tmp_path / "bytes.libsvm"
    data.write_bytes(b"".join(
        f"{i % 2} 1:{i / 2001}".encode("utf-8") + (b"\xfe" if i == 1502 else b"") + b"\n"
        for i in range(1, 2002)
    ))
    out = tmp_path / "o"
    result = _invoke("run", "--data", str(data), "--variant", "base", "--out", str(out))
    assert result.exit_code == 0, result.output
    (report,) = json.loads((out / "results.json").read_text(encoding="utf-8"))["runs"]
    assert report["skipped"] == 1
    assert report["steps"] == 2000


def test_generate_then_run(tmp_path):
    """Test exporting a synthetic stream and reading it back."""
    path = tmp_path / "moons.libsvm"
    result = _invoke("generate", "--data", "synth:two_moons_like:seed=2", "--n", "250", "--out", str(path))
    assert result.exit_code == 0, result.output
    assert read_provenance(str(path))["command"] == "generate"

    result = _invoke("run", "--data", str(path), "--variant", "auto", "--out", str(tmp_path / "r"))
    assert result.exit_code == 0, result.output
    (row,) = _rows(tmp_path / "r" / "results.csv")
    assert row["dataset"] == str(path)

    again = tmp_path / "again.libsvm"
    assert _invoke("replay", str(path), "--out", str(again)).exit_code == 0
    assert again.read_bytes() == path.read_bytes()
