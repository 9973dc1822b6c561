import csv
import json

import pytest

from poplead.cli import main


def test_states_prints_equal_counts(capsys):
    assert main(["states", "--n", "64", "--tau", "1"]) == 0
    out = capsys.readouterr().out
    assert "formula=638" in out and "enumerated=638" in out and "equal=yes" in out


def test_converge_byte_identical(tmp_path):
    args = ["converge", "--n", "32", "--tau", "1", "--init", "all-leaders",
            "--trials", "10", "--seed", "7"]
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert main(args + ["--output", str(a)]) == 0
    assert main(args + ["--output", str(b)]) == 0
    assert main(args + ["--output", str(c), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    rows = list(csv.DictReader(a.open(newline="")))
    assert len(rows) == 10
    assert {"master_seed", "trial", "n", "m", "tau", "cr", "cb", "cmid", "init"} <= set(rows[0])
    assert a.read_bytes().count(b"\r\n") == 11


def test_json_lines(tmp_path):
    out = tmp_path / "e.jsonl"
    assert main(["epidemic", "--n", "16", "32", "--trials", "5", "--format", "json",
                 "--output", str(out)]) == 0
    lines = [json.loads(x) for x in out.read_text().splitlines()]
    assert len(lines) == 10 and {x["n"] for x in lines} == {16, 32}


def test_six_significant_digits(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["converge", "--n", "24", "--trials", "3", "--output", str(out)]) == 0
    for row in csv.DictReader(out.open(newline="")):
        mant = row["parallel_time"].replace(".", "").lstrip("0")
        assert len(mant.split("e")[0]) <= 6


def test_lottery_summary(capsys):
    assert main(["lottery", "--n", "64", "--trials", "10000", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    low = float(out.split("ci95=[")[1].split(",")[0])
    assert low >= 0.0625 and "lower>=1/16: yes" in out


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("POPLEAD_OUTPUT_DIR", str(tmp_path / "res"))
    assert main(["hold", "--n", "16", "--trials", "3", "--horizon", "10"]) == 0
    assert (tmp_path / "res" / "hold.csv").exists()


@pytest.mark.parametrize("argv", [
    ["converge", "--n", "32", "--N", "64", "--m", "3"],
    ["converge", "--n", "32", "--N", "16"],
    ["converge", "--n", "1"],
    ["converge", "--n", "32", "--cmid", "1/2"],
    ["converge", "--n", "32", "--cmid", "abc"],
    ["hold", "--n", "32", "--tau", "0"],
    ["lottery", "--n", "32", "--trials", "0"],
    ["converge", "--n", "32", "--seed", "-1"],
])
def test_invalid_config_exit_2(argv, capsys):
    assert main(argv) == 2


def test_sweep_and_trace(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--n", "16", "32", "--tau", "1", "2", "--init", "all-leaders",
                 "--trials", "2", "--output", str(out)]) == 0
    rows = list(csv.DictReader(out.open(newline="")))
    assert len(rows) == 8
    assert main(["trace", "--n", "8", "--init", "all-leaders", "--every", "8"]) == 0
    text = capsys.readouterr().out
    assert "step,parallel_time,safe" in text


def test_chvp_command(capsys):
    assert main(["chvp", "--n", "32", "--trials", "5"]) == 0
    assert "C=" in capsys.readouterr().out
