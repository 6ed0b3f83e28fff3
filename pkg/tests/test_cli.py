"""Command-line interface behavior and exit codes."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

from scenefix import read_dataset
from scenefix.cli import main


class TestGenerate:
    def test_writes_dataset_and_ledger(self, tmp_path, capsys):
        out = str(tmp_path / "bench.ndjson")
        ledger = str(tmp_path / "injections.ndjson")
        code = main([
            "generate", "--source", "for-lmd", "--n", "10", "--seed", "78",
            "--out", out, "--injections", ledger,
        ])
        assert code == 0
        assert "wrote 10 samples" in capsys.readouterr().out
        samples = read_dataset(out)
        assert len(samples) == 10
        entries = [json.loads(l) for l in open(ledger, encoding="utf-8")]
        assert len(entries) == 8  # 0.8 default corruption fraction
        assert all(
            set(e) == {"sample_id", "kind", "category", "detail"} for e in entries
        )

    def test_corruption_can_be_disabled(self, tmp_path, capsys):
        out = str(tmp_path / "clean.ndjson")
        code = main([
            "generate", "--source", "forest-style", "--n", "5",
            "--corrupt-fraction", "0", "--out", out,
        ])
        assert code == 0
        assert "(0 injections)" in capsys.readouterr().out
        assert all(s.source == "forest-style" for s in read_dataset(out))

    def test_bad_fraction_exits_2(self, tmp_path, capsys):
        code = main([
            "generate", "--n", "5", "--corrupt-fraction", "1.5",
            "--out", str(tmp_path / "x.ndjson"),
        ])
        assert code == 2
        assert "invalid arguments:" in capsys.readouterr().err


class TestEvaluate:
    def test_stored_layouts_and_summary(self, tmp_path, capsys):
        out = str(tmp_path / "bench.ndjson")
        main(["generate", "--n", "8", "--corrupt-fraction", "0.5", "--out", out])
        capsys.readouterr()
        assert main(["evaluate", "--dataset", out]) == 0
        lines = capsys.readouterr().out.splitlines()
        per_sample = [l for l in lines if l.startswith("for-lmd-")]
        assert len(per_sample) == 8
        assert sum("\tfail\t" in l for l in per_sample) == 4
        assert any(l.startswith("accuracy 0.500 (4/8)") for l in lines)

    def test_missing_dataset_exits_1(self, tmp_path, capsys):
        code = main(["evaluate", "--dataset", str(tmp_path / "absent.ndjson")])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestRun:
    def test_prints_round_table(self, tmp_path, capsys):
        out = str(tmp_path / "bench.ndjson")
        report = str(tmp_path / "report.ndjson")
        main(["generate", "--n", "10", "--seed", "78", "--out", out])
        capsys.readouterr()
        code = main([
            "run", "--dataset", out, "--rounds", "1", "--report", report,
        ])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split() == [
            "round", "accuracy", "relative", "intrinsic", "average",
        ]
        assert lines[1].split()[0] == "0"
        assert lines[2].split()[:2] == ["1", "1.000"]
        records = [json.loads(l) for l in open(report, encoding="utf-8")]
        assert records[-1]["summary"] is True

    def test_invalid_rounds_exits_2(self, tmp_path, capsys):
        out = str(tmp_path / "bench.ndjson")
        main(["generate", "--n", "2", "--out", out])
        capsys.readouterr()
        code = main(["run", "--dataset", out, "--rounds", "99"])
        assert code == 2
        assert "invalid arguments:" in capsys.readouterr().err

    def test_external_without_endpoint_exits_2(self, tmp_path, capsys):
        out = str(tmp_path / "bench.ndjson")
        main(["generate", "--n", "2", "--out", out])
        capsys.readouterr()
        assert main(["run", "--dataset", out, "--solver", "external"]) == 2


class TestRulesAndOracle:
    def test_rules_json_is_complete(self, capsys):
        assert main(["rules", "--format", "json"]) == 0
        records = json.loads(capsys.readouterr().out)
        assert len(records) == 32
        assert records[0]["rule_id"] == "1a"

    def test_rules_table_lists_every_rule(self, capsys):
        assert main(["rules"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 33  # header + 32 rules
        assert lines[0].startswith("rule")

    def test_oracle_agrees(self, capsys):
        assert main(["oracle", "--scenes", "50", "--seed", "7"]) == 0
        out = capsys.readouterr().out
        assert "cardinal pairs: 16/16 agree" in out
        assert "random scenes:  50/50 agree" in out


def test_console_entry_point(tmp_path):
    out = str(tmp_path / "bench.ndjson")
    proc = subprocess.run(
        [sys.executable, "-m", "scenefix.cli", "generate", "--n", "3", "--out", out],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0, proc.stderr
    assert "wrote 3 samples" in proc.stdout
