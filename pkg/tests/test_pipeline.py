"""Closed-loop correction runs over benchmark datasets."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

from scenefix import (
    PerceptionConfig,
    RunConfig,
    apply_corruption,
    generate_for_lmd,
    generate_forest_style,
    run_batch,
    run_sample,
    write_dataset,
)
from scenefix.pipeline import build_report, write_report

FAKE = str(Path(__file__).parent / "fake_interpreter.py")


def _dataset(tmp_path, samples, name="bench.ndjson"):
    path = str(tmp_path / name)
    write_dataset(path, samples)
    return path


@pytest.fixture(scope="module")
def corrupted_dataset(tmp_path_factory):
    samples = generate_for_lmd(40, seed=78)
    corrupted, ledger = apply_corruption(samples, fraction=0.8, seed=78)
    path = str(tmp_path_factory.mktemp("data") / "bench.ndjson")
    write_dataset(path, corrupted)
    return path, ledger


class TestConfigValidation:
    def test_rounds_range(self):
        with pytest.raises(ValueError):
            RunConfig(dataset_path="x", rounds=11)

    def test_endpoint_pairing(self):
        with pytest.raises(ValueError):
            RunConfig(dataset_path="x", solver="external")
        with pytest.raises(ValueError):
            RunConfig(dataset_path="x", endpoint="cmd")

    def test_workers_builtin_only(self):
        with pytest.raises(ValueError):
            RunConfig(
                dataset_path="x", solver="external", endpoint="cmd", workers=2
            )


class TestSingleSample:
    def test_clean_sample_needs_no_actions(self):
        sample = generate_for_lmd(1, seed=5)[0]
        cfg = RunConfig(dataset_path="unused", rounds=1)
        trajectory = run_sample(sample, cfg)
        assert trajectory.error is None
        assert trajectory.correct_at(0)
        assert trajectory.correct_at(1)
        assert trajectory.rounds[1].actions == ()

    def test_corrupted_sample_fixed_in_one_round(self):
        samples = generate_for_lmd(10, seed=78)
        corrupted, ledger = apply_corruption(samples, fraction=1.0, seed=78)
        cfg = RunConfig(dataset_path="unused", rounds=1)
        for sample in corrupted:
            trajectory = run_sample(sample, cfg)
            assert trajectory.error is None, trajectory.error
            assert not trajectory.correct_at(0)
            assert trajectory.correct_at(1)
            assert trajectory.rounds[1].actions

    def test_rounds_zero_is_pure_evaluation(self):
        sample = generate_for_lmd(1, seed=5)[0]
        cfg = RunConfig(dataset_path="unused", rounds=0)
        trajectory = run_sample(sample, cfg)
        assert len(trajectory.rounds) == 1
        assert trajectory.rounds[0].round_index == 0


class TestBatchRuns:
    def test_round0_accuracy_equals_design_fraction(self, corrupted_dataset):
        path, _ = corrupted_dataset
        report = run_batch(RunConfig(dataset_path=path, rounds=1))
        assert report.accuracy[0] == pytest.approx(0.2)
        assert report.accuracy[1] == 1.0

    def test_category_histogram_matches_ledger(self, corrupted_dataset):
        path, ledger = corrupted_dataset
        report = run_batch(RunConfig(dataset_path=path, rounds=0))
        want = {}
        for inj in ledger:
            want[inj.category.value] = want.get(inj.category.value, 0) + 1
        assert dict(report.categories[0]) == want

    def test_parallel_run_matches_sequential(self, corrupted_dataset):
        path, _ = corrupted_dataset
        sequential = run_batch(RunConfig(dataset_path=path, rounds=1))
        parallel = run_batch(RunConfig(dataset_path=path, rounds=1, workers=4))
        assert parallel == sequential

    def test_split_accuracies_cover_both_perspectives(self, corrupted_dataset):
        path, _ = corrupted_dataset
        report = run_batch(RunConfig(dataset_path=path, rounds=0))
        assert report.relative_accuracy[0] is not None
        assert report.intrinsic_accuracy[0] is not None
        expected = (report.relative_accuracy[0] + report.intrinsic_accuracy[0]) / 2
        assert report.average_accuracy[0] == pytest.approx(expected)

    def test_deterministic_reports(self, corrupted_dataset, tmp_path):
        path, _ = corrupted_dataset
        p1, p2 = str(tmp_path / "r1.ndjson"), str(tmp_path / "r2.ndjson")
        run_batch(RunConfig(dataset_path=path, rounds=1, report_path=p1))
        run_batch(RunConfig(dataset_path=path, rounds=1, report_path=p2))
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_report_records_shape(self, corrupted_dataset, tmp_path):
        path, _ = corrupted_dataset
        report_path = str(tmp_path / "report.ndjson")
        report = run_batch(
            RunConfig(dataset_path=path, rounds=1, report_path=report_path)
        )
        lines = [json.loads(l) for l in open(report_path, encoding="utf-8")]
        assert len(lines) == len(report.trajectories) + 1
        summary = lines[-1]
        assert summary["summary"] is True
        assert summary["accuracy_by_round"] == list(report.accuracy)
        body = lines[0]
        assert set(body) == {"id", "split", "source", "error", "rounds"}
        for r in body["rounds"]:
            assert set(r) == {"round", "correct", "failures", "actions"}


class TestNoisyRuns:
    def test_monotone_improvement_with_noise(self, tmp_path):
        samples = generate_forest_style(30, seed=78)
        corrupted, _ = apply_corruption(samples, fraction=0.8, seed=78)
        path = _dataset(tmp_path, corrupted)
        noise = PerceptionConfig(bbox_jitter_sigma=0.01, depth_sigma=0.0)
        report = run_batch(
            RunConfig(dataset_path=path, rounds=3, perception=noise, seed=78)
        )
        for earlier, later in zip(report.accuracy, report.accuracy[1:]):
            assert later >= earlier

    def test_heavy_dropout_errors_are_contained(self, tmp_path):
        samples = generate_for_lmd(10, seed=78)
        path = _dataset(tmp_path, samples)
        noise = PerceptionConfig(dropout_rate=0.9)
        report = run_batch(
            RunConfig(dataset_path=path, rounds=1, perception=noise, seed=78)
        )
        # dropping the relatum makes conversion impossible for intrinsic
        # samples; those must surface as per-sample errors, not crashes
        assert len(report.trajectories) == 10
        assert report.accuracy[0] < 1.0


class TestExternalSolver:
    def test_external_echo_leaves_accuracy_flat(self, corrupted_dataset):
        path, _ = corrupted_dataset
        cfg = RunConfig(
            dataset_path=path,
            rounds=1,
            solver="external",
            endpoint=f"{sys.executable} {FAKE} echo",
        )
        report = run_batch(cfg)
        assert report.accuracy[0] == pytest.approx(0.2)
        assert report.accuracy[1] == pytest.approx(0.2)

    def test_external_solve_mode_reaches_full_accuracy(self, corrupted_dataset):
        path, _ = corrupted_dataset
        cfg = RunConfig(
            dataset_path=path,
            rounds=1,
            solver="external",
            endpoint=f"{sys.executable} {FAKE} solve",
        )
        report = run_batch(cfg)
        assert report.accuracy[1] == 1.0

    def test_external_malformed_marks_samples_errored(self, tmp_path):
        samples = generate_for_lmd(4, seed=78)
        path = _dataset(tmp_path, samples)
        cfg = RunConfig(
            dataset_path=path,
            rounds=1,
            solver="external",
            endpoint=f"{sys.executable} {FAKE} malformed",
        )
        report = run_batch(cfg)
        assert all(t.error is not None for t in report.trajectories)
        assert all("ProtocolError" in t.error for t in report.trajectories)
        assert report.accuracy[1] == 0.0


class TestReportBuilding:
    def test_empty_round_has_empty_categories(self):
        report = build_report((), rounds=0)
        assert report.accuracy == (0.0,)
        assert report.categories == ((),)

    def test_write_report_round_trips_json(self, tmp_path):
        samples = generate_for_lmd(3, seed=78)
        trajectories = tuple(
            run_sample(s, RunConfig(dataset_path="unused", rounds=1))
            for s in samples
        )
        report = build_report(trajectories, rounds=1)
        path = str(tmp_path / "report.ndjson")
        write_report(report, path)
        lines = [json.loads(l) for l in open(path, encoding="utf-8")]
        assert lines[-1]["samples"] == 3
