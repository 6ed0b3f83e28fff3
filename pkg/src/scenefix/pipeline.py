"""Run the perceive / interpret / plan / apply / evaluate loop over a dataset.

Round 0 is a pure evaluation of each sample's initial scene as seen by
the perceiver. Every later round re-perceives the current scene, rewrites
intrinsic clauses into the camera frame, asks the configured solver for a
revised layout, applies the diff to the scene, and evaluates the result
through a fresh perception pass. Per-sample failures (unsatisfiable
clause sets, protocol violations, impossible edits) mark that sample as
errored and count as incorrect without stopping the batch.

Reports are newline-delimited JSON: one record per sample trajectory
plus a final summary with per-round accuracy broken down by perspective
split. Runs are deterministic for a fixed config, and samples are
independent, so the worker pool (builtin solver only) changes nothing
but wall time.
"""

from __future__ import annotations

import functools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .benchgen import DEFAULT_SEED, BenchmarkSample
from .edits import (
    Addition,
    AttributeModify,
    DepthModify,
    Deletion,
    EditAction,
    FacingModify,
    Reposition,
    SymbolicScene,
    action_kind,
    apply_actions,
    diff_layouts,
    scene_from_layout,
)
from .errors import (
    DuplicateIdError,
    FacingUnknownError,
    InterpreterTimeout,
    LayoutValidationError,
    OverlapCollisionError,
    ProtocolError,
    UnknownObjectError,
    UnsatisfiableError,
)
from .evaluate import EvaluationResult, categorize_run, evaluate
from .interpreter import make_interpreter, suggest_layout
from .perception import ZERO_NOISE, PerceptionConfig, derive_seed, perceive
from .rules import convert_expression
from .wire import read_dataset, serialize_wire_layout, write_ndjson

logger = logging.getLogger(__name__)

_SAMPLE_ERRORS = (
    UnsatisfiableError,
    ProtocolError,
    LayoutValidationError,
    InterpreterTimeout,
    FacingUnknownError,
    UnknownObjectError,
    OverlapCollisionError,
    DuplicateIdError,
)


@dataclass(frozen=True)
class RunConfig:
    dataset_path: str
    rounds: int = 1
    solver: str = "builtin"
    endpoint: str | None = None
    perception: PerceptionConfig = ZERO_NOISE
    report_path: str | None = None
    seed: int = DEFAULT_SEED
    workers: int = 1

    def __post_init__(self):
        if not 0 <= self.rounds <= 10:
            raise ValueError("rounds must be in 0..10")
        if self.solver not in ("builtin", "external"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if (self.solver == "external") != (self.endpoint is not None):
            raise ValueError("an endpoint is required exactly when solver is external")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.workers > 1 and self.solver == "external":
            raise ValueError("worker pools only apply to the builtin solver")


@dataclass(frozen=True)
class RoundOutcome:
    round_index: int
    result: EvaluationResult | None
    actions: tuple[EditAction, ...] = ()


@dataclass(frozen=True)
class SampleTrajectory:
    sample_id: str
    split: str
    source: str
    rounds: tuple[RoundOutcome, ...]
    error: str | None = None

    def correct_at(self, round_index: int) -> bool:
        for outcome in self.rounds:
            if outcome.round_index == round_index:
                return outcome.result is not None and outcome.result.correct
        return False  # errored out before reaching this round


def run_round(
    sample: BenchmarkSample, scene: SymbolicScene, cfg: RunConfig, round_index: int, session=None
):
    """One correction round; returns (new scene, evaluation, actions)."""
    expr = sample.annotation
    perceived = perceive(
        scene, expr.mentions, cfg.perception,
        seed=derive_seed(cfg.seed, sample.id, round_index, "in"),
    )
    if cfg.solver == "builtin":
        proposal = suggest_layout(convert_expression(expr, perceived), perceived)
    else:
        proposal = session.request(sample.prompt, serialize_wire_layout(perceived), round_index)
    actions = diff_layouts(perceived, proposal.layout)
    new_scene = apply_actions(scene, actions) if actions else scene
    checked = perceive(
        new_scene, expr.mentions, cfg.perception,
        seed=derive_seed(cfg.seed, sample.id, round_index, "out"),
    )
    return new_scene, evaluate(expr, checked), tuple(actions)


def run_sample(sample: BenchmarkSample, cfg: RunConfig, session=None) -> SampleTrajectory:
    scene = scene_from_layout(sample.initial_layout)
    initial = perceive(
        scene, sample.annotation.mentions, cfg.perception,
        seed=derive_seed(cfg.seed, sample.id, 0, "out"),
    )
    outcomes = [RoundOutcome(0, evaluate(sample.annotation, initial))]
    error = None
    for round_index in range(1, cfg.rounds + 1):
        try:
            scene, result, actions = run_round(sample, scene, cfg, round_index, session)
        except _SAMPLE_ERRORS as exc:
            error = f"{type(exc).__name__}: {exc}"
            logger.info("sample %s failed at round %d: %s", sample.id, round_index, error)
            break
        outcomes.append(RoundOutcome(round_index, result, actions))
    return SampleTrajectory(
        sample_id=sample.id,
        split=sample.split,
        source=sample.source,
        rounds=tuple(outcomes),
        error=error,
    )


# --------------------------------------------------------------------------
# reporting

@dataclass(frozen=True)
class RunReport:
    trajectories: tuple[SampleTrajectory, ...]
    rounds: int
    accuracy: tuple[float, ...]
    relative_accuracy: tuple[float | None, ...]
    intrinsic_accuracy: tuple[float | None, ...]
    average_accuracy: tuple[float, ...]
    categories: tuple[tuple[tuple[str, int], ...], ...]

    def to_records(self) -> list[dict]:
        records = [_trajectory_record(t) for t in self.trajectories]
        records.append(
            {
                "summary": True,
                "samples": len(self.trajectories),
                "rounds": self.rounds,
                "accuracy_by_round": list(self.accuracy),
                "relative_by_round": list(self.relative_accuracy),
                "intrinsic_by_round": list(self.intrinsic_accuracy),
                "average_by_round": list(self.average_accuracy),
                "categories_by_round": [dict(c) for c in self.categories],
            }
        )
        return records


def action_to_record(action: EditAction) -> dict:
    kind = action_kind(action)
    if isinstance(action, Addition):
        o = action.obj
        return {
            "kind": kind, "object_id": o.object_id, "name": o.name,
            "attributes": list(o.attributes), "bbox": o.bbox.as_list(),
            "depth": o.depth, "facing": o.facing.value,
        }
    if isinstance(action, Deletion):
        return {"kind": kind, "object_id": action.object_id}
    if isinstance(action, Reposition):
        return {"kind": kind, "object_id": action.object_id, "bbox": action.new_bbox.as_list()}
    if isinstance(action, AttributeModify):
        return {"kind": kind, "object_id": action.object_id, "attributes": list(action.new_attributes)}
    if isinstance(action, FacingModify):
        return {"kind": kind, "object_id": action.object_id, "facing": action.new_facing.value}
    assert isinstance(action, DepthModify)
    return {
        "kind": kind, "object_id": action.object_id, "depth": action.new_depth,
        "bbox": action.new_bbox.as_list() if action.new_bbox is not None else None,
    }


def _trajectory_record(t: SampleTrajectory) -> dict:
    return {
        "id": t.sample_id,
        "split": t.split,
        "source": t.source,
        "error": t.error,
        "rounds": [
            {
                "round": o.round_index,
                "correct": o.result.correct if o.result is not None else False,
                "failures": sorted(f.value for f in o.result.failures) if o.result else [],
                "actions": [action_to_record(a) for a in o.actions],
            }
            for o in t.rounds
        ],
    }


def _accuracy(trajectories, round_index: int) -> float | None:
    if not trajectories:
        return None
    return sum(t.correct_at(round_index) for t in trajectories) / len(trajectories)


def build_report(trajectories: tuple[SampleTrajectory, ...], rounds: int) -> RunReport:
    relative = [t for t in trajectories if t.split == "relative"]
    intrinsic = [t for t in trajectories if t.split == "intrinsic"]

    accuracy, rel_acc, intr_acc, avg_acc, categories = [], [], [], [], []
    for r in range(rounds + 1):
        overall = _accuracy(trajectories, r) or 0.0
        rel = _accuracy(relative, r)
        intr = _accuracy(intrinsic, r)
        accuracy.append(overall)
        rel_acc.append(rel)
        intr_acc.append(intr)
        present = [a for a in (rel, intr) if a is not None]
        avg_acc.append(sum(present) / len(present) if present else overall)

        results = [
            o.result
            for t in trajectories
            for o in t.rounds
            if o.round_index == r and o.result is not None
        ]
        hist = categorize_run(results)
        categories.append(
            tuple(sorted((cat.value, count) for cat, count in hist.counts if count))
        )

    return RunReport(
        trajectories=tuple(trajectories),
        rounds=rounds,
        accuracy=tuple(accuracy),
        relative_accuracy=tuple(rel_acc),
        intrinsic_accuracy=tuple(intr_acc),
        average_accuracy=tuple(avg_acc),
        categories=tuple(categories),
    )


def write_report(report: RunReport, path: str) -> None:
    write_ndjson(path, report.to_records())


def run_batch(cfg: RunConfig) -> RunReport:
    samples = read_dataset(cfg.dataset_path)
    if cfg.solver == "external":
        session = make_interpreter(cfg.endpoint)
        try:
            trajectories = [run_sample(s, cfg, session) for s in samples]
        finally:
            session.close()
    elif cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            trajectories = list(pool.map(functools.partial(run_sample, cfg=cfg), samples))
    else:
        trajectories = [run_sample(s, cfg) for s in samples]

    report = build_report(tuple(trajectories), cfg.rounds)
    if cfg.report_path:
        write_report(report, cfg.report_path)
    return report
