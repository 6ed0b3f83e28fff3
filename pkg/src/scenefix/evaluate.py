"""Layout evaluation: does a symbolic layout satisfy a spatial expression?

Checks run in three stages and never short-circuit, so one sample can
accumulate several failure categories:

1. counts: every mentioned object (name plus required attributes) must
   appear exactly once;
2. orientation: every facing assertion must match the layout facing of
   the name-matching objects, bucket-for-bucket;
3. relations: intrinsic clauses are first rewritten into the camera frame
   (asserted facing wins over detected facing), then judged on box
   centers for left/right and on depth for front/back, strictly.

Unary clauses against the reserved frame relatum compare the target's
center x with the image midline at 0.5.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum

from .dsl import FRAME, Intrinsic, ObjectMention, RelationClause, SpatialExpression
from .errors import FacingUnknownError, UnknownObjectError
from .rules import convert_relation, resolve_relatum_facing
from .scene import FacingDirection, Relation, SceneLayout, SceneObject


class ErrorCategory(Enum):
    MISSING_OBJECT = "missing-object"
    MULTIPLE_OBJECT = "multiple-object"
    LEFT_RIGHT = "left-right"
    FRONT_BACK = "front-back"
    ORIENTATION = "orientation"


def mention_matches(obj: SceneObject, mention: ObjectMention) -> bool:
    """Name must match exactly; mention attributes must all be present."""
    return obj.name == mention.name and set(mention.attributes) <= set(obj.attributes)


def find_matching(layout: SceneLayout, mention: ObjectMention) -> tuple[SceneObject, ...]:
    return tuple(obj for obj in layout.objects if mention_matches(obj, mention))


def eval_relation(relation: Relation, a: SceneObject, b: SceneObject) -> bool:
    """Strict camera-frame predicate between two objects (ties fail both ways)."""
    if relation is Relation.LEFT:
        return a.bbox.cx < b.bbox.cx
    if relation is Relation.RIGHT:
        return a.bbox.cx > b.bbox.cx
    if relation is Relation.FRONT:
        return a.depth > b.depth
    return a.depth < b.depth


def eval_frame_relation(relation: Relation, a: SceneObject) -> bool:
    if relation is Relation.LEFT:
        return a.bbox.cx < 0.5
    if relation is Relation.RIGHT:
        return a.bbox.cx > 0.5
    raise ValueError(f"frame-relative clauses are horizontal only, got {relation.value}")


@dataclass(frozen=True)
class ClauseVerdict:
    clause: RelationClause
    satisfied: bool
    camera_relation: Relation | None
    note: str = ""


@dataclass(frozen=True)
class EvaluationResult:
    correct: bool
    failures: tuple[ErrorCategory, ...]
    per_clause: tuple[ClauseVerdict, ...] = ()

    def __post_init__(self):
        if self.correct != (len(self.failures) == 0):
            raise ValueError("correct must hold exactly when there are no failures")


def _first_by_id(objects) -> SceneObject | None:
    return min(objects, key=lambda o: o.object_id) if objects else None


def evaluate(expr: SpatialExpression, layout: SceneLayout) -> EvaluationResult:
    failures: list[ErrorCategory] = []

    def add(category: ErrorCategory) -> None:
        if category not in failures:
            failures.append(category)

    # stage 1: counts
    for mention in expr.mentions:
        count = len(find_matching(layout, mention))
        if count == 0:
            add(ErrorCategory.MISSING_OBJECT)
        elif count > 1:
            add(ErrorCategory.MULTIPLE_OBJECT)

    # stage 2: orientation; skipped entirely when nothing is asserted
    for assertion in expr.facings:
        pool = layout.named(assertion.subject)
        if any(obj.facing is not assertion.facing for obj in pool):
            add(ErrorCategory.ORIENTATION)

    # stage 3: relations
    verdicts: list[ClauseVerdict] = []
    for clause in expr.relations:
        verdicts.append(_eval_clause(clause, expr, layout, add))

    failures_t = tuple(failures)
    return EvaluationResult(
        correct=not failures_t, failures=failures_t, per_clause=tuple(verdicts)
    )


def _eval_clause(
    clause: RelationClause, expr: SpatialExpression, layout: SceneLayout, add
) -> ClauseVerdict:
    target = _first_by_id(layout.named(clause.target))
    if clause.relatum == FRAME:
        if target is None:
            return ClauseVerdict(clause, False, clause.relation, "target missing")
        ok = eval_frame_relation(clause.relation, target)
        if not ok:
            add(ErrorCategory.LEFT_RIGHT)
        return ClauseVerdict(clause, ok, clause.relation)

    if isinstance(clause.perspective, Intrinsic):
        try:
            facing = resolve_relatum_facing(clause, expr, layout)
        except UnknownObjectError:
            # the relatum is absent; the count stage already recorded that
            return ClauseVerdict(clause, False, None, "relatum missing, facing unresolvable")
        except FacingUnknownError:
            add(ErrorCategory.ORIENTATION)
            return ClauseVerdict(clause, False, None, "relatum facing unknown")
        camera_rel = convert_relation(clause.relation, facing)
    else:
        camera_rel = clause.relation

    relatum = _first_by_id(layout.named(clause.relatum))
    if target is None or relatum is None:
        return ClauseVerdict(clause, False, camera_rel, "participant missing")
    ok = eval_relation(camera_rel, target, relatum)
    if not ok:
        add(ErrorCategory.LEFT_RIGHT if camera_rel.horizontal else ErrorCategory.FRONT_BACK)
    return ClauseVerdict(clause, ok, camera_rel)


@dataclass(frozen=True)
class RunHistogram:
    total: int
    correct: int
    counts: tuple[tuple[ErrorCategory, int], ...]

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def count(self, category: ErrorCategory) -> int:
        return dict(self.counts).get(category, 0)


def categorize_run(results) -> RunHistogram:
    """Aggregate per-sample results into the accuracy/error histogram.

    Each (sample, category) failure pair counts once, so the histogram sum
    equals the number of such pairs, not the number of failing samples.
    """
    results = list(results)
    counter: Counter[ErrorCategory] = Counter()
    correct = 0
    for r in results:
        if r.correct:
            correct += 1
        counter.update(r.failures)
    counts = tuple((cat, counter[cat]) for cat in ErrorCategory if counter[cat])
    return RunHistogram(total=len(results), correct=correct, counts=counts)
