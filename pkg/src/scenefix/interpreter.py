"""Layout proposals: a deterministic builtin solver and an external client.

The builtin solver consumes a camera-frame expression (run intrinsic
clauses through the conversion rules first) and repairs the current
layout in a fixed priority order:

1. delete surplus or negated objects (keep the best match per mention:
   full attribute match first, then larger area, then lower id);
2. add mentioned objects that are absent, placed in the widest free
   horizontal band at a default 0.25 x 0.25 size;
3. rewrite attributes to satisfy the mention;
4. set asserted facing directions;
5. satisfy left/right clauses, swapping the two boxes' horizontal
   extents when that settles every constraint the pair touches, else
   repositioning the target alone inside its feasible range, near the
   midpoint but avoiding overlap with other boxes when space allows;
6. satisfy front/back clauses the same way on depths.

Objects not named in any violated clause are never touched, a proposal
for an already-satisfied layout is the layout itself, and every accepted
proposal passes the evaluator; otherwise UnsatisfiableError is raised.

The external route speaks newline-delimited JSON, one request object
``{"prompt": ..., "layout": ..., "round": ...}`` per line, over a child
process's stdio or HTTP POST, and expects ``{"updated_prompt": ...,
"layout": ..., "reasoning": ...}`` back.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass

from .dsl import FRAME, Camera, SpatialExpression, parse_expression
from .errors import (
    DuplicateIdError,
    ExpressionParseError,
    InterpreterTimeout,
    LayoutValidationError,
    OverlapCollisionError,
    ProtocolError,
    UnsatisfiableError,
    WireFormatError,
)
from .evaluate import evaluate, find_matching, mention_matches
from .scene import BBox, FacingDirection, Relation, SceneLayout, SceneObject, bbox_iou

DEFAULT_ADDITION_SIZE = 0.25
_MAX_REPAIR_PASSES = 4


@dataclass(frozen=True)
class LayoutProposal:
    layout: SceneLayout
    rationale: tuple[str, ...] = ()


# --------------------------------------------------------------------------
# builtin solver

def _matches_negation(obj: SceneObject, negated: str) -> bool:
    name = obj.name
    return name == negated or name + "s" == negated or name == negated + "s"


def place_in_free_band(
    objects, w: float = DEFAULT_ADDITION_SIZE, h: float = DEFAULT_ADDITION_SIZE
) -> BBox:
    """A box in the widest empty horizontal band, never >50% IoU with others."""
    intervals = sorted((o.bbox.x, o.bbox.x + o.bbox.w) for o in objects)
    merged: list[list[float]] = []
    for lo, hi in intervals:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    gaps: list[tuple[float, float]] = []
    cursor = 0.0
    for lo, hi in merged:
        if lo > cursor:
            gaps.append((cursor, lo))
        cursor = max(cursor, hi)
    if cursor < 1.0:
        gaps.append((cursor, 1.0))

    best_gap = max(gaps, key=lambda g: g[1] - g[0], default=None)
    if best_gap is not None and best_gap[1] - best_gap[0] >= w:
        cx = (best_gap[0] + best_gap[1]) / 2.0
        return BBox(min(max(cx - w / 2.0, 0.0), 1.0 - w), 0.5 - h / 2.0, w, h)

    # no band wide enough: scan for the least-overlapping spot
    best: tuple[float, BBox] | None = None
    for yi in (0.375, 0.05, 0.7):
        for i in range(41):
            x = i * (1.0 - w) / 40.0
            box = BBox(x, yi, w, h)
            worst = max((bbox_iou(box, o.bbox) for o in objects), default=0.0)
            if best is None or worst < best[0]:
                best = (worst, box)
    assert best is not None
    if best[0] > 0.5:
        raise OverlapCollisionError("no placement with IoU <= 0.5 available")
    return best[1]


def _keep_key(mention):
    def key(obj: SceneObject):
        return (
            0 if mention_matches(obj, mention) else 1,
            -(obj.bbox.w * obj.bbox.h),
            obj.object_id,
        )

    return key


class _Work:
    """Mutable object table preserving layout order."""

    def __init__(self, layout: SceneLayout):
        self.order: list[int] = [o.object_id for o in layout.objects]
        self.objs: dict[int, SceneObject] = {o.object_id: o for o in layout.objects}
        self.notes: list[str] = []

    def drop(self, object_id: int, why: str) -> None:
        obj = self.objs.pop(object_id)
        self.order.remove(object_id)
        self.notes.append(f"removed {obj.name} #{object_id}: {why}")

    def put(self, obj: SceneObject, note: str | None = None) -> None:
        if obj.object_id not in self.objs:
            self.order.append(obj.object_id)
        self.objs[obj.object_id] = obj
        if note:
            self.notes.append(note)

    def layout(self, background: str) -> SceneLayout:
        return SceneLayout(tuple(self.objs[i] for i in self.order), background)


def _camera_constraints(expr: SpatialExpression, name_to_id: dict[str, int]):
    """(kind, ids..., relation) triples per clause, normalized to '<' form."""
    constraints = []
    for clause in expr.relations:
        if clause.relatum == FRAME:
            constraints.append(("bound", name_to_id[clause.target], clause.relation))
        else:
            a, b = name_to_id[clause.target], name_to_id[clause.relatum]
            constraints.append(("pair", a, b, clause.relation))
    return constraints


def _check_contradictions(constraints) -> None:
    """Strict-order cycles and conflicting midline bounds are unsatisfiable."""
    for axis_horizontal in (True, False):
        edges: set[tuple[int, int]] = set()
        bounds: dict[int, set[Relation]] = {}
        for c in constraints:
            if c[0] == "bound":
                if not axis_horizontal:
                    continue
                _, oid, rel = c
                bounds.setdefault(oid, set()).add(rel)
                if len(bounds[oid]) > 1:
                    raise UnsatisfiableError(
                        f"object #{oid} is required on both sides of the midline"
                    )
            else:
                _, a, b, rel = c
                if rel.horizontal != axis_horizontal:
                    continue
                lo, hi = (a, b) if rel in (Relation.LEFT, Relation.BACK) else (b, a)
                if (hi, lo) in edges:
                    raise UnsatisfiableError(
                        f"contradictory {'horizontal' if axis_horizontal else 'depth'} "
                        f"order between #{lo} and #{hi}"
                    )
                edges.add((lo, hi))
        _reject_cycles(edges, "horizontal" if axis_horizontal else "depth")


def _reject_cycles(edges: set[tuple[int, int]], label: str) -> None:
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[int, int] = {}

    def visit(node: int) -> None:
        color[node] = GRAY
        for nxt in adj.get(node, ()):
            state = color.get(nxt, WHITE)
            if state == GRAY:
                raise UnsatisfiableError(f"cyclic {label} ordering constraints")
            if state == WHITE:
                visit(nxt)
        color[node] = BLACK

    for node in list(adj):
        if color.get(node, WHITE) == WHITE:
            visit(node)


def _violated(c, objs) -> bool:
    if c[0] == "bound":
        _, oid, rel = c
        cx = objs[oid].bbox.cx
        return not (cx < 0.5 if rel is Relation.LEFT else cx > 0.5)
    _, a, b, rel = c
    if rel is Relation.LEFT:
        return not objs[a].bbox.cx < objs[b].bbox.cx
    if rel is Relation.RIGHT:
        return not objs[a].bbox.cx > objs[b].bbox.cx
    if rel is Relation.FRONT:
        return not objs[a].depth > objs[b].depth
    return not objs[a].depth < objs[b].depth


def _involves(c, oid: int) -> bool:
    return oid in (c[1:3] if c[0] == "pair" else c[1:2])


def _swap_horizontal(a: SceneObject, b: SceneObject) -> tuple[SceneObject, SceneObject]:
    return (
        a.replace(bbox=BBox(b.bbox.x, a.bbox.y, b.bbox.w, a.bbox.h)),
        b.replace(bbox=BBox(a.bbox.x, b.bbox.y, a.bbox.w, b.bbox.h)),
    )


def _feasible_interval(oid: int, constraints, objs, horizontal: bool) -> tuple[float, float]:
    if horizontal:
        half = objs[oid].bbox.w / 2.0
        lo, hi = half, 1.0 - half
    else:
        lo, hi = 0.0, 1.0
    for c in constraints:
        if c[0] == "bound":
            if not horizontal or c[1] != oid:
                continue
            if c[2] is Relation.LEFT:
                hi = min(hi, 0.5)
            else:
                lo = max(lo, 0.5)
            continue
        _, a, b, rel = c
        if rel.horizontal != horizontal or oid not in (a, b):
            continue
        other = b if a == oid else a
        val = objs[other].bbox.cx if horizontal else objs[other].depth
        below = (rel in (Relation.LEFT, Relation.BACK)) == (a == oid)
        if below:
            hi = min(hi, val)
        else:
            lo = max(lo, val)
    return lo, hi


def _choose_cx(lo: float, hi: float, obj: SceneObject, others) -> float:
    """Pick a center x in the open interval, steering clear of other boxes.

    Candidates are scanned on an odd grid so the exact midpoint is among
    them; overlap-free positions win, nearest the midpoint first.
    """
    mid = (lo + hi) / 2.0
    half = obj.bbox.w / 2.0
    best_key = None
    best_cx = mid
    steps = 41
    for i in range(1, steps + 1):
        cx = lo + (hi - lo) * i / (steps + 1)
        trial = BBox(cx - half, obj.bbox.y, obj.bbox.w, obj.bbox.h)
        worst = max((bbox_iou(trial, o.bbox) for o in others), default=0.0)
        key = (worst > 0.0, worst, abs(cx - mid))
        if best_key is None or key < best_key:
            best_key = key
            best_cx = cx
    return best_cx


def _repair_axis(work: _Work, constraints, horizontal: bool) -> None:
    axis = [
        c
        for c in constraints
        if (c[0] == "bound" and horizontal) or (c[0] == "pair" and c[3].horizontal == horizontal)
    ]
    if not axis:
        return
    for _ in range(_MAX_REPAIR_PASSES):
        dirty = False
        for c in axis:
            if not _violated(c, work.objs):
                continue
            dirty = True
            if c[0] == "pair":
                a_id, b_id = c[1], c[2]
                a, b = work.objs[a_id], work.objs[b_id]
                if horizontal:
                    na, nb = _swap_horizontal(a, b)
                else:
                    na, nb = a.replace(depth=b.depth), b.replace(depth=a.depth)
                trial = dict(work.objs)
                trial[a_id], trial[b_id] = na, nb
                touched = [k for k in axis if _involves(k, a_id) or _involves(k, b_id)]
                if not any(_violated(k, trial) for k in touched):
                    what = "horizontal extents" if horizontal else "depths"
                    work.put(na)
                    work.put(nb, f"swapped {what} of {a.name} #{a_id} and {b.name} #{b_id}")
                    continue
            # reposition/retune the clause target alone; a target wedged
            # between neighbors (empty interval) yields to the other
            # endpoint, which unblocks reversed chains
            candidates = (c[1],) if c[0] == "bound" else (c[1], c[2])
            for target_id in candidates:
                lo, hi = _feasible_interval(target_id, axis, work.objs, horizontal)
                if not lo < hi:
                    continue  # final verification reports unsatisfiability
                obj = work.objs[target_id]
                if horizontal:
                    others = [o for k, o in work.objs.items() if k != target_id]
                    cx = _choose_cx(lo, hi, obj, others)
                    new_bbox = BBox(cx - obj.bbox.w / 2.0, obj.bbox.y, obj.bbox.w, obj.bbox.h)
                    work.put(
                        obj.replace(bbox=new_bbox),
                        f"moved {obj.name} #{target_id} to cx={cx:.3f}",
                    )
                else:
                    mid = (lo + hi) / 2.0
                    work.put(
                        obj.replace(depth=mid),
                        f"set depth of {obj.name} #{target_id} to {mid:.3f}",
                    )
                break
        if not dirty:
            return


def suggest_layout(expr: SpatialExpression, current: SceneLayout) -> LayoutProposal:
    """Propose a corrected layout for a camera-frame expression.

    Raises ValueError when any clause still carries an object perspective
    and UnsatisfiableError when the clause set cannot be satisfied under
    the repair policy.
    """
    for clause in expr.relations:
        if not isinstance(clause.perspective, Camera):
            raise ValueError("suggest_layout expects camera-frame clauses; convert first")

    work = _Work(current)
    mentioned = {m.name for m in expr.mentions}

    # 1. deletions: negated, unmentioned, surplus
    for negated in expr.negations:
        for oid in list(work.order):
            if _matches_negation(work.objs[oid], negated):
                work.drop(oid, f"negated noun {negated!r}")
    for oid in list(work.order):
        if work.objs[oid].name not in mentioned:
            work.drop(oid, "not mentioned in the expression")
    for mention in expr.mentions:
        pool = [work.objs[oid] for oid in work.order if work.objs[oid].name == mention.name]
        if len(pool) > 1:
            for obj in sorted(pool, key=_keep_key(mention))[1:]:
                work.drop(obj.object_id, f"surplus instance of {mention.name!r}")

    # 2. additions
    next_id = max(work.order, default=0) + 1
    for mention in expr.mentions:
        if any(work.objs[oid].name == mention.name for oid in work.order):
            continue
        bbox = place_in_free_band([work.objs[oid] for oid in work.order])
        obj = SceneObject(
            name=mention.name,
            attributes=mention.attributes,
            object_id=next_id,
            bbox=bbox,
            depth=0.5,
            facing=expr.facing_asserted(mention.name) or FacingDirection.NONE,
        )
        work.put(obj, f"added missing {mention.name} #{next_id}")
        next_id += 1

    # 3. attribute fixes
    for mention in expr.mentions:
        for oid in work.order:
            obj = work.objs[oid]
            if obj.name == mention.name and not mention_matches(obj, mention):
                work.put(
                    obj.replace(attributes=mention.attributes),
                    f"set attributes of {obj.name} #{oid} to {list(mention.attributes)}",
                )

    # 4. facing fixes
    for assertion in expr.facings:
        for oid in work.order:
            obj = work.objs[oid]
            if obj.name == assertion.subject and obj.facing is not assertion.facing:
                work.put(
                    obj.replace(facing=assertion.facing),
                    f"set facing of {obj.name} #{oid} to {assertion.facing.value}",
                )

    # 5./6. geometry
    name_to_id = {work.objs[oid].name: oid for oid in work.order}
    constraints = _camera_constraints(expr, name_to_id)
    _check_contradictions(constraints)
    _repair_axis(work, constraints, horizontal=True)
    _repair_axis(work, constraints, horizontal=False)

    layout = work.layout(current.background)
    verdict = evaluate(expr, layout)
    if not verdict.correct:
        raise UnsatisfiableError(
            "repair policy could not satisfy the expression; failing categories: "
            + ", ".join(f.value for f in verdict.failures)
        )
    return LayoutProposal(layout=layout, rationale=tuple(work.notes))


# --------------------------------------------------------------------------
# external interpreter protocol

_RESPONSE_FIELDS = ("updated_prompt", "layout", "reasoning")


def _validate_proposal_layout(layout: SceneLayout, prompt: str) -> None:
    """Count/attribute consistency of an external proposal with its prompt."""
    try:
        expr = parse_expression(prompt)
    except ExpressionParseError:
        return  # free-form prompt: range checks already passed, accept
    for mention in expr.mentions:
        n = len(find_matching(layout, mention))
        if n != 1:
            raise LayoutValidationError(
                f"expected exactly one {mention.name!r}, proposal has {n}"
            )
    for negated in expr.negations:
        if any(_matches_negation(o, negated) for o in layout.objects):
            raise LayoutValidationError(f"proposal keeps negated noun {negated!r}")
    names = {m.name for m in expr.mentions}
    for obj in layout.objects:
        if obj.name not in names:
            raise LayoutValidationError(f"proposal invents unmentioned object {obj.name!r}")


def _parse_response_line(line: str, prompt: str) -> LayoutProposal:
    from .wire import parse_wire_layout

    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"response is not valid JSON: {exc}") from exc
    if not isinstance(record, dict) or any(k not in record for k in _RESPONSE_FIELDS):
        raise ProtocolError(f"response must carry fields {_RESPONSE_FIELDS}")
    try:
        layout = parse_wire_layout(record["layout"])
    except WireFormatError as exc:
        raise ProtocolError(f"unparsable layout in response: {exc}") from exc
    except (ValueError, DuplicateIdError) as exc:
        raise LayoutValidationError(str(exc)) from exc
    _validate_proposal_layout(layout, prompt)
    reasoning = record["reasoning"]
    return LayoutProposal(layout=layout, rationale=(str(reasoning),) if reasoning else ())


class SubprocessInterpreter:
    """One external interpreter session over a child process's stdio."""

    def __init__(self, argv, timeout: float = 10.0):
        if isinstance(argv, str):
            argv = shlex.split(argv)
        self.timeout = timeout
        self._proc = subprocess.Popen(
            list(argv),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def request(self, prompt: str, layout_wire: str, round_index: int) -> LayoutProposal:
        record = {"prompt": prompt, "layout": layout_wire, "round": round_index}
        if self._proc.poll() is not None or self._proc.stdin is None:
            raise ProtocolError("interpreter process is not running")
        try:
            self._proc.stdin.write(json.dumps(record) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"interpreter closed its stdin: {exc}") from exc
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise InterpreterTimeout(
                f"no response within {self.timeout:.1f}s"
            ) from None
        if line is None:
            raise ProtocolError("interpreter closed its stdout mid-session")
        return _parse_response_line(line, prompt)

    def close(self) -> None:
        if self._proc.poll() is None:
            if self._proc.stdin is not None:
                try:
                    self._proc.stdin.close()
                except OSError:
                    pass
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class HttpInterpreter:
    """External interpreter behind an HTTP endpoint, one POST per record."""

    def __init__(self, url: str, timeout: float = 10.0):
        self.url = url
        self.timeout = timeout

    def request(self, prompt: str, layout_wire: str, round_index: int) -> LayoutProposal:
        payload = json.dumps(
            {"prompt": prompt, "layout": layout_wire, "round": round_index}
        ).encode("utf-8")
        req = urllib.request.Request(
            self.url, data=payload, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                body = resp.read().decode("utf-8")
        except urllib.error.URLError as exc:
            if isinstance(getattr(exc, "reason", None), TimeoutError):
                raise InterpreterTimeout(str(exc)) from exc
            raise ProtocolError(f"endpoint unreachable: {exc}") from exc
        except TimeoutError as exc:
            raise InterpreterTimeout(str(exc)) from exc
        return _parse_response_line(body, prompt)

    def close(self) -> None:  # symmetry with the subprocess session
        pass


def make_interpreter(endpoint: str, timeout: float = 10.0):
    if endpoint.startswith(("http://", "https://")):
        return HttpInterpreter(endpoint, timeout=timeout)
    return SubprocessInterpreter(endpoint, timeout=timeout)


def external_suggest(
    prompt: str, layout_wire: str, endpoint, round_index: int = 0, timeout: float = 10.0
) -> LayoutProposal:
    """One-shot proposal from an external interpreter endpoint.

    ``endpoint`` may be an URL, a command line, or an existing session
    object exposing ``request``.
    """
    if hasattr(endpoint, "request"):
        return endpoint.request(prompt, layout_wire, round_index)
    session = make_interpreter(endpoint, timeout=timeout)
    try:
        return session.request(prompt, layout_wire, round_index)
    finally:
        session.close()
