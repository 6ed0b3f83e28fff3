"""Serialization: the textual layout grammar, annotation JSON, datasets.

A layout travels as a bracketed, comma-separated list of entries,

    [('red cat #1', [0.1, 0.2, 0.3, 0.4], 0.55, 'Left'), ...]

one per object: attributed name with ``#id``, a 4-number box, the mean
depth, and a facing label (quoted bucket name, or bare ``None``).
Numbers carry at most 3 decimals; serializing quantizes to that grid, so
round-trip identity holds exactly for values already on it. Parsing is
liberal about whitespace, facing-label case, and the outer brackets.

Grammar problems raise WireFormatError; entries that parse but violate
model invariants (ranges, duplicate ids) surface as the model's own
ValueError / DuplicateIdError so callers can tell the two apart.

Datasets and reports are newline-delimited JSON with sorted keys,
written atomically (temp file + rename).
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from typing import Iterable

from .dsl import (
    ATTRIBUTE_WORDS,
    CAMERA,
    FacingAssertion,
    Intrinsic,
    ObjectMention,
    RelationClause,
    SpatialExpression,
    parse_expression,
)
from .errors import DatasetError, DuplicateIdError, ExpressionParseError, WireFormatError
from .scene import (
    BBox,
    DEFAULT_BACKGROUND,
    FacingDirection,
    Relation,
    SceneLayout,
    SceneObject,
)

_FACING_BY_LOWER = {f.value.lower(): f for f in FacingDirection}

_NUMBER = r"[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?"
_ENTRY_RE = re.compile(
    r"""\(\s*
        '(?P<head>[^']*)'\s*,\s*
        \[(?P<bbox>[^\]]*)\]\s*,\s*
        (?P<depth>{num})\s*,\s*
        (?:'(?P<facing>[A-Za-z]+)'|(?P<bare>[A-Za-z]+))
        \s*\)""".format(num=_NUMBER),
    re.VERBOSE,
)


def fmt_number(value: float) -> str:
    """Up to 3 decimals, no trailing zeros: 0.25 -> '0.25', 1.0 -> '1'."""
    text = f"{round(float(value), 3):.3f}".rstrip("0").rstrip(".")
    return text if text not in ("", "-0") else "0"


def _entry(obj: SceneObject) -> str:
    head = " ".join([*obj.attributes, obj.name]) + f" #{obj.object_id}"
    bbox = ", ".join(fmt_number(v) for v in obj.bbox.as_list())
    facing = "None" if obj.facing is FacingDirection.NONE else f"'{obj.facing.value}'"
    return f"('{head}', [{bbox}], {fmt_number(obj.depth)}, {facing})"


def serialize_wire_layout(layout: SceneLayout) -> str:
    return "[" + ", ".join(_entry(o) for o in layout.objects) + "]"


def _split_head(head: str) -> tuple[str, tuple[str, ...], int]:
    base, sep, id_text = head.rpartition("#")
    if not sep or not id_text.strip().isdigit():
        raise WireFormatError(f"entry head {head!r} lacks a '#<id>' suffix")
    words = base.strip().split()
    if not words:
        raise WireFormatError(f"entry head {head!r} has no object name")
    attrs: list[str] = []
    while len(words) > 1 and words[0] in ATTRIBUTE_WORDS:
        attrs.append(words.pop(0))
    return " ".join(words), tuple(attrs), int(id_text.strip())


def _parse_facing(match: re.Match) -> FacingDirection:
    label = match.group("facing") or match.group("bare")
    facing = _FACING_BY_LOWER.get(label.lower())
    if facing is None:
        raise WireFormatError(f"unknown facing label {label!r}")
    return facing


def parse_wire_layout(text: str, background: str = DEFAULT_BACKGROUND) -> SceneLayout:
    """Parse the textual layout grammar back into a SceneLayout.

    Raises WireFormatError for malformed text; range violations and
    duplicate ids propagate from the scene model itself.
    """
    if not isinstance(text, str):
        raise WireFormatError(f"layout must be a string, got {type(text).__name__}")
    body = text.strip()
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1].strip()
    if not body:
        return SceneLayout((), background)

    objects: list[SceneObject] = []
    pos = 0
    while pos < len(body):
        match = _ENTRY_RE.match(body, pos)
        if match is None:
            raise WireFormatError(f"unparsable layout entry at offset {pos}: {body[pos:pos + 40]!r}")
        name, attrs, object_id = _split_head(match.group("head"))
        numbers = [n for n in (s.strip() for s in match.group("bbox").split(",")) if n]
        if len(numbers) != 4:
            raise WireFormatError(f"bbox of {name!r} must have 4 numbers, got {len(numbers)}")
        try:
            x, y, w, h = (float(n) for n in numbers)
            depth = float(match.group("depth"))
        except ValueError as exc:
            raise WireFormatError(f"bad number in entry for {name!r}: {exc}") from exc
        objects.append(
            SceneObject(
                name=name,
                attributes=attrs,
                object_id=object_id,
                bbox=BBox(x, y, w, h),
                depth=depth,
                facing=_parse_facing(match),
            )
        )
        pos = match.end()
        rest = body[pos:].lstrip()
        if rest.startswith(","):
            after = rest[1:].lstrip()
            pos = len(body) - len(after)
        elif rest:
            raise WireFormatError(f"unexpected text after entry: {rest[:40]!r}")
        else:
            break
    return SceneLayout(tuple(objects), background)


# --------------------------------------------------------------------------
# annotation JSON

def _perspective_to_json(p) -> dict:
    if isinstance(p, Intrinsic):
        return {"kind": "intrinsic", "relatum": p.relatum}
    return {"kind": "camera"}


def annotation_to_json(expr: SpatialExpression) -> dict:
    return {
        "mentions": [
            {"name": m.name, "attributes": list(m.attributes)} for m in expr.mentions
        ],
        "relations": [
            {
                "target": c.target,
                "relation": c.relation.value,
                "relatum": c.relatum,
                "perspective": _perspective_to_json(c.perspective),
            }
            for c in expr.relations
        ],
        "facings": [{"subject": f.subject, "facing": f.facing.value} for f in expr.facings],
        "negations": list(expr.negations),
        "background": expr.background,
    }


def annotation_from_json(data: dict) -> SpatialExpression:
    try:
        mentions = tuple(
            ObjectMention(m["name"], tuple(m["attributes"])) for m in data["mentions"]
        )
        relations = []
        for c in data["relations"]:
            persp = c["perspective"]
            perspective = (
                Intrinsic(persp["relatum"]) if persp["kind"] == "intrinsic" else CAMERA
            )
            relations.append(
                RelationClause(c["target"], Relation(c["relation"]), c["relatum"], perspective)
            )
        facings = tuple(
            FacingAssertion(f["subject"], FacingDirection(f["facing"])) for f in data["facings"]
        )
        return SpatialExpression(
            mentions=mentions,
            relations=tuple(relations),
            facings=facings,
            negations=tuple(data["negations"]),
            background=data["background"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise WireFormatError(f"bad annotation record: {exc}") from exc


# --------------------------------------------------------------------------
# datasets

_SAMPLE_FIELDS = ("id", "prompt", "split", "source", "annotation", "gold_layout", "initial_layout")


def sample_to_record(sample) -> dict:
    return {
        "id": sample.id,
        "prompt": sample.prompt,
        "split": sample.split,
        "source": sample.source,
        "annotation": annotation_to_json(sample.annotation),
        "gold_layout": serialize_wire_layout(sample.gold_layout),
        "initial_layout": serialize_wire_layout(sample.initial_layout),
    }


def sample_from_record(record: dict, line: int = 0):
    from .benchgen import BenchmarkSample

    missing = [k for k in _SAMPLE_FIELDS if k not in record]
    if missing:
        raise DatasetError(f"record is missing fields {missing}", line=line)
    try:
        annotation = annotation_from_json(record["annotation"])
        background = annotation.background
        sample = BenchmarkSample(
            id=record["id"],
            prompt=record["prompt"],
            annotation=annotation,
            gold_layout=parse_wire_layout(record["gold_layout"], background),
            initial_layout=parse_wire_layout(record["initial_layout"], background),
            split=record["split"],
            source=record["source"],
        )
    except (WireFormatError, DuplicateIdError, ValueError) as exc:
        raise DatasetError(str(exc), line=line) from exc
    try:
        reparsed = parse_expression(sample.prompt)
    except ExpressionParseError as exc:
        raise DatasetError(f"prompt does not parse: {exc}", line=line) from exc
    if reparsed != annotation:
        raise DatasetError(f"annotation does not match prompt {sample.prompt!r}", line=line)
    return sample


def write_ndjson(path: str, records: Iterable[dict]) -> None:
    """Atomic newline-delimited JSON write with deterministic key order."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_ndjson(path: str) -> list[tuple[int, dict]]:
    out: list[tuple[int, dict]] = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON: {exc}", line=lineno) from exc
            out.append((lineno, record))
    return out


def write_dataset(path: str, samples) -> None:
    write_ndjson(path, (sample_to_record(s) for s in samples))


def read_dataset(path: str) -> list:
    return [sample_from_record(record, line) for line, record in read_ndjson(path)]


def load_layouts(path: str) -> dict[str, SceneLayout]:
    """Read an NDJSON file of {id, layout} overrides for evaluation."""
    layouts: dict[str, SceneLayout] = {}
    for lineno, record in read_ndjson(path):
        if "id" not in record or "layout" not in record:
            raise DatasetError("layout record needs 'id' and 'layout'", line=lineno)
        try:
            layouts[record["id"]] = parse_wire_layout(record["layout"])
        except (WireFormatError, DuplicateIdError, ValueError) as exc:
            raise DatasetError(str(exc), line=lineno) from exc
    return layouts
