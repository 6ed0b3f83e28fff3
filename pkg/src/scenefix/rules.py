"""Perspective conversion rules: intrinsic relations rewritten to camera frame.

A clause like "A is left of B from B's perspective" names a side of B in
B's own frame.  What that side looks like from the camera depends only on
which way B faces, quantized to eight 45-degree buckets.  The full table
has 32 entries (8 facings x 4 relations); each facing induces a
permutation of the four relations, and every permutation here is an
involution (applying it twice gives the identity).

Rules carry catalog ids "1a".."8d": facings are numbered 1..8 in the
order Front, ForwardLeft, Left, BackwardLeft, Back, BackwardRight, Right,
ForwardRight, and relations are lettered a=left, b=right, c=front,
d=back.  Test failures and exports cite these ids.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .dsl import Camera, Intrinsic, RelationClause, SpatialExpression
from .errors import FacingUnknownError, UnknownObjectError
from .scene import FacingDirection, Relation, SceneLayout

_L, _R, _F, _B = Relation.LEFT, Relation.RIGHT, Relation.FRONT, Relation.BACK

# facing -> {intrinsic relation -> camera relation}
# Facing the camera (fully or diagonally) mirrors left/right; facing away
# keeps them; facing left or right rotates the axes into depth.
_PERMUTATIONS: dict[FacingDirection, dict[Relation, Relation]] = {
    FacingDirection.FRONT: {_L: _R, _R: _L, _F: _F, _B: _B},
    FacingDirection.FORWARD_LEFT: {_L: _R, _R: _L, _F: _F, _B: _B},
    FacingDirection.FORWARD_RIGHT: {_L: _R, _R: _L, _F: _F, _B: _B},
    FacingDirection.LEFT: {_L: _F, _R: _B, _F: _L, _B: _R},
    FacingDirection.RIGHT: {_L: _B, _R: _F, _F: _R, _B: _L},
    FacingDirection.BACK: {_L: _L, _R: _R, _F: _B, _B: _F},
    FacingDirection.BACKWARD_LEFT: {_L: _L, _R: _R, _F: _B, _B: _F},
    FacingDirection.BACKWARD_RIGHT: {_L: _L, _R: _R, _F: _B, _B: _F},
}

_FACING_NUMBER = {
    FacingDirection.FRONT: 1,
    FacingDirection.FORWARD_LEFT: 2,
    FacingDirection.LEFT: 3,
    FacingDirection.BACKWARD_LEFT: 4,
    FacingDirection.BACK: 5,
    FacingDirection.BACKWARD_RIGHT: 6,
    FacingDirection.RIGHT: 7,
    FacingDirection.FORWARD_RIGHT: 8,
}

_RELATION_LETTER = {_L: "a", _R: "b", _F: "c", _B: "d"}


@dataclass(frozen=True)
class ConversionRule:
    rule_id: str
    facing: FacingDirection
    relation: Relation
    camera_relation: Relation


RULE_TABLE: tuple[ConversionRule, ...] = tuple(
    ConversionRule(
        rule_id=f"{_FACING_NUMBER[facing]}{_RELATION_LETTER[rel]}",
        facing=facing,
        relation=rel,
        camera_relation=_PERMUTATIONS[facing][rel],
    )
    for facing in sorted(_PERMUTATIONS, key=_FACING_NUMBER.get)
    for rel in (_L, _R, _F, _B)
)

_LOOKUP = {(r.facing, r.relation): r for r in RULE_TABLE}


def convert_relation(relation: Relation, facing: FacingDirection) -> Relation:
    """Camera-frame equivalent of an intrinsic relation given the relatum facing."""
    if facing is FacingDirection.NONE:
        raise FacingUnknownError("cannot convert an intrinsic relation without a facing")
    return _LOOKUP[(facing, relation)].camera_relation


def rule_for(relation: Relation, facing: FacingDirection) -> ConversionRule:
    if facing is FacingDirection.NONE:
        raise FacingUnknownError("no rule applies to an unknown facing")
    return _LOOKUP[(facing, relation)]


def rules_records() -> list[dict]:
    """The table as plain records, for export and machine checking."""
    return [
        {
            "rule_id": r.rule_id,
            "facing": r.facing.value,
            "relation": r.relation.value,
            "camera_relation": r.camera_relation.value,
        }
        for r in RULE_TABLE
    ]


def resolve_relatum_facing(
    clause: RelationClause, expr: SpatialExpression, layout: SceneLayout
) -> FacingDirection:
    """Facing used to convert an intrinsic clause.

    An explicit facing assertion in the expression wins; otherwise the
    detected facing of the relatum object in the layout is used (lowest
    object id when the name matches several).  Raises UnknownObjectError
    when the relatum is absent from the layout and unasserted, and
    FacingUnknownError when it is present but carries no facing.
    """
    assert isinstance(clause.perspective, Intrinsic)
    anchor = clause.perspective.relatum
    asserted = expr.facing_asserted(anchor)
    if asserted is not None:
        return asserted
    candidates = layout.named(anchor)
    if not candidates:
        raise UnknownObjectError(f"relatum {anchor!r} not present in layout")
    facing = min(candidates, key=lambda o: o.object_id).facing
    if facing is FacingDirection.NONE:
        raise FacingUnknownError(f"no facing available for relatum {anchor!r}")
    return facing


def convert_expression(expr: SpatialExpression, layout: SceneLayout) -> SpatialExpression:
    """Rewrite every intrinsic clause of an expression into the camera frame.

    Mentions, facing assertions, negations and the background are kept
    verbatim.  Raises FacingUnknownError when any intrinsic clause has no
    resolvable facing (missing relatum included).
    """
    converted: list[RelationClause] = []
    for clause in expr.relations:
        if isinstance(clause.perspective, Camera):
            converted.append(clause)
            continue
        try:
            facing = resolve_relatum_facing(clause, expr, layout)
        except UnknownObjectError as exc:
            raise FacingUnknownError(str(exc)) from exc
        converted.append(
            RelationClause(
                target=clause.target,
                relation=convert_relation(clause.relation, facing),
                relatum=clause.relatum,
                perspective=Camera(),
            )
        )
    return replace(expr, relations=tuple(converted))
