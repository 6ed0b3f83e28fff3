"""Spatial expression grammar: parsing prompts into a small AST and back.

The grammar covers the prompt shapes the benchmark generator emits plus a
few common variants:

* binary relation clauses, e.g. "A red chicken is on the left of a chair
  from the chair's view", with an optional perspective phrase that is
  either camera-anchored ("from the camera's perspective", "relative to
  the camera", "from the camera angle") or anchored on the reference
  object ("from the chair's perspective");
* unary positional clauses against the image midline, e.g. "a car on the
  left", modeled as a clause whose relatum is the reserved ``FRAME``;
* facing sentences, e.g. "The sheep is facing away from the camera." or
  "... facing forward-left relative to the camera.";
* bare noun phrases ("a cat"), negation sentences ("No backpacks.") and a
  fixed set of background openers ("An oil painting of ...").

Anything else raises ExpressionParseError with the byte offset of the
segment that failed, rather than guessing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ExpressionParseError
from .scene import DEFAULT_BACKGROUND, FacingDirection, Relation

# Reserved relatum name for unary clauses checked against the image midline.
FRAME = "frame"

ARTICLES = ("a", "an", "the", "another", "one")

# Closed attribute vocabulary: leading noun-phrase words found here become
# attributes, everything after them is the (possibly multi-word) noun.
COLOR_WORDS = (
    "red", "orange", "yellow", "green", "blue", "purple", "pink", "brown",
    "black", "white", "gray", "grey", "cyan", "golden", "silver",
)
SIZE_WORDS = ("small", "large", "big", "tiny", "huge", "little")
ATTRIBUTE_WORDS = frozenset(COLOR_WORDS + SIZE_WORDS)


@dataclass(frozen=True)
class ObjectMention:
    name: str
    attributes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))


@dataclass(frozen=True)
class Camera:
    """Camera-anchored perspective (the default reading)."""


@dataclass(frozen=True)
class Intrinsic:
    """Perspective anchored on a mentioned object, stored by noun."""

    relatum: str


CAMERA = Camera()


@dataclass(frozen=True)
class RelationClause:
    target: str
    relation: Relation
    relatum: str
    perspective: Camera | Intrinsic = CAMERA

    def __post_init__(self):
        if self.target == self.relatum:
            raise ValueError(f"clause relates {self.target!r} to itself")
        if self.relatum == FRAME and not isinstance(self.perspective, Camera):
            raise ValueError("frame-relative clauses are camera-anchored by definition")


@dataclass(frozen=True)
class FacingAssertion:
    subject: str
    facing: FacingDirection

    def __post_init__(self):
        if self.facing is FacingDirection.NONE:
            raise ValueError("a facing assertion needs a concrete bucket")


@dataclass(frozen=True)
class SpatialExpression:
    mentions: tuple[ObjectMention, ...]
    relations: tuple[RelationClause, ...] = ()
    facings: tuple[FacingAssertion, ...] = ()
    negations: tuple[str, ...] = ()
    background: str = DEFAULT_BACKGROUND
    raw_text: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "mentions", tuple(self.mentions))
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(self, "facings", tuple(self.facings))
        object.__setattr__(self, "negations", tuple(self.negations))
        names = [m.name for m in self.mentions]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate mention names: {names}")
        known = set(names)
        for clause in self.relations:
            if clause.target not in known:
                raise ValueError(f"clause target {clause.target!r} is not mentioned")
            if clause.relatum != FRAME and clause.relatum not in known:
                raise ValueError(f"clause relatum {clause.relatum!r} is not mentioned")
            if isinstance(clause.perspective, Intrinsic) and clause.perspective.relatum not in known:
                raise ValueError(
                    f"perspective anchor {clause.perspective.relatum!r} is not mentioned"
                )
        for assertion in self.facings:
            if assertion.subject not in known:
                raise ValueError(f"facing subject {assertion.subject!r} is not mentioned")

    def mention_named(self, name: str) -> ObjectMention | None:
        for m in self.mentions:
            if m.name == name:
                return m
        return None

    def facing_asserted(self, name: str) -> FacingDirection | None:
        for a in self.facings:
            if a.subject == name:
                return a.facing
        return None


# --------------------------------------------------------------------------
# parsing

_BG_RE = re.compile(
    r"^(?P<bg>(?:a|an)\s+"
    r"(?:realistic\s+(?:image|photo)|oil\s+painting|animated-style\s+image|photograph|photo)"
    r"(?:\s+at\s+the\s+beach|\s+on\s+the\s+sea)?"
    r"(?:\s+of\s+(?:a|an)\s+(?:landscape\s+)?scene)?)"
    r"\s+(?P<sep>of|with|depicting|without)\s+",
    re.IGNORECASE,
)

_BINARY_RE = re.compile(
    r"^(?P<target>.+?)\s+(?:is\s+|are\s+)?(?:located\s+)?"
    r"(?:on\s+the\s+|to\s+the\s+|in\s+|at\s+the\s+)?"
    r"(?P<rel>left|right|front|back)\s+(?:of|side\s+of)\s+"
    r"(?P<relatum>.+?)"
    r"(?P<persp>\s+from\s+.+|\s+relative\s+to\s+.+)?$",
    re.IGNORECASE,
)

_UNARY_RE = re.compile(
    r"^(?P<target>.+?)\s+(?:is\s+|are\s+)?(?:on\s+the\s+|to\s+the\s+)"
    r"(?P<rel>left|right)"
    r"(?P<persp>\s+from\s+.+|\s+relative\s+to\s+.+)?$",
    re.IGNORECASE,
)

_FACING_RE = re.compile(
    r"^(?P<subject>.+?)\s+(?:is|are)\s+facing\s+(?P<dir>.+)$",
    re.IGNORECASE,
)

_NEGATION_RE = re.compile(r"^(?:without|no|there\s+(?:is|are)\s+no)\s+(?P<np>.+)$", re.IGNORECASE)

_PERSP_VIEW_RE = re.compile(
    r"^from\s+(?:the\s+)?(?P<owner>.+?)(?:'s)?\s+(?:perspective|view|viewpoint|angle)$",
    re.IGNORECASE,
)
_PERSP_REL_RE = re.compile(r"^relative\s+to\s+(?:the\s+)?(?P<owner>.+?)$", re.IGNORECASE)

_CAMERA_OWNERS = frozenset({"camera", "observer", "viewer", "me"})

_FACING_CORE = {
    "toward": FacingDirection.FRONT,
    "towards": FacingDirection.FRONT,
    "front": FacingDirection.FRONT,
    "forward": FacingDirection.FRONT,
    "away": FacingDirection.BACK,
    "back": FacingDirection.BACK,
    "backward": FacingDirection.BACK,
    "left": FacingDirection.LEFT,
    "right": FacingDirection.RIGHT,
    "forward-left": FacingDirection.FORWARD_LEFT,
    "forward left": FacingDirection.FORWARD_LEFT,
    "forward-right": FacingDirection.FORWARD_RIGHT,
    "forward right": FacingDirection.FORWARD_RIGHT,
    "backward-left": FacingDirection.BACKWARD_LEFT,
    "backward left": FacingDirection.BACKWARD_LEFT,
    "backward-right": FacingDirection.BACKWARD_RIGHT,
    "backward right": FacingDirection.BACKWARD_RIGHT,
    "the camera": FacingDirection.FRONT,
}

_FACING_SUFFIXES = (
    " relative to the camera",
    " relative to the observer",
    " relative to camera",
    " from the camera",
    " from camera",
    " the camera",
    " to the",
)


def _parse_np(text: str, offset: int) -> tuple[str, tuple[str, ...]]:
    words = text.strip().split()
    if words and words[0].lower() in ARTICLES:
        words = words[1:]
    attrs: list[str] = []
    while len(words) > 1 and words[0].lower() in ATTRIBUTE_WORDS:
        attrs.append(words.pop(0).lower())
    if not words:
        raise ExpressionParseError(f"empty noun phrase in {text!r}", offset)
    noun = " ".join(w.lower() for w in words)
    if not re.fullmatch(r"[a-z][a-z -]*", noun):
        raise ExpressionParseError(f"cannot read {text!r} as a noun phrase", offset)
    return noun, tuple(attrs)


def _parse_perspective(text: str | None, offset: int) -> Camera | Intrinsic:
    if text is None or not text.strip():
        return CAMERA
    t = text.strip().rstrip(".").strip()
    m = _PERSP_VIEW_RE.match(t) or _PERSP_REL_RE.match(t)
    if m is None:
        raise ExpressionParseError(f"unrecognized perspective phrase {text!r}", offset)
    owner = m.group("owner").strip()
    if owner.endswith("'s"):
        owner = owner[:-2].strip()
    if owner.lower() in _CAMERA_OWNERS:
        return CAMERA
    noun, _ = _parse_np(owner, offset)
    return Intrinsic(noun)


def _parse_facing_phrase(text: str, offset: int) -> FacingDirection:
    t = " ".join(text.strip().rstrip(".").lower().split())
    changed = True
    while changed:
        changed = False
        for suffix in _FACING_SUFFIXES:
            if t.endswith(suffix) and t != suffix.strip():
                t = t[: -len(suffix)].strip()
                changed = True
    if t.startswith("away from"):
        t = "away"
    if t.startswith("to the ") and t != "the camera":
        t = t[len("to the ") :]
    facing = _FACING_CORE.get(t)
    if facing is None:
        raise ExpressionParseError(f"unrecognized facing phrase {text!r}", offset)
    return facing


class _Builder:
    """Accumulates mentions/clauses in first-occurrence order."""

    def __init__(self):
        self.order: list[str] = []
        self.attrs: dict[str, list[str]] = {}
        self.relations: list[RelationClause] = []
        self.facings: list[FacingAssertion] = []
        self.negations: list[str] = []

    def mention(self, noun: str, attrs: tuple[str, ...]) -> str:
        if noun not in self.attrs:
            self.order.append(noun)
            self.attrs[noun] = list(attrs)
        else:
            for a in attrs:
                if a not in self.attrs[noun]:
                    self.attrs[noun].append(a)
        return noun

    def mentions(self) -> tuple[ObjectMention, ...]:
        return tuple(ObjectMention(n, tuple(self.attrs[n])) for n in self.order)


def _segments(text: str, base: int):
    """Yield (segment, byte_offset) pairs: sentences split on '.', then ' and '."""
    for sm in re.finditer(r"[^.]+", text):
        sentence = sm.group(0)
        start = base + len(text[: sm.start()].encode("utf-8"))
        pos = 0
        for am in re.finditer(r"\s+and\s+", sentence, re.IGNORECASE):
            seg = sentence[pos : am.start()]
            if seg.strip():
                yield seg.strip(), start + len(sentence[:pos].encode("utf-8"))
            pos = am.end()
        seg = sentence[pos:]
        if seg.strip():
            yield seg.strip(), start + len(sentence[:pos].encode("utf-8"))


def parse_expression(text: str) -> SpatialExpression:
    """Parse a prompt into a SpatialExpression.

    Raises ExpressionParseError (with a byte offset) on anything outside
    the supported grammar.
    """
    if not text or not text.strip():
        raise ExpressionParseError("empty expression", 0)
    work = text.strip()
    background = DEFAULT_BACKGROUND
    base = len(text.encode("utf-8")) - len(text.lstrip().encode("utf-8"))

    bg_match = _BG_RE.match(work)
    if bg_match is not None:
        raw_bg = bg_match.group("bg")
        background = raw_bg[0].upper() + raw_bg[1:]
        sep = bg_match.group("sep").lower()
        # "without" introduces a negation and must stay in the clause text
        cut = bg_match.end() if sep != "without" else bg_match.start("sep")
        base += len(work[:cut].encode("utf-8"))
        work = work[cut:]

    builder = _Builder()
    for segment, offset in _segments(work, base):
        _parse_segment(segment, offset, builder)

    expr = SpatialExpression(
        mentions=builder.mentions(),
        relations=tuple(builder.relations),
        facings=tuple(builder.facings),
        negations=tuple(builder.negations),
        background=background,
        raw_text=text,
    )
    return expr


def _parse_segment(segment: str, offset: int, b: _Builder) -> None:
    m = _FACING_RE.match(segment)
    if m is not None:
        noun, attrs = _parse_np(m.group("subject"), offset)
        b.mention(noun, attrs)
        b.facings.append(FacingAssertion(noun, _parse_facing_phrase(m.group("dir"), offset)))
        return

    m = _NEGATION_RE.match(segment)
    if m is not None:
        noun, _ = _parse_np(m.group("np"), offset)
        if noun not in b.negations:
            b.negations.append(noun)
        return

    m = _BINARY_RE.match(segment)
    if m is not None:
        target, t_attrs = _parse_np(m.group("target"), offset)
        relatum, r_attrs = _parse_np(m.group("relatum"), offset)
        if target == relatum:
            raise ExpressionParseError(f"clause relates {target!r} to itself", offset)
        perspective = _parse_perspective(m.group("persp"), offset)
        b.mention(target, t_attrs)
        b.mention(relatum, r_attrs)
        b.relations.append(
            RelationClause(target, Relation(m.group("rel").lower()), relatum, perspective)
        )
        return

    m = _UNARY_RE.match(segment)
    if m is not None:
        perspective = _parse_perspective(m.group("persp"), offset)
        if not isinstance(perspective, Camera):
            raise ExpressionParseError(
                f"unary positional clause cannot take an object perspective: {segment!r}", offset
            )
        target, t_attrs = _parse_np(m.group("target"), offset)
        b.mention(target, t_attrs)
        b.relations.append(RelationClause(target, Relation(m.group("rel").lower()), FRAME, CAMERA))
        return

    # bare noun phrase
    try:
        noun, attrs = _parse_np(segment, offset)
    except ExpressionParseError:
        raise ExpressionParseError(f"cannot parse segment {segment!r}", offset) from None
    if noun.split()[0] in ("facing",):
        raise ExpressionParseError(f"cannot parse segment {segment!r}", offset)
    b.mention(noun, attrs)


# --------------------------------------------------------------------------
# rendering

_REL_PHRASE = {
    Relation.LEFT: "is to the left of",
    Relation.RIGHT: "is to the right of",
    Relation.FRONT: "is in front of",
    Relation.BACK: "is back of",
}

_FACING_PHRASE = {
    FacingDirection.FRONT: "toward the camera",
    FacingDirection.BACK: "away from the camera",
    FacingDirection.LEFT: "left relative to the camera",
    FacingDirection.RIGHT: "right relative to the camera",
    FacingDirection.FORWARD_LEFT: "forward-left relative to the camera",
    FacingDirection.FORWARD_RIGHT: "forward-right relative to the camera",
    FacingDirection.BACKWARD_LEFT: "backward-left relative to the camera",
    FacingDirection.BACKWARD_RIGHT: "backward-right relative to the camera",
}


def _np_text(mention: ObjectMention) -> str:
    words = list(mention.attributes) + [mention.name]
    phrase = " ".join(words)
    article = "an" if phrase[0] in "aeiou" else "a"
    return f"{article} {phrase}"


def _persp_text(perspective: Camera | Intrinsic) -> str:
    if isinstance(perspective, Camera):
        return " from the camera's perspective"
    return f" from the {perspective.relatum}'s perspective"


def render_expression(expr: SpatialExpression) -> str:
    """Render an AST back to a canonical prompt.

    Canonical form: relation clauses joined by " and " into one sentence
    (binary clauses always carry an explicit perspective phrase), facing
    assertions and negations as separate sentences.  An expression with
    no relations and no facing assertions renders as bare noun phrases.
    parse_expression(render_expression(e)) == e holds for well-formed
    expressions whose mentions are listed in first-reference order.
    """
    lookup = {m.name: m for m in expr.mentions}
    referenced: set[str] = set()
    clause_parts: list[str] = []
    for clause in expr.relations:
        target = lookup[clause.target]
        referenced.add(clause.target)
        if clause.relatum == FRAME:
            side = "left" if clause.relation is Relation.LEFT else "right"
            if clause.relation not in (Relation.LEFT, Relation.RIGHT):
                raise ValueError("frame-relative clauses are horizontal only")
            clause_parts.append(f"{_np_text(target)} is on the {side}")
        else:
            relatum = lookup[clause.relatum]
            referenced.add(clause.relatum)
            clause_parts.append(
                f"{_np_text(target)} {_REL_PHRASE[clause.relation]} {_np_text(relatum)}"
                f"{_persp_text(clause.perspective)}"
            )

    for name in lookup:
        if name not in referenced and (expr.relations or expr.facings or expr.negations):
            # keep unreferenced mentions visible so they survive a round-trip
            if all(a.subject != name for a in expr.facings):
                clause_parts.append(_np_text(lookup[name]))

    sentences: list[str] = []
    if clause_parts:
        body = " and ".join(clause_parts)
        if expr.background == DEFAULT_BACKGROUND:
            body = body[0].upper() + body[1:]
        sentences.append(body + ".")
    for assertion in expr.facings:
        sentences.append(f"The {assertion.subject} is facing {_FACING_PHRASE[assertion.facing]}.")
    for noun in expr.negations:
        sentences.append(f"No {noun}.")

    if not sentences:
        body = " and ".join(_np_text(m) for m in expr.mentions)
        if not body:
            return body
        if expr.background != DEFAULT_BACKGROUND:
            return f"{expr.background} of {body}."
        return body[0].upper() + body[1:] + "."

    text = " ".join(sentences)
    if expr.background != DEFAULT_BACKGROUND:
        bg = expr.background
        text = f"{bg} of {text[0].lower() + text[1:]}" if clause_parts else f"{bg} of {text}"
    return text
