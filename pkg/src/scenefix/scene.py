"""Core scene geometry: boxes, facing buckets, depth grids, object layouts.

Conventions shared by the whole package:

* Image coordinates are fractions of the frame, origin at the top-left
  corner.  A bounding box stores its top-left corner plus width/height.
* Depth values live in [0, 1]; 1.0 is nearest to the camera.
* Orientation angles are degrees in [0, 360), measured counter-clockwise
  seen from above, with 0 facing the camera.  90 is therefore the center
  of the Left bucket and 180 faces away from the camera.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DuplicateIdError, EmptyRegionError

# Tolerance for boxes that touch the right/bottom frame edge.
EPS_CLAMP = 1e-9

DEFAULT_BACKGROUND = "A realistic image"


class Relation(Enum):
    """The four spatial relations understood by the expression grammar."""

    LEFT = "left"
    RIGHT = "right"
    FRONT = "front"
    BACK = "back"

    @property
    def horizontal(self) -> bool:
        return self in (Relation.LEFT, Relation.RIGHT)

    @property
    def opposite(self) -> "Relation":
        return _OPPOSITE[self]


_OPPOSITE = {
    Relation.LEFT: Relation.RIGHT,
    Relation.RIGHT: Relation.LEFT,
    Relation.FRONT: Relation.BACK,
    Relation.BACK: Relation.FRONT,
}


class FacingDirection(Enum):
    """Eight 45-degree orientation buckets plus the unknown marker.

    ``NONE`` never comes out of :func:`angle_to_facing`; it is produced only
    by perception (no orientation evidence) or by parsing wire strings.
    """

    FRONT = "Front"
    FORWARD_LEFT = "ForwardLeft"
    LEFT = "Left"
    BACKWARD_LEFT = "BackwardLeft"
    BACK = "Back"
    BACKWARD_RIGHT = "BackwardRight"
    RIGHT = "Right"
    FORWARD_RIGHT = "ForwardRight"
    NONE = "None"


# Counter-clockwise bucket order starting at the camera-facing bucket.
BUCKETS: tuple[FacingDirection, ...] = (
    FacingDirection.FRONT,
    FacingDirection.FORWARD_LEFT,
    FacingDirection.LEFT,
    FacingDirection.BACKWARD_LEFT,
    FacingDirection.BACK,
    FacingDirection.BACKWARD_RIGHT,
    FacingDirection.RIGHT,
    FacingDirection.FORWARD_RIGHT,
)

_BUCKET_CENTER = {f: 45.0 * i for i, f in enumerate(BUCKETS)}


def angle_to_facing(angle: float) -> FacingDirection:
    """Quantize a yaw angle in [0, 360) into its 45-degree bucket.

    Buckets are centered on multiples of 45: Front covers [337.5, 360) and
    [0, 22.5), ForwardLeft covers [22.5, 67.5), and so on counter-clockwise.
    Callers normalize angles first; out-of-range or non-finite input raises
    ``ValueError``.
    """
    if not math.isfinite(angle):
        raise ValueError(f"angle must be finite, got {angle!r}")
    if not 0.0 <= angle < 360.0:
        raise ValueError(f"angle must lie in [0, 360), got {angle!r}")
    return BUCKETS[int(((angle + 22.5) % 360.0) // 45.0)]


def bucket_center(facing: FacingDirection) -> float:
    """Center angle of a facing bucket, in degrees."""
    if facing is FacingDirection.NONE:
        raise ValueError("the unknown facing has no bucket center")
    return _BUCKET_CENTER[facing]


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in fractional image coordinates."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"bbox field {name} must be finite, got {v!r}")
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValueError(f"bbox corner out of frame: ({self.x}, {self.y})")
        if self.w <= 0.0 or self.h <= 0.0:
            raise ValueError(f"bbox needs positive size, got {self.w} x {self.h}")
        if self.x + self.w > 1.0 + EPS_CLAMP or self.y + self.h > 1.0 + EPS_CLAMP:
            raise ValueError(
                f"bbox extends past the frame: x+w={self.x + self.w}, y+h={self.y + self.h}"
            )

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]


def bbox_center(b: BBox) -> tuple[float, float]:
    """Center point (cx, cy) of a box."""
    return (b.cx, b.cy)


def bbox_iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes."""
    ix = max(0.0, min(a.x + a.w, b.x + b.w) - max(a.x, b.x))
    iy = max(0.0, min(a.y + a.h, b.y + b.h) - max(a.y, b.y))
    inter = ix * iy
    if inter == 0.0:
        return 0.0
    return inter / (a.w * a.h + b.w * b.h - inter)


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Immutable per-pixel depth grid, row-major, values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"depth map must be a non-empty 2-d grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("depth map contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("depth values must lie in [0, 1]")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @classmethod
    def filled(cls, width: int, height: int, value: float) -> "DepthMap":
        return cls(np.full((height, width), float(value), dtype=np.float64))


def rect_bounds(depth: DepthMap, b: BBox) -> tuple[int, int, int, int]:
    """Inclusive pixel bounds (col0, col1, row0, row1) of a box on a grid.

    A pixel belongs to the box when its center falls inside [x, x+w) x
    [y, y+h).  Raises EmptyRegionError when no center qualifies (box
    smaller than one pixel at this resolution).
    """
    w, h = depth.width, depth.height
    c0 = max(0, math.ceil(w * b.x - 0.5))
    c1 = min(w - 1, math.ceil(w * (b.x + b.w) - 0.5) - 1)
    r0 = max(0, math.ceil(h * b.y - 0.5))
    r1 = min(h - 1, math.ceil(h * (b.y + b.h) - 0.5) - 1)
    if c0 > c1 or r0 > r1:
        raise EmptyRegionError(f"box {b.as_list()} covers no pixel center on a {w}x{h} grid")
    return c0, c1, r0, r1


def rect_mask(depth: DepthMap, b: BBox) -> frozenset[tuple[int, int]]:
    """Set of (col, row) pixel coordinates whose centers fall inside the box."""
    c0, c1, r0, r1 = rect_bounds(depth, b)
    return frozenset((c, r) for r in range(r0, r1 + 1) for c in range(c0, c1 + 1))


def object_depth(depth: DepthMap, mask: frozenset[tuple[int, int]]) -> float:
    """Mean depth over a pixel mask: the object-level depth estimate."""
    if not mask:
        raise EmptyRegionError("cannot average depth over an empty mask")
    cols = np.fromiter((c for c, _ in mask), dtype=np.intp, count=len(mask))
    rows = np.fromiter((r for _, r in mask), dtype=np.intp, count=len(mask))
    if cols.min() < 0 or rows.min() < 0 or cols.max() >= depth.width or rows.max() >= depth.height:
        raise ValueError("mask indexes outside the depth grid")
    return float(depth.values[rows, cols].mean())


@dataclass(frozen=True)
class SceneObject:
    """One object instance: identity, appearance and pose."""

    name: str
    attributes: tuple[str, ...]
    object_id: int
    bbox: BBox
    depth: float
    facing: FacingDirection = FacingDirection.NONE

    def __post_init__(self):
        if not self.name or not self.name.strip():
            raise ValueError("object name must be non-empty")
        if not isinstance(self.object_id, int) or self.object_id < 1:
            raise ValueError(f"object id must be a positive integer, got {self.object_id!r}")
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if not math.isfinite(self.depth) or not 0.0 <= self.depth <= 1.0:
            raise ValueError(f"object depth must lie in [0, 1], got {self.depth!r}")
        if not isinstance(self.facing, FacingDirection):
            raise ValueError(f"facing must be a FacingDirection, got {self.facing!r}")

    def replace(self, **changes) -> "SceneObject":
        from dataclasses import replace as _replace

        return _replace(self, **changes)


@dataclass(frozen=True)
class SceneLayout:
    """An ordered collection of objects plus a free-text background."""

    objects: tuple[SceneObject, ...]
    background: str = DEFAULT_BACKGROUND

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        seen: set[int] = set()
        for obj in self.objects:
            if obj.object_id in seen:
                raise DuplicateIdError(f"duplicate object id {obj.object_id}")
            seen.add(obj.object_id)

    def find(self, object_id: int) -> SceneObject | None:
        for obj in self.objects:
            if obj.object_id == object_id:
                return obj
        return None

    def named(self, name: str) -> tuple[SceneObject, ...]:
        return tuple(obj for obj in self.objects if obj.name == name)

    def max_object_id(self) -> int:
        return max((obj.object_id for obj in self.objects), default=0)

    def with_objects(self, objects) -> "SceneLayout":
        return SceneLayout(tuple(objects), self.background)
