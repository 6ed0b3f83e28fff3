"""Simulated perception: read objects out of a symbolic scene, with noise.

The perceiver answers attributed-name queries against the scene's object
table, so it only ever reports objects the caller asked about. Depth is
never copied from the stored field: it is recomputed as the mean of the
scene's depth map over the perceived rectangle, which keeps the reported
value honest even when the box was jittered. On a consistent scene with
all noise rates at zero the output equals the scene layout restricted to
the queried objects, field for field.

Noise knobs, applied per object in a fixed order: detection dropout,
box jitter, depth read noise, facing misreads (uniform over the other
buckets), and spurious duplicates appended after the main sweep.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field

from .scene import (
    BBox,
    BUCKETS,
    FacingDirection,
    SceneLayout,
    SceneObject,
    object_depth,
    rect_mask,
)

_MIN_SIDE = 0.05
_SNAP_EPS = 1e-9


@dataclass(frozen=True)
class PerceptionConfig:
    bbox_jitter_sigma: float = 0.0
    depth_sigma: float = 0.0
    facing_flip_rate: float = 0.0
    dropout_rate: float = 0.0
    duplicate_rate: float = 0.0
    seed: int = 78

    def __post_init__(self):
        for name in ("bbox_jitter_sigma", "depth_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("facing_flip_rate", "dropout_rate", "duplicate_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")

    @property
    def noiseless(self) -> bool:
        return (
            self.bbox_jitter_sigma == 0.0
            and self.depth_sigma == 0.0
            and self.facing_flip_rate == 0.0
            and self.dropout_rate == 0.0
            and self.duplicate_rate == 0.0
        )


ZERO_NOISE = PerceptionConfig()


@dataclass(frozen=True)
class PerceptionEvent:
    """One realized perturbation, for cross-checking seeded runs."""

    kind: str  # dropout | bbox-jitter | depth-noise | facing-flip | duplicate
    object_id: int
    detail: str = field(default="", compare=False)


def derive_seed(base: int, *parts) -> int:
    """Stable per-(sample, round) RNG seed from a base seed and labels."""
    text = "|".join([str(base), *map(str, parts)])
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def _query_match(obj: SceneObject, queries) -> bool:
    return any(
        obj.name == q.name and set(q.attributes) <= set(obj.attributes) for q in queries
    )


def _jitter_bbox(rng: random.Random, b: BBox, sigma: float) -> BBox:
    w = min(max(_MIN_SIDE, b.w + rng.gauss(0.0, sigma)), 1.0)
    h = min(max(_MIN_SIDE, b.h + rng.gauss(0.0, sigma)), 1.0)
    x = min(max(0.0, b.x + rng.gauss(0.0, sigma)), 1.0 - w)
    y = min(max(0.0, b.y + rng.gauss(0.0, sigma)), 1.0 - h)
    return BBox(x, y, w, h)


def _read_depth(scene, bbox: BBox, stored: float) -> float:
    d = object_depth(scene.depth, rect_mask(scene.depth, bbox))
    # mean of a uniform patch can pick up float dust; keep identity exact
    return stored if abs(d - stored) < _SNAP_EPS else d


def _misread_facing(rng: random.Random, facing: FacingDirection) -> FacingDirection:
    pool = [b for b in BUCKETS if b is not facing]
    return rng.choice(pool)


def _duplicate_bbox(b: BBox) -> BBox:
    x = min(max(0.0, 1.0 - b.x - b.w), 1.0 - b.w)
    if abs(x - b.x) < _MIN_SIDE:  # centered object: mirroring lands on itself
        x = min(1.0 - b.w, b.x + 0.25) if b.x + 0.25 + b.w <= 1.0 else max(0.0, b.x - 0.25)
    return BBox(x, b.y, b.w, b.h)


def perceive_with_log(scene, queries, cfg: PerceptionConfig, seed: int | None = None):
    """Like perceive, but also returns the realized perturbation events."""
    if not queries:
        raise ValueError("queries must be nonempty")
    rng = random.Random(cfg.seed if seed is None else seed)
    events: list[PerceptionEvent] = []
    detected: list[SceneObject] = []

    for obj in scene.layout.objects:
        if not _query_match(obj, queries):
            continue
        if cfg.dropout_rate > 0 and rng.random() < cfg.dropout_rate:
            events.append(PerceptionEvent("dropout", obj.object_id, obj.name))
            continue
        bbox = obj.bbox
        if cfg.bbox_jitter_sigma > 0:
            bbox = _jitter_bbox(rng, bbox, cfg.bbox_jitter_sigma)
            events.append(
                PerceptionEvent("bbox-jitter", obj.object_id, f"{obj.bbox.as_list()} -> {bbox.as_list()}")
            )
        depth = _read_depth(scene, bbox, obj.depth)
        if cfg.depth_sigma > 0:
            noised = min(1.0, max(0.0, depth + rng.gauss(0.0, cfg.depth_sigma)))
            events.append(PerceptionEvent("depth-noise", obj.object_id, f"{depth:.4f} -> {noised:.4f}"))
            depth = noised
        facing = obj.facing
        if cfg.facing_flip_rate > 0 and rng.random() < cfg.facing_flip_rate:
            facing = _misread_facing(rng, facing)
            events.append(
                PerceptionEvent("facing-flip", obj.object_id, f"{obj.facing.value} -> {facing.value}")
            )
        detected.append(obj.replace(bbox=bbox, depth=depth, facing=facing))

    if cfg.duplicate_rate > 0:
        next_id = max(
            [o.object_id for o in detected] + [scene.layout.max_object_id()], default=0
        ) + 1
        clones: list[SceneObject] = []
        for obj in detected:
            if rng.random() < cfg.duplicate_rate:
                bbox = _duplicate_bbox(obj.bbox)
                clone = SceneObject(
                    name=obj.name,
                    attributes=obj.attributes,
                    object_id=next_id,
                    bbox=bbox,
                    depth=_read_depth(scene, bbox, obj.depth),
                    facing=obj.facing,
                )
                events.append(PerceptionEvent("duplicate", obj.object_id, f"clone #{next_id}"))
                clones.append(clone)
                next_id += 1
        detected.extend(clones)

    layout = SceneLayout(tuple(detected), scene.layout.background)
    return layout, tuple(events)


def perceive(scene, queries, cfg: PerceptionConfig, seed: int | None = None) -> SceneLayout:
    """Detect the queried objects in a symbolic scene under the noise model."""
    layout, _ = perceive_with_log(scene, queries, cfg, seed=seed)
    return layout
