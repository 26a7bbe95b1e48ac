"""Bounding-box arithmetic: IoU, greedy NMS, and grid anchor enumeration.

Boxes are axis-aligned rectangles in image coordinates (origin top-left,
x right, y down) with continuous edges and a confidence score in [0, 1].
All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["BBox", "AnchorConfig", "iou", "nms", "generate_anchors", "clip_box"]


@dataclass(frozen=True)
class BBox:
    """Axis-aligned rectangle with a confidence score.

    Invariants (checked at construction): x_min < x_max, y_min < y_max,
    0 <= score <= 1.  Degenerate (zero-area) boxes are rejected.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    score: float = 0.0

    def __post_init__(self):
        # Normalize to plain floats so boxes built from numpy scalars stay
        # JSON-serializable and hash/compare consistently.
        for name in ("x_min", "y_min", "x_max", "y_max", "score"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"degenerate box: ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def contains_point(self, x: float, y: float) -> bool:
        """Closed-box membership test."""
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def scaled(self, factor: float) -> "BBox":
        """Multiply all coordinates by ``factor`` (score unchanged)."""
        return BBox(
            self.x_min * factor,
            self.y_min * factor,
            self.x_max * factor,
            self.y_max * factor,
            self.score,
        )

    def with_score(self, score: float) -> "BBox":
        return BBox(self.x_min, self.y_min, self.x_max, self.y_max, score)


@dataclass(frozen=True)
class AnchorConfig:
    """Grid anchor parameters: a base edge length in pixels, per-anchor size
    multipliers, height/width aspect ratios, and the spacing between anchor
    centers."""

    base_size: float = 16.0
    scales: tuple[float, ...] = (2.0, 4.0, 8.0)
    ratios: tuple[float, ...] = (0.5, 1.0, 2.0)
    stride: float = 16.0

    def __post_init__(self):
        if self.base_size <= 0 or self.stride <= 0:
            raise ValueError("base_size and stride must be positive")
        if not self.scales or not self.ratios:
            raise ValueError("scales and ratios must be non-empty")
        if any(s <= 0 for s in self.scales) or any(r <= 0 for r in self.ratios):
            raise ValueError("scales and ratios must be strictly positive")


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0.0 when disjoint."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def nms(boxes: list[BBox], iou_threshold: float) -> list[BBox]:
    """Greedy non-maximum suppression.

    Repeatedly keeps the highest-score box and removes every remaining box
    whose IoU with it is strictly greater than ``iou_threshold``.  Ties on
    score are broken by input order (earlier box wins).  The result is the
    kept subset ordered by descending score.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold {iou_threshold} outside [0, 1]")
    if not boxes:
        return []

    coords = np.array(
        [[b.x_min, b.y_min, b.x_max, b.y_max] for b in boxes], dtype=np.float64
    )
    scores = np.array([b.score for b in boxes], dtype=np.float64)
    areas = (coords[:, 2] - coords[:, 0]) * (coords[:, 3] - coords[:, 1])
    # Stable sort keeps input order among equal scores.
    order = np.argsort(-scores, kind="stable")

    kept: list[int] = []
    while order.size > 0:
        i = order[0]
        kept.append(int(i))
        rest = order[1:]
        iw = np.minimum(coords[i, 2], coords[rest, 2]) - np.maximum(
            coords[i, 0], coords[rest, 0]
        )
        ih = np.minimum(coords[i, 3], coords[rest, 3]) - np.maximum(
            coords[i, 1], coords[rest, 1]
        )
        inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
        overlap = inter / (areas[i] + areas[rest] - inter)
        order = rest[overlap <= iou_threshold]
    return [boxes[i] for i in kept]


def clip_box(box: BBox, image_w: float, image_h: float) -> BBox | None:
    """Clip a box to ``[0, image_w] x [0, image_h]``; None if nothing remains."""
    x_min = max(0.0, box.x_min)
    y_min = max(0.0, box.y_min)
    x_max = min(float(image_w), box.x_max)
    y_max = min(float(image_h), box.y_max)
    if x_min >= x_max or y_min >= y_max:
        return None
    return BBox(x_min, y_min, x_max, y_max, box.score)


def generate_anchors(cfg: AnchorConfig, image_w: int, image_h: int) -> list[BBox]:
    """Enumerate candidate boxes over a stride-spaced grid of centers.

    At every center and for each (scale, ratio) pair, a box of width
    ``base * scale / sqrt(ratio)`` and height ``base * scale * sqrt(ratio)``
    is emitted (area is preserved across ratios), clipped to the image.
    Centers sit at ``stride/2 + k*stride`` strictly inside the image, so
    clipping never empties an anchor.  Scores are 0.
    """
    if image_w <= 0 or image_h <= 0:
        raise ValueError("image dimensions must be positive")

    xs = np.arange(cfg.stride / 2.0, image_w, cfg.stride)
    ys = np.arange(cfg.stride / 2.0, image_h, cfg.stride)
    shapes = [
        (cfg.base_size * s / math.sqrt(r), cfg.base_size * s * math.sqrt(r))
        for s in cfg.scales
        for r in cfg.ratios
    ]

    anchors: list[BBox] = []
    for cy in ys:
        for cx in xs:
            for w, h in shapes:
                box = clip_box(
                    BBox(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0),
                    image_w,
                    image_h,
                )
                assert box is not None  # centers are strictly inside the image
                anchors.append(box)
    return anchors
