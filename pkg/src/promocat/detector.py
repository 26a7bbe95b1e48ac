"""Description-region detection behind a pluggable proposal provider.

The learned detector that would normally propose regions is treated as an
external system: providers hand back scored boxes and this module applies
the shared inference-time post-processing (confidence filter, NMS, resize
mapping).  Three providers ship here: a connected-component heuristic that
works on pixels, a file-backed provider replaying annotation boxes, and an
adapter around any callable.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, runtime_checkable

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .corpus import load_annotations
from .geometry import BBox, clip_box, nms
from .image import RasterImage, resize_longest_side

__all__ = [
    "DetectionConfig",
    "HeuristicSettings",
    "DetectionError",
    "ProposalSource",
    "HeuristicProposalSource",
    "FileProposalSource",
    "ExternalProposalSource",
    "heuristic_proposals",
    "load_proposals",
    "detect_regions",
]

log = logging.getLogger(__name__)


class DetectionError(Exception):
    """A proposal provider failed; message names the provider."""


@dataclass(frozen=True)
class DetectionConfig:
    """Inference-time post-processing knobs shared by all providers."""

    confidence_threshold: float = 0.4
    nms_iou_threshold: float = 0.5
    resize_target: int = 1024

    def __post_init__(self):
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError("confidence_threshold outside [0, 1]")
        if not 0.0 <= self.nms_iou_threshold <= 1.0:
            raise ValueError("nms_iou_threshold outside [0, 1]")
        if self.resize_target <= 0:
            raise ValueError("resize_target must be positive")


@dataclass(frozen=True)
class HeuristicSettings:
    """Connected-component text-block finder settings.

    ``dark_threshold`` of None picks the binarization level with Otsu's
    method on the luminance histogram.  Components whose boxes fall within
    ``merge_tolerance_factor`` times the median component height of each
    other (both axes) are merged into one block.
    """

    dark_threshold: float | None = None
    merge_tolerance_factor: float = 0.6
    min_component_area: int = 4

    def __post_init__(self):
        if self.merge_tolerance_factor < 0:
            raise ValueError("merge_tolerance_factor must be non-negative")
        if self.min_component_area < 1:
            raise ValueError("min_component_area must be positive")


@runtime_checkable
class ProposalSource(Protocol):
    """Provider seam: returns scored boxes in the passed image's coordinates."""

    name: str

    def propose(self, image: RasterImage) -> list[BBox]: ...


def _otsu(levels: np.ndarray) -> float:
    """Threshold between the two luminance populations (between-class
    variance maximization over the 256-bin histogram)."""
    hist = np.bincount(levels.ravel(), minlength=256).astype(np.float64)
    w0 = np.cumsum(hist)
    w1 = w0[-1] - w0
    moments = np.cumsum(hist * np.arange(256))
    mu0 = moments / np.maximum(w0, 1e-12)
    mu1 = (moments[-1] - moments) / np.maximum(w1, 1e-12)
    between = w0 * w1 * (mu0 - mu1) ** 2
    return float(np.argmax(between)) + 0.5


def heuristic_proposals(
    image: RasterImage, settings: HeuristicSettings | None = None
) -> list[BBox]:
    """Dark connected components merged into text blocks, scored by fill
    density (dark pixels / block area).  Deterministic; blank image → []."""
    settings = settings or HeuristicSettings()
    lum = image.luminance()
    if settings.dark_threshold is None:
        threshold = _otsu(np.rint(lum).astype(np.intp))
    else:
        threshold = settings.dark_threshold
    dark = lum < threshold
    if not dark.any():
        return []

    labels, count = ndimage.label(dark, structure=np.ones((3, 3), dtype=int))
    pixel_counts = np.bincount(labels.ravel(), minlength=count + 1)[1:]
    slices = ndimage.find_objects(labels)
    keep = pixel_counts >= settings.min_component_area
    if not keep.any():
        return []

    y0 = np.array([s[0].start for s in slices], dtype=np.float64)[keep]
    y1 = np.array([s[0].stop for s in slices], dtype=np.float64)[keep]
    x0 = np.array([s[1].start for s in slices], dtype=np.float64)[keep]
    x1 = np.array([s[1].stop for s in slices], dtype=np.float64)[keep]
    counts = pixel_counts[keep].astype(np.float64)

    tolerance = settings.merge_tolerance_factor * float(np.median(y1 - y0))
    gap_x = np.maximum(np.maximum.outer(x0, x0) - np.minimum.outer(x1, x1), 0.0)
    gap_y = np.maximum(np.maximum.outer(y0, y0) - np.minimum.outer(y1, y1), 0.0)
    adjacent = (gap_x <= tolerance) & (gap_y <= tolerance)
    n_groups, group = connected_components(csr_matrix(adjacent), directed=False)

    boxes = []
    for g in range(n_groups):
        member = group == g
        bx0, by0 = x0[member].min(), y0[member].min()
        bx1, by1 = x1[member].max(), y1[member].max()
        density = counts[member].sum() / ((bx1 - bx0) * (by1 - by0))
        boxes.append(BBox(bx0, by0, bx1, by1, min(density, 1.0)))
    return boxes


def load_proposals(path: str | Path, image_id: str) -> list[BBox]:
    """Boxes recorded for ``image_id`` in an annotation file, unmodified.

    Unknown image id → empty list with a warning; malformed files raise
    with record context.
    """
    for ann in load_annotations(path):
        if ann.image_id == image_id:
            return [r.box for r in ann.regions]
    log.warning("%s: no proposals recorded for image id %r", path, image_id)
    return []


@dataclass
class HeuristicProposalSource:
    settings: HeuristicSettings = field(default_factory=HeuristicSettings)
    name: str = "heuristic"

    def propose(self, image: RasterImage) -> list[BBox]:
        return heuristic_proposals(image, self.settings)


class FileProposalSource:
    """Replays annotation boxes for the image's id.

    Stored boxes live in original-page coordinates; they are rescaled to
    whatever size the passed image has, using the page size recorded in the
    file.  The parsed file is cached once behind a lock, after which reads
    are lock-free.
    """

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._lock = threading.Lock()
        self._table: dict[str, tuple[int, int, list[BBox]]] | None = None
        self.name = f"file:{self._path}"

    def _load(self) -> dict[str, tuple[int, int, list[BBox]]]:
        with self._lock:
            if self._table is None:
                self._table = {
                    a.image_id: (a.page_width, a.page_height, [r.box for r in a.regions])
                    for a in load_annotations(self._path)
                }
        return self._table

    def propose(self, image: RasterImage) -> list[BBox]:
        if image.image_id is None:
            raise ValueError("image has no id to look proposals up by")
        entry = self._load().get(image.image_id)
        if entry is None:
            log.warning("%s: no proposals recorded for image id %r", self._path, image.image_id)
            return []
        page_w, page_h, boxes = entry
        sx = image.width / page_w
        sy = image.height / page_h
        return [
            BBox(b.x_min * sx, b.y_min * sy, b.x_max * sx, b.y_max * sy, b.score)
            for b in boxes
        ]


@dataclass
class ExternalProposalSource:
    """Adapter for any callable producing scored boxes for an image."""

    fn: Callable[[RasterImage], list[BBox]]
    name: str = "external"

    def propose(self, image: RasterImage) -> list[BBox]:
        return self.fn(image)


def detect_regions(
    image: RasterImage, src: ProposalSource, cfg: DetectionConfig | None = None
) -> list[BBox]:
    """Confidence-filtered, NMS-reduced region boxes in original image
    coordinates, sorted by descending score.

    The image is resized to ``cfg.resize_target`` on its longest side for
    the provider, and provider boxes are mapped back afterwards.  Provider
    failures raise :class:`DetectionError` naming the provider.
    """
    cfg = cfg or DetectionConfig()
    resized, scale = resize_longest_side(image, cfg.resize_target)
    try:
        proposals = src.propose(resized)
    except Exception as exc:
        raise DetectionError(f"region proposal provider '{src.name}' failed: {exc}") from exc

    inverse = 1.0 / scale
    survivors = []
    for box in proposals:
        if box.score < cfg.confidence_threshold:
            continue
        mapped = clip_box(
            BBox(
                box.x_min * inverse,
                box.y_min * inverse,
                box.x_max * inverse,
                box.y_max * inverse,
                box.score,
            ),
            image.width,
            image.height,
        )
        if mapped is not None:
            survivors.append(mapped)
    return nms(survivors, cfg.nms_iou_threshold)
