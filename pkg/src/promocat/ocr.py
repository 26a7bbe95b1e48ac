"""Text extraction behind an OCR provider seam, word-to-region grouping,
and recognition post-processing.

Providers return words with locations plus paragraph-level boxes.  The mock
provider replays ground-truth words that survive whatever masking was
applied to the image, which makes every downstream stage deterministic and
testable without a real recognition engine.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from .corpus import Annotation, load_annotations
from .geometry import BBox
from .image import RasterImage, encode_png

__all__ = [
    "OcrWord",
    "OcrResult",
    "OcrError",
    "PostprocessConfig",
    "MockOcrProvider",
    "RemoteOcrProvider",
    "recognize",
    "group_words",
    "postprocess",
    "levenshtein",
]

log = logging.getLogger(__name__)

# Words whose boxes fall within this many median word heights of each other
# belong to one paragraph.
PARAGRAPH_GAP_FACTOR = 1.8


class OcrError(Exception):
    """Recognition failed; message carries provider context."""


@dataclass(frozen=True)
class OcrWord:
    text: str
    box: BBox
    confidence: float = 1.0

    def __post_init__(self):
        if not self.text:
            raise ValueError("OCR word text must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class OcrResult:
    """Full provider output: words plus the provider's paragraph boxes."""

    words: tuple[OcrWord, ...]
    paragraphs: tuple[BBox, ...]


@dataclass(frozen=True)
class PostprocessConfig:
    """Cleanup rules applied to recognized region text.

    Letters (including accented) and digits always survive; ``keep_chars``
    lists the additionally allowed punctuation.  Tokens that are mostly
    letters, at least ``min_token_len_for_correction`` long, and absent from
    ``dictionary`` are replaced when exactly one dictionary word lies within
    ``max_edit_distance`` edits.
    """

    keep_chars: str = "%€$.,-"
    dictionary: frozenset[str] = frozenset()
    max_edit_distance: int = 1
    min_token_len_for_correction: int = 4

    def __post_init__(self):
        if self.max_edit_distance < 0:
            raise ValueError("max_edit_distance must be non-negative")
        if self.min_token_len_for_correction < 1:
            raise ValueError("min_token_len_for_correction must be positive")


# ---------------------------------------------------------------------------
# Providers


def _partition_box(box: BBox, count: int) -> list[BBox]:
    """Split a box into ``count`` equal vertical slices, one per token."""
    edges = np.linspace(box.x_min, box.x_max, count + 1)
    return [BBox(edges[i], box.y_min, edges[i + 1], box.y_max) for i in range(count)]


def _gt_words(annotation: Annotation) -> list[OcrWord]:
    words = []
    for region in annotation.regions:
        tokens = region.text.split()
        boxes = region.word_boxes or _partition_box(region.box, max(len(tokens), 1))
        for token, box in zip(tokens, boxes):
            words.append(OcrWord(token, box))
    for d in annotation.distractors:
        tokens = d.text.split()
        if not tokens:
            continue
        for token, box in zip(tokens, _partition_box(d.box, len(tokens))):
            words.append(OcrWord(token, box))
    return words


def _cluster_paragraphs(boxes: list[BBox]) -> list[BBox]:
    """Merge word boxes into paragraph boxes by proximity (gap within
    PARAGRAPH_GAP_FACTOR x the median word height on both axes)."""
    if not boxes:
        return []
    x0 = np.array([b.x_min for b in boxes])
    y0 = np.array([b.y_min for b in boxes])
    x1 = np.array([b.x_max for b in boxes])
    y1 = np.array([b.y_max for b in boxes])
    tolerance = PARAGRAPH_GAP_FACTOR * float(np.median(y1 - y0))
    gap_x = np.maximum(np.maximum.outer(x0, x0) - np.minimum.outer(x1, x1), 0.0)
    gap_y = np.maximum(np.maximum.outer(y0, y0) - np.minimum.outer(y1, y1), 0.0)
    adjacent = (gap_x <= tolerance) & (gap_y <= tolerance)

    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    n_groups, group = connected_components(csr_matrix(adjacent), directed=False)
    paragraphs = []
    for g in range(n_groups):
        member = group == g
        paragraphs.append(
            BBox(x0[member].min(), y0[member].min(), x1[member].max(), y1[member].max())
        )
    paragraphs.sort(key=lambda b: (b.y_min, b.x_min))
    return paragraphs


class MockOcrProvider:
    """Replays ground-truth words that survive the image's mask.

    A word is recognized iff the pixel at its box center is not pure black;
    masked-out words therefore disappear exactly like real text would.
    Paragraph boxes are rebuilt from the surviving words by proximity
    clustering, mimicking engine-side layout analysis.
    """

    name = "mock"

    def __init__(self, source: list[Annotation] | str | Path):
        if isinstance(source, (str, Path)):
            try:
                annotations = load_annotations(source)
            except FileNotFoundError as exc:
                raise OcrError(f"mock OCR ground-truth file missing: {source}") from exc
        else:
            annotations = source
        self._by_id = {a.image_id: a for a in annotations}

    def analyze(self, image: RasterImage) -> OcrResult:
        if image.image_id not in self._by_id:
            raise OcrError(f"mock OCR has no ground truth for image {image.image_id!r}")
        survivors = []
        for word in _gt_words(self._by_id[image.image_id]):
            cx = min(int(word.box.center[0]), image.width - 1)
            cy = min(int(word.box.center[1]), image.height - 1)
            if image.pixels[cy, cx].any():
                survivors.append(word)
        return OcrResult(tuple(survivors), tuple(_cluster_paragraphs([w.box for w in survivors])))


class RemoteOcrProvider:
    """HTTP client for a word/paragraph recognition service.

    POSTs PNG bytes, expects JSON with ``words`` (text, box, confidence)
    and ``paragraphs`` (boxes).  At most ``max_in_flight`` requests run
    concurrently; each request times out after ``timeout`` seconds.
    """

    name = "remote"

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        timeout: float = 30.0,
        max_in_flight: int = 4,
    ):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be positive")
        self.endpoint = endpoint
        self._api_key = api_key
        self._timeout = timeout
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._session = requests.Session()

    def analyze(self, image: RasterImage) -> OcrResult:
        headers = {"Content-Type": "image/png"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        with self._slots:
            try:
                response = self._session.post(
                    self.endpoint,
                    data=encode_png(image),
                    headers=headers,
                    timeout=self._timeout,
                )
            except requests.RequestException as exc:
                raise OcrError(f"remote OCR at {self.endpoint}: {exc}") from exc
        if response.status_code != 200:
            raise OcrError(
                f"remote OCR at {self.endpoint}: HTTP {response.status_code}: "
                f"{response.text[:200]}"
            )
        try:
            payload = response.json()
            words = tuple(
                OcrWord(w["text"], BBox(*w["box"]), float(w.get("confidence", 1.0)))
                for w in payload["words"]
            )
            paragraphs = tuple(BBox(*p) for p in payload.get("paragraphs", []))
        except (KeyError, TypeError, ValueError) as exc:
            raise OcrError(f"remote OCR at {self.endpoint}: malformed response: {exc}") from exc
        return OcrResult(words, paragraphs)


def recognize(image: RasterImage, provider) -> list[OcrWord]:
    """All words the provider finds in the image, with locations."""
    return list(provider.analyze(image).words)


# ---------------------------------------------------------------------------
# Grouping and cleanup


def group_words(words: list[OcrWord], regions: list[BBox]) -> dict[int, str]:
    """Assemble one string per region from the words centered inside it.

    Each word goes to the first region containing its box center; words
    outside every region are dropped.  Within a region, words are clustered
    into lines (y-center tolerance = half the median word height among the
    region's words), lines read top to bottom, words left to right, all
    joined with single spaces.  Every region index is present in the result,
    with an empty string when nothing landed inside.
    """
    assigned: dict[int, list[OcrWord]] = {i: [] for i in range(len(regions))}
    for word in words:
        cx, cy = word.box.center
        for i, region in enumerate(regions):
            if region.contains_point(cx, cy):
                assigned[i].append(word)
                break

    out: dict[int, str] = {}
    for i, members in assigned.items():
        if not members:
            out[i] = ""
            continue
        heights = np.array([w.box.height for w in members])
        tolerance = float(np.median(heights)) / 2.0
        members = sorted(members, key=lambda w: (w.box.center[1], w.box.x_min, w.text))
        lines: list[list[OcrWord]] = [[members[0]]]
        anchor = members[0].box.center[1]
        for word in members[1:]:
            if word.box.center[1] - anchor > tolerance:
                lines.append([word])
                anchor = word.box.center[1]
            else:
                lines[-1].append(word)
        ordered = []
        for line in lines:
            ordered.extend(sorted(line, key=lambda w: (w.box.x_min, w.box.center[1], w.text)))
        out[i] = " ".join(w.text for w in ordered)
    return out


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            )
        previous = current
    return previous[-1]


def _mostly_letters(token: str) -> bool:
    letters = sum(1 for ch in token if ch.isalpha())
    return letters * 2 > len(token)


def _correct_token(token: str, cfg: PostprocessConfig) -> str:
    if len(token) < cfg.min_token_len_for_correction or not _mostly_letters(token):
        return token
    if token in cfg.dictionary:
        return token
    candidates = [
        w
        for w in cfg.dictionary
        if abs(len(w) - len(token)) <= cfg.max_edit_distance
        and levenshtein(token, w) <= cfg.max_edit_distance
    ]
    # Replace only when unambiguous; a guess between candidates would
    # silently corrupt the text.
    if len(candidates) == 1:
        return candidates[0]
    return token


def postprocess(text: str, cfg: PostprocessConfig | None = None) -> str:
    """Lowercase, strip disallowed characters, collapse whitespace, and
    apply unambiguous dictionary corrections.  Idempotent; never increases
    the token count."""
    cfg = cfg or PostprocessConfig()
    lowered = text.lower()
    kept = []
    for ch in lowered:
        if ch.isalpha() or ch.isdigit() or ch in cfg.keep_chars:
            kept.append(ch)
        elif ch.isspace():
            kept.append(" ")
    tokens = "".join(kept).split()
    if cfg.dictionary:
        tokens = [_correct_token(t, cfg) for t in tokens]
    return " ".join(tokens)
