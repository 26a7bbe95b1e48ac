"""Annotation schema, corpus statistics, and a seeded synthetic leaflet
generator.

The generator produces white pages carrying dark "text" blocks built from a
deterministic bitmap glyph set: promotion description blocks with per-word
ground-truth boxes and category labels (long-tailed over category ranks),
plus distractor blocks (prices, slogans) outside every description region.
Everything is a pure function of the config seed; page ``index`` derives its
own stream as ``seed XOR index`` so pages can be produced independently and
in any order.
"""

from __future__ import annotations

import functools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import BBox
from .hashing import fnv1a_64
from .image import RasterImage

__all__ = [
    "RegionAnnotation",
    "DistractorAnnotation",
    "Annotation",
    "CorpusStats",
    "SyntheticConfig",
    "AnnotationError",
    "PageLayoutError",
    "compute_stats",
    "format_stats_table",
    "load_annotations",
    "save_annotations",
    "generate_page",
    "generate_synthetic",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# Glyph geometry (pixels).  Characters are near-solid 8x12 tiles with one
# interior hole; keeping the border ring intact guarantees one connected
# component per character, so component statistics stay stable for the
# heuristic detector, and the high ink coverage keeps block fill density
# comfortably above detection confidence cutoffs.
GLYPH_W = 8
GLYPH_H = 12
CHAR_GAP = 1
WORD_GAP = 4
LINE_GAP = 4
REGION_PAD = 2
WRAP_WIDTH = 200

# Ink is dark but never pure black: (0,0,0) is reserved for masked-out
# pixels, and the mock OCR provider keys on that distinction.
INK = (25, 25, 25)

# Page layout grid.
PAGE_MARGIN = 20
CELL_W = 250
CELL_H = 230
MAX_JITTER = 10

# Block adjacency: some description blocks are stacked directly under
# another one, and some distractors are glued right below a block, with a
# gap small enough that paragraph-level word clustering runs them together
# while connected-component merging still separates them.
PAIR_RATE = 0.45
ADJACENT_DISTRACTOR_RATE = 0.6
ADJACENT_GAP_MIN = 12
ADJACENT_GAP_MAX = 16

# Content must stop this far above the cell edge so blocks in adjacent rows
# never read as one paragraph.
SLOT_CLEARANCE = 24
# Distractors wrap to at most two lines.
MAX_DISTRACTOR_H = 2 * GLYPH_H + LINE_GAP + REGION_PAD

NOISE_POOL_SIZE = 40
# Fractions of non-guaranteed region tokens drawn from the shared noise
# pool / price-and-measure generator instead of the owned categories'
# vocabularies.  Descriptions carry prices and sizes like real ones do (it
# also keeps numeric character patterns category-neutral for the
# classifier), but both rates stay low so rare (deep Zipf tail) categories
# still accumulate clean signal.
NOISE_TOKEN_RATE = 0.10
NUMERIC_TOKEN_RATE = 0.10


class AnnotationError(Exception):
    """Annotation file violates the schema; message carries the record path."""


class PageLayoutError(Exception):
    """Page too small for the requested number of blocks."""


@dataclass
class RegionAnnotation:
    """One promotion description: its box, text, category ids, and one box
    per whitespace token of the text."""

    box: BBox
    text: str
    categories: set[int]
    word_boxes: list[BBox]


@dataclass
class DistractorAnnotation:
    box: BBox
    text: str


@dataclass
class Annotation:
    image_id: str
    page_width: int
    page_height: int
    regions: list[RegionAnnotation]
    distractors: list[DistractorAnnotation] = field(default_factory=list)
    language: str = "en"
    retailer: str = "synthetic"


@dataclass
class CorpusStats:
    languages: int
    retailers: int
    images: int
    samples: int
    categories: int
    mean_samples_per_category: float
    std_samples_per_category: float


@dataclass(frozen=True)
class SyntheticConfig:
    seed: int = 0
    image_count: int = 10
    categories: int = 20
    zipf_exponent: float = 1.2
    multi_label_prob: float = 0.3
    distractor_density: float = 0.5
    vocab_per_category: int = 15
    page_size: tuple[int, int] = (800, 1000)

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.categories < 2:
            raise ValueError("need at least 2 categories")
        if self.zipf_exponent <= 0:
            raise ValueError("zipf exponent must be positive")
        if not 0.0 <= self.multi_label_prob <= 1.0:
            raise ValueError("multi_label_prob outside [0, 1]")
        if self.distractor_density < 0:
            raise ValueError("distractor density must be non-negative")
        if self.vocab_per_category < 1:
            raise ValueError("vocab_per_category must be positive")


# ---------------------------------------------------------------------------
# Statistics


def compute_stats(annotations: list[Annotation]) -> CorpusStats:
    """Corpus summary: counts plus mean/std of samples per category.

    A sample is one region (promotion).  The mean is defined as
    samples/categories; the std is the population standard deviation of
    per-category sample counts, where a multi-label region counts toward
    each of its categories.
    """
    if not annotations:
        raise AnnotationError("empty corpus")
    counts: dict[int, int] = {}
    samples = 0
    for ann in annotations:
        for region in ann.regions:
            samples += 1
            for cat in region.categories:
                counts[cat] = counts.get(cat, 0) + 1
    categories = len(counts)
    if categories == 0:
        raise AnnotationError("corpus has no labeled regions")
    per_cat = np.array(sorted(counts.values()), dtype=np.float64)
    return CorpusStats(
        languages=len({a.language for a in annotations}),
        retailers=len({a.retailer for a in annotations}),
        images=len(annotations),
        samples=samples,
        categories=categories,
        mean_samples_per_category=samples / categories,
        std_samples_per_category=float(per_cat.std()),
    )


def format_stats_table(stats: CorpusStats, name: str = "corpus") -> str:
    """Render stats as one aligned text table row with a header."""
    headers = [
        "Dataset",
        "#Languages",
        "#Retailers",
        "#Images",
        "#Samples",
        "#Categories",
        "Avg samples/cat",
        "Std samples/cat",
    ]
    values = [
        name,
        str(stats.languages),
        str(stats.retailers),
        str(stats.images),
        str(stats.samples),
        str(stats.categories),
        f"{stats.mean_samples_per_category:.2f}",
        f"{stats.std_samples_per_category:.2f}",
    ]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    row = "  ".join(v.ljust(w) for v, w in zip(values, widths))
    return head + "\n" + row


# ---------------------------------------------------------------------------
# Annotation file I/O

_KNOWN_TOP = {"version", "annotations"}
_KNOWN_ANN = {
    "image_id",
    "page_width",
    "page_height",
    "language",
    "retailer",
    "regions",
    "distractors",
}
_KNOWN_REGION = {"box", "text", "categories", "word_boxes", "score"}
_KNOWN_DISTRACTOR = {"box", "text"}


def _parse_box(raw, where: str, score: float = 0.0) -> BBox:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise AnnotationError(f"{where}: box must be [x_min, y_min, x_max, y_max]")
    x0, y0, x1, y1 = (float(v) for v in raw)
    if min(x0, y0, x1, y1) < 0:
        raise AnnotationError(f"{where}: negative coordinate in box {raw}")
    try:
        return BBox(x0, y0, x1, y1, score)
    except ValueError as exc:
        raise AnnotationError(f"{where}: {exc}") from exc


def _warn_unknown(fields, known, where: str) -> None:
    extra = set(fields) - known
    if extra:
        log.warning("%s: ignoring unknown fields %s", where, sorted(extra))


def _parse_region(raw: dict, where: str) -> RegionAnnotation:
    _warn_unknown(raw, _KNOWN_REGION, where)
    for key in ("box", "text", "categories"):
        if key not in raw:
            raise AnnotationError(f"{where}: missing field '{key}'")
    box = _parse_box(raw["box"], where, score=float(raw.get("score", 1.0)))
    categories = raw["categories"]
    if not isinstance(categories, list) or not categories:
        raise AnnotationError(f"{where}: categories must be a non-empty list")
    text = str(raw["text"])
    word_boxes = [
        _parse_box(wb, f"{where}.word_boxes[{i}]")
        for i, wb in enumerate(raw.get("word_boxes", []))
    ]
    if word_boxes and len(word_boxes) != len(text.split()):
        raise AnnotationError(
            f"{where}: {len(word_boxes)} word boxes for {len(text.split())} tokens"
        )
    region = RegionAnnotation(box, text, {int(c) for c in categories}, word_boxes)
    for i, wb in enumerate(word_boxes):
        if not (
            box.x_min <= wb.x_min
            and wb.x_max <= box.x_max
            and box.y_min <= wb.y_min
            and wb.y_max <= box.y_max
        ):
            raise AnnotationError(f"{where}.word_boxes[{i}]: outside its region box")
    return region


def _parse_annotation(raw: dict, where: str) -> Annotation:
    _warn_unknown(raw, _KNOWN_ANN, where)
    for key in ("image_id", "page_width", "page_height", "regions"):
        if key not in raw:
            raise AnnotationError(f"{where}: missing field '{key}'")
    page_w = int(raw["page_width"])
    page_h = int(raw["page_height"])
    if page_w <= 0 or page_h <= 0:
        raise AnnotationError(f"{where}: page size must be positive")
    regions = [
        _parse_region(r, f"{where}.regions[{i}]") for i, r in enumerate(raw["regions"])
    ]
    for i, region in enumerate(regions):
        if region.box.x_max > page_w or region.box.y_max > page_h:
            raise AnnotationError(f"{where}.regions[{i}]: box outside the page")
    distractors = []
    for i, d in enumerate(raw.get("distractors", [])):
        dwhere = f"{where}.distractors[{i}]"
        _warn_unknown(d, _KNOWN_DISTRACTOR, dwhere)
        if "box" not in d or "text" not in d:
            raise AnnotationError(f"{dwhere}: missing 'box' or 'text'")
        distractors.append(DistractorAnnotation(_parse_box(d["box"], dwhere), str(d["text"])))
    return Annotation(
        image_id=str(raw["image_id"]),
        page_width=page_w,
        page_height=page_h,
        regions=regions,
        distractors=distractors,
        language=str(raw.get("language", "en")),
        retailer=str(raw.get("retailer", "unknown")),
    )


def load_annotations(path: str | Path) -> list[Annotation]:
    """Parse and validate an annotation file; schema violations raise
    :class:`AnnotationError` naming the offending record."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or "annotations" not in raw:
        raise AnnotationError(f"{path}: expected an object with an 'annotations' list")
    _warn_unknown(raw, _KNOWN_TOP, str(path))
    version = raw.get("version")
    if version != SCHEMA_VERSION:
        raise AnnotationError(f"{path}: unsupported schema version {version!r}")
    return [
        _parse_annotation(a, f"annotations[{i}]") for i, a in enumerate(raw["annotations"])
    ]


def _box_json(box: BBox) -> list[float]:
    return [box.x_min, box.y_min, box.x_max, box.y_max]


def save_annotations(annotations: list[Annotation], path: str | Path) -> None:
    doc = {
        "version": SCHEMA_VERSION,
        "annotations": [
            {
                "image_id": a.image_id,
                "page_width": a.page_width,
                "page_height": a.page_height,
                "language": a.language,
                "retailer": a.retailer,
                "regions": [
                    {
                        "box": _box_json(r.box),
                        "text": r.text,
                        "categories": sorted(r.categories),
                        "word_boxes": [_box_json(wb) for wb in r.word_boxes],
                    }
                    for r in a.regions
                ],
                "distractors": [
                    {"box": _box_json(d.box), "text": d.text} for d in a.distractors
                ],
            }
            for a in annotations
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")


# ---------------------------------------------------------------------------
# Glyph rendering


@functools.lru_cache(maxsize=256)
def _glyph_pattern(ch: str) -> np.ndarray:
    """Deterministic near-solid bitmap for one character (bool, GLYPH_H x GLYPH_W)."""
    tile = np.ones((GLYPH_H, GLYPH_W), dtype=bool)
    # Punch one interior 2x2 hole at a character-dependent spot; the border
    # ring stays solid, so the component never splits.
    h = fnv1a_64("glyph:" + ch)
    gy = 1 + h % (GLYPH_H - 3)
    gx = 1 + (h >> 16) % (GLYPH_W - 3)
    tile[gy : gy + 2, gx : gx + 2] = False
    return tile


def _word_width(word: str) -> int:
    return len(word) * GLYPH_W + (len(word) - 1) * CHAR_GAP


def _blit_word(pixels: np.ndarray, word: str, x: int, y: int) -> None:
    for ch in word:
        tile = _glyph_pattern(ch)
        pixels[y : y + GLYPH_H, x : x + GLYPH_W][tile] = INK
        x += GLYPH_W + CHAR_GAP


def _layout_words(tokens: list[str], x0: int, y0: int, wrap_width: int) -> list[BBox]:
    """Left-to-right, top-to-bottom word boxes wrapped at ``wrap_width``."""
    boxes = []
    x, y = x0, y0
    for token in tokens:
        w = _word_width(token)
        if x > x0 and x + w > x0 + wrap_width:
            x = x0
            y += GLYPH_H + LINE_GAP
        boxes.append(BBox(x, y, x + w, y + GLYPH_H))
        x += w + WORD_GAP
    return boxes


def _bounds_of(boxes: list[BBox], pad: int) -> BBox:
    return BBox(
        min(b.x_min for b in boxes) - pad,
        min(b.y_min for b in boxes) - pad,
        max(b.x_max for b in boxes) + pad,
        max(b.y_max for b in boxes) + pad,
    )


# ---------------------------------------------------------------------------
# Vocabulary and category sampling

_ALPHABET = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class _Vocabulary:
    category_tokens: tuple[tuple[str, ...], ...]
    noise_tokens: tuple[str, ...]
    zipf_pmf: tuple[float, ...]


def _random_token(rng: np.random.Generator, taken: set[str]) -> str:
    while True:
        length = int(rng.integers(4, 8))
        token = "".join(_ALPHABET[i] for i in rng.integers(0, 26, length))
        if token not in taken:
            taken.add(token)
            return token


@functools.lru_cache(maxsize=8)
def _build_vocabulary(cfg: SyntheticConfig) -> _Vocabulary:
    """Per-category token lists, shared noise tokens, and the Zipf pmf.

    Derived from ``cfg.seed`` alone, independent of any page stream, so
    every page of a corpus shares one vocabulary.
    """
    rng = np.random.default_rng(cfg.seed)
    taken: set[str] = set()
    cats = tuple(
        tuple(_random_token(rng, taken) for _ in range(cfg.vocab_per_category))
        for _ in range(cfg.categories)
    )
    noise = tuple(_random_token(rng, taken) for _ in range(NOISE_POOL_SIZE))
    ranks = np.arange(1, cfg.categories + 1, dtype=np.float64)
    mass = ranks ** (-cfg.zipf_exponent)
    return _Vocabulary(cats, noise, tuple(mass / mass.sum()))


def _draw_categories(rng: np.random.Generator, cfg: SyntheticConfig, vocab: _Vocabulary) -> set[int]:
    primary = int(rng.choice(cfg.categories, p=np.array(vocab.zipf_pmf)))
    cats = {primary}
    if rng.random() < cfg.multi_label_prob:
        cats.add((primary + 1) % cfg.categories)
    return cats


def _numeric_token(rng: np.random.Generator) -> str:
    """Price, discount, or pack-size token."""
    kind = rng.random()
    if kind < 0.4:
        return f"{int(rng.integers(1, 100))}.{int(rng.integers(0, 100)):02d}"
    if kind < 0.65:
        return f"{int(rng.integers(5, 80))}%"
    if kind < 0.8:
        return f"{int(rng.integers(2, 4))}x{int(rng.integers(1, 3))}"
    unit = ("g", "ml", "kg", "l")[int(rng.integers(0, 4))]
    return f"{int(rng.integers(1, 1000))}{unit}"


def _region_tokens(rng: np.random.Generator, cats: set[int], vocab: _Vocabulary) -> list[str]:
    owned = sorted(cats)
    n = int(rng.integers(5, 11))
    tokens = []
    for i in range(n):
        if i < len(owned):
            # Guarantee signal for every owned category.
            pool = vocab.category_tokens[owned[i]]
        else:
            kind = rng.random()
            if kind < NOISE_TOKEN_RATE:
                pool = vocab.noise_tokens
            elif kind < NOISE_TOKEN_RATE + NUMERIC_TOKEN_RATE:
                tokens.append(_numeric_token(rng))
                continue
            else:
                pool = vocab.category_tokens[owned[int(rng.integers(0, len(owned)))]]
        tokens.append(pool[int(rng.integers(0, len(pool)))])
    return tokens


def _distractor_tokens(rng: np.random.Generator, vocab: _Vocabulary) -> list[str]:
    tokens = []
    for _ in range(int(rng.integers(2, 5))):
        if rng.random() < 0.8:
            tokens.append(_numeric_token(rng))
        else:
            tokens.append(vocab.noise_tokens[int(rng.integers(0, len(vocab.noise_tokens)))])
    return tokens


# ---------------------------------------------------------------------------
# Page generation


def _slot_grid(page_w: int, page_h: int) -> list[tuple[int, int]]:
    cols = (page_w - 2 * PAGE_MARGIN) // CELL_W
    rows = (page_h - 2 * PAGE_MARGIN) // CELL_H
    return [
        (PAGE_MARGIN + c * CELL_W, PAGE_MARGIN + r * CELL_H)
        for r in range(rows)
        for c in range(cols)
    ]


def generate_page(
    cfg: SyntheticConfig, index: int, render: bool = True
) -> tuple[RasterImage | None, Annotation]:
    """Generate page ``index`` of the corpus described by ``cfg``.

    With ``render=False`` only the annotation is produced (identical layout,
    no pixel work) — useful when building large text corpora.  Raises
    :class:`PageLayoutError` when the page cannot hold the drawn number of
    blocks.
    """
    rng = np.random.default_rng(int(np.uint64(cfg.seed) ^ np.uint64(index)))
    vocab = _build_vocabulary(cfg)
    page_w, page_h = cfg.page_size

    n_regions = int(rng.integers(2, 9))

    # Group regions into vertical stacks of one or two blocks.
    groups: list[list[int]] = []
    i = 0
    while i < n_regions:
        if i + 1 < n_regions and rng.random() < PAIR_RATE:
            groups.append([i, i + 1])
            i += 2
        else:
            groups.append([i])
            i += 1

    slots = _slot_grid(page_w, page_h)
    if len(groups) > len(slots):
        raise PageLayoutError(
            f"page {page_w}x{page_h} has {len(slots)} block slots, need {len(groups)}"
        )
    slot_order = [slots[j] for j in rng.permutation(len(slots))]

    n_distractors = int(round(cfg.distractor_density * n_regions))

    regions: list[RegionAnnotation] = []
    distractors: list[DistractorAnnotation] = []
    # Bottom edge of the content stacked in each used slot, for gluing
    # adjacent distractors underneath.
    stack_bottoms: list[tuple[int, int, float]] = []

    for g, members in enumerate(groups):
        sx, sy = slot_order[g]
        x0 = sx + int(rng.integers(0, MAX_JITTER + 1))
        y0 = sy + int(rng.integers(0, MAX_JITTER + 1))
        for member in members:
            cats = _draw_categories(rng, cfg, vocab)
            tokens = _region_tokens(rng, cats, vocab)
            word_boxes = _layout_words(tokens, x0, y0, WRAP_WIDTH)
            box = _bounds_of(word_boxes, REGION_PAD)
            regions.append(RegionAnnotation(box, " ".join(tokens), cats, word_boxes))
            y0 = int(box.y_max) + int(rng.integers(ADJACENT_GAP_MIN, ADJACENT_GAP_MAX + 1))
        stack_bottoms.append((x0, y0, slot_order[g][1] + CELL_H - SLOT_CLEARANCE))

    free_slots = slot_order[len(groups) :]
    for _ in range(n_distractors):
        tokens = _distractor_tokens(rng, vocab)
        adjacent = rng.random() < ADJACENT_DISTRACTOR_RATE and stack_bottoms
        if adjacent:
            pick = int(rng.integers(0, len(stack_bottoms)))
            x0, y0, limit = stack_bottoms.pop(pick)
            if y0 + MAX_DISTRACTOR_H > limit:
                adjacent = False  # stack already fills its cell
        if not adjacent:
            if not free_slots:
                continue  # no room left on this page
            sx, sy = free_slots.pop(0)
            x0 = sx + int(rng.integers(0, MAX_JITTER + 1))
            y0 = sy + int(rng.integers(0, MAX_JITTER + 1))
        word_boxes = _layout_words(tokens, x0, y0, WRAP_WIDTH)
        box = _bounds_of(word_boxes, REGION_PAD)
        distractors.append(DistractorAnnotation(box, " ".join(tokens)))

    annotation = Annotation(
        image_id=f"page_{index:05d}",
        page_width=page_w,
        page_height=page_h,
        regions=regions,
        distractors=distractors,
    )

    if not render:
        return None, annotation

    image = RasterImage.blank(page_w, page_h, image_id=annotation.image_id)
    for region in regions:
        for token, wb in zip(region.text.split(), region.word_boxes):
            _blit_word(image.pixels, token, int(wb.x_min), int(wb.y_min))
    for d in distractors:
        boxes = _layout_words(d.text.split(), int(d.box.x_min) + REGION_PAD,
                              int(d.box.y_min) + REGION_PAD, WRAP_WIDTH)
        for token, wb in zip(d.text.split(), boxes):
            _blit_word(image.pixels, token, int(wb.x_min), int(wb.y_min))
    return image, annotation


def generate_synthetic(cfg: SyntheticConfig) -> tuple[list[RasterImage], list[Annotation]]:
    """Materialize the full corpus; see :func:`generate_page` for streaming."""
    images, annotations = [], []
    for i in range(cfg.image_count):
        image, ann = generate_page(cfg, i)
        images.append(image)
        annotations.append(ann)
    return images, annotations
