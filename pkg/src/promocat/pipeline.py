"""End-to-end orchestration: detect regions, mask the page, recognize and
clean text, classify each description, decode categories.

Two modes share every stage implementation:

* pipeline: detector proposals -> mask -> OCR -> per-region text ->
  classifier at ``classify_threshold``;
* baseline: OCR the unmasked page, treat every provider paragraph as one
  candidate description, drop candidates whose probabilities all fall below
  ``baseline_threshold``, decode survivors at that same threshold.

Also here: the flat config-file loader, JSON-lines result output, a scoring
harness that matches emitted promotions to ground-truth regions by box
overlap, and a bounded-concurrency batch runner.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .classifier import ClassifierModel, decode_labels, load_model, predict_probs
from .corpus import Annotation, RegionAnnotation
from .detector import (
    DetectionConfig,
    FileProposalSource,
    HeuristicProposalSource,
    HeuristicSettings,
    ProposalSource,
    detect_regions,
)
from .evaluation import EvalSample
from .geometry import BBox, iou
from .image import RasterImage
from .masking import apply_mask
from .ocr import MockOcrProvider, PostprocessConfig, RemoteOcrProvider, group_words, postprocess

__all__ = [
    "PipelineConfig",
    "PipelineContext",
    "PipelineError",
    "PromotionResult",
    "BenchmarkScore",
    "run_pipeline",
    "run_baseline",
    "run_batch",
    "match_results",
    "benchmark",
    "eval_samples_from_matches",
    "result_to_json",
    "write_results",
    "load_config_file",
    "config_from_file",
]

log = logging.getLogger(__name__)

# The only setting an environment variable may override (credentials stay
# out of config files on shared machines).
API_KEY_ENV = "PROMOCAT_OCR_API_KEY"


class PipelineError(Exception):
    """A pipeline stage failed; message names the stage and image."""


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the end-to-end runner needs, as plain values so it can be
    read from a flat key=value file."""

    # detection
    proposal_provider: str = "heuristic"  # heuristic | file
    proposals_path: str | None = None
    confidence_threshold: float = 0.4
    nms_iou_threshold: float = 0.5
    resize_target: int = 1024
    dark_threshold: float | None = None
    merge_tolerance_factor: float = 0.6
    min_component_area: int = 4
    # OCR
    ocr_provider: str = "mock"  # mock | remote
    ocr_ground_truth: str | None = None
    ocr_endpoint: str | None = None
    ocr_api_key: str | None = None
    ocr_timeout: float = 30.0
    ocr_max_in_flight: int = 4
    # text cleanup
    dictionary_path: str | None = None
    max_edit_distance: int = 1
    min_token_len_for_correction: int = 4
    # classification
    model_path: str | None = None
    classify_threshold: float = 0.25
    baseline_mode: bool = False
    baseline_threshold: float = 0.40

    def __post_init__(self):
        for name in ("classify_threshold", "baseline_threshold", "confidence_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} outside [0, 1]")
        if self.proposal_provider not in ("heuristic", "file"):
            raise ValueError(f"unknown proposal provider {self.proposal_provider!r}")
        if self.ocr_provider not in ("mock", "remote"):
            raise ValueError(f"unknown OCR provider {self.ocr_provider!r}")


@dataclass(frozen=True)
class PromotionResult:
    """One promotion: where it sits, what it says, what it is.

    ``box`` is the detected region box, or the provider paragraph box in
    baseline mode (None when the provider reports no paragraph geometry).
    ``categories`` holds category ids, always equal to decoding
    ``probabilities`` at the threshold the result was produced with.
    """

    image_id: str | None
    box: BBox | None
    text: str
    probabilities: tuple[float, ...]
    categories: frozenset[int]


@dataclass
class PipelineContext:
    """Live objects built once from a PipelineConfig and shared by runs."""

    config: PipelineConfig
    model: ClassifierModel
    proposal_source: ProposalSource
    ocr_provider: object
    detection: DetectionConfig
    cleanup: PostprocessConfig

    @classmethod
    def from_config(
        cls,
        config: PipelineConfig,
        annotations: list[Annotation] | None = None,
        model: ClassifierModel | None = None,
    ) -> "PipelineContext":
        if model is None:
            if not config.model_path:
                raise ValueError("model_path is required")
            model = load_model(config.model_path)

        if config.proposal_provider == "file":
            if not config.proposals_path:
                raise ValueError("proposals_path is required with the file provider")
            source: ProposalSource = FileProposalSource(config.proposals_path)
        else:
            source = HeuristicProposalSource(
                HeuristicSettings(
                    dark_threshold=config.dark_threshold,
                    merge_tolerance_factor=config.merge_tolerance_factor,
                    min_component_area=config.min_component_area,
                )
            )

        if config.ocr_provider == "remote":
            if not config.ocr_endpoint:
                raise ValueError("ocr_endpoint is required with the remote provider")
            api_key = os.environ.get(API_KEY_ENV) or config.ocr_api_key
            ocr = RemoteOcrProvider(
                config.ocr_endpoint,
                api_key=api_key,
                timeout=config.ocr_timeout,
                max_in_flight=config.ocr_max_in_flight,
            )
        else:
            gt = annotations if annotations is not None else config.ocr_ground_truth
            if gt is None:
                raise ValueError("mock OCR needs ocr_ground_truth or in-memory annotations")
            ocr = MockOcrProvider(gt)

        dictionary: frozenset[str] = frozenset()
        if config.dictionary_path:
            words = Path(config.dictionary_path).read_text(encoding="utf-8").split()
            dictionary = frozenset(w.lower() for w in words)

        return cls(
            config=config,
            model=model,
            proposal_source=source,
            ocr_provider=ocr,
            detection=DetectionConfig(
                confidence_threshold=config.confidence_threshold,
                nms_iou_threshold=config.nms_iou_threshold,
                resize_target=config.resize_target,
            ),
            cleanup=PostprocessConfig(
                dictionary=dictionary,
                max_edit_distance=config.max_edit_distance,
                min_token_len_for_correction=config.min_token_len_for_correction,
            ),
        )


def _stage(name: str, image_id: str | None, fn: Callable):
    try:
        return fn()
    except Exception as exc:
        raise PipelineError(f"{name} failed for image {image_id!r}: {exc}") from exc


def _classify(text: str, model: ClassifierModel, threshold: float) -> tuple[tuple[float, ...], frozenset[int]]:
    """Empty text is a recognized non-description: zero probabilities and no
    categories (still consistent with decoding at any threshold)."""
    if not text:
        return (0.0,) * len(model.labels), frozenset()
    probs = predict_probs(text, model)
    cats = frozenset(model.labels[i] for i in decode_labels(probs, threshold))
    return tuple(float(p) for p in probs), cats


def run_pipeline(image: RasterImage, ctx: PipelineContext) -> list[PromotionResult]:
    """Detect -> mask -> recognize -> group/clean -> classify, one result
    per detected region (in detection order)."""
    image_id = image.image_id
    regions = _stage(
        "detection", image_id, lambda: detect_regions(image, ctx.proposal_source, ctx.detection)
    )
    if not regions:
        return []
    masked = _stage("masking", image_id, lambda: apply_mask(image, regions))
    analysis = _stage("ocr", image_id, lambda: ctx.ocr_provider.analyze(masked))
    texts = _stage(
        "grouping", image_id, lambda: group_words(list(analysis.words), regions)
    )
    results = []
    for i, region in enumerate(regions):
        text = _stage("postprocess", image_id, lambda: postprocess(texts[i], ctx.cleanup))
        probs, cats = _stage(
            "classification",
            image_id,
            lambda: _classify(text, ctx.model, ctx.config.classify_threshold),
        )
        results.append(PromotionResult(image_id, region, text, probs, cats))
    return results


def run_baseline(image: RasterImage, ctx: PipelineContext) -> list[PromotionResult]:
    """OCR the unmasked page; every provider paragraph is a candidate.

    Candidates whose category probabilities all sit below
    ``baseline_threshold`` are dropped as non-descriptions; the rest decode
    at that same threshold.
    """
    image_id = image.image_id
    analysis = _stage("ocr", image_id, lambda: ctx.ocr_provider.analyze(image))
    paragraphs = list(analysis.paragraphs)
    if not paragraphs:
        return []
    texts = _stage(
        "grouping", image_id, lambda: group_words(list(analysis.words), paragraphs)
    )
    threshold = ctx.config.baseline_threshold
    results = []
    for i, para in enumerate(paragraphs):
        text = _stage("postprocess", image_id, lambda: postprocess(texts[i], ctx.cleanup))
        probs, cats = _stage(
            "classification", image_id, lambda: _classify(text, ctx.model, threshold)
        )
        if not text or max(probs) < threshold:
            continue
        results.append(PromotionResult(image_id, para, text, probs, cats))
    return results


def run_batch(
    images: Sequence[RasterImage], ctx: PipelineContext, jobs: int = 1
) -> list[list[PromotionResult]]:
    """Per-image results in input order; images run concurrently up to
    ``jobs`` workers."""
    runner = run_baseline if ctx.config.baseline_mode else run_pipeline
    if jobs <= 1 or len(images) <= 1:
        return [runner(img, ctx) for img in images]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda img: runner(img, ctx), images))


# ---------------------------------------------------------------------------
# Scoring emitted results against ground truth


@dataclass(frozen=True)
class BenchmarkScore:
    precision: float
    recall: float
    accuracy: float
    subset_accuracy: float
    matched: int
    missed: int
    false_positives: int


def match_results(
    results: Sequence[PromotionResult],
    annotation: Annotation,
    min_iou: float = 0.1,
) -> tuple[list[tuple[PromotionResult | None, RegionAnnotation]], list[PromotionResult]]:
    """Greedy one-to-one box matching of results to ground-truth regions.

    Pairs are taken in descending IoU order (at least ``min_iou``); every
    ground-truth region appears in the output, matched or not.  The second
    list holds unmatched results that still claimed categories — false
    positives for scoring purposes.
    """
    candidates = []
    for ri, result in enumerate(results):
        if result.box is None:
            continue
        for gi, region in enumerate(annotation.regions):
            overlap = iou(result.box, region.box)
            if overlap >= min_iou:
                candidates.append((overlap, ri, gi))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

    result_of: dict[int, int] = {}
    taken_results: set[int] = set()
    for overlap, ri, gi in candidates:
        if ri in taken_results or gi in result_of:
            continue
        result_of[gi] = ri
        taken_results.add(ri)

    pairs = [
        (results[result_of[gi]] if gi in result_of else None, region)
        for gi, region in enumerate(annotation.regions)
    ]
    false_positives = [
        r
        for ri, r in enumerate(results)
        if ri not in taken_results and r.categories
    ]
    return pairs, false_positives


def benchmark(
    per_image_results: Sequence[Sequence[PromotionResult]],
    annotations: Sequence[Annotation],
    min_iou: float = 0.1,
) -> BenchmarkScore:
    """Example-based metrics over ground-truth regions plus false positives.

    Matched regions score their predicted-vs-true category sets; missed
    regions score zero; false positives score zero precision/accuracy and
    are excluded from recall (they have no ground truth to recall).
    """
    if len(per_image_results) != len(annotations):
        raise ValueError("results and annotations must align one-to-one")
    p_sum = r_sum = a_sum = s_sum = 0.0
    n_truth = n_fp = matched = 0
    for results, annotation in zip(per_image_results, annotations):
        pairs, false_positives = match_results(results, annotation, min_iou)
        for result, region in pairs:
            n_truth += 1
            truth = region.categories
            predicted = set(result.categories) if result is not None else set()
            if result is not None:
                matched += 1
            inter = len(predicted & truth)
            p_sum += inter / len(predicted) if predicted else 0.0
            r_sum += inter / len(truth)
            a_sum += inter / len(predicted | truth) if predicted | truth else 0.0
            s_sum += 1.0 if predicted == truth else 0.0
        n_fp += len(false_positives)
    if n_truth == 0:
        raise ValueError("no ground-truth regions to score against")
    return BenchmarkScore(
        precision=p_sum / (n_truth + n_fp),
        recall=r_sum / n_truth,
        accuracy=a_sum / (n_truth + n_fp),
        subset_accuracy=s_sum / (n_truth + n_fp),
        matched=matched,
        missed=n_truth - matched,
        false_positives=n_fp,
    )


def eval_samples_from_matches(
    per_image_results: Sequence[Sequence[PromotionResult]],
    annotations: Sequence[Annotation],
    model: ClassifierModel,
    min_iou: float = 0.1,
) -> list[EvalSample]:
    """Threshold-sweepable samples: one per ground-truth region, carrying
    the matched result's probabilities (zeros when missed) and the truth as
    label positions."""
    position = {c: i for i, c in enumerate(model.labels)}
    samples = []
    for results, annotation in zip(per_image_results, annotations):
        pairs, _ = match_results(results, annotation, min_iou)
        for result, region in pairs:
            probs = result.probabilities if result is not None else (0.0,) * len(model.labels)
            truth = frozenset(position[c] for c in region.categories if c in position)
            if truth:
                samples.append(EvalSample(probs, truth))
    return samples


# ---------------------------------------------------------------------------
# Output and config files


def result_to_json(result: PromotionResult) -> str:
    box = None
    if result.box is not None:
        box = [result.box.x_min, result.box.y_min, result.box.x_max, result.box.y_max]
    return json.dumps(
        {
            "image_id": result.image_id,
            "box": box,
            "text": result.text,
            "probabilities": list(result.probabilities),
            "categories": sorted(result.categories),
        },
        sort_keys=True,
    )


def write_results(per_image_results: Sequence[Sequence[PromotionResult]], path: str | Path) -> None:
    """JSON-lines file, one object per promotion, grouped by input image."""
    lines = [
        result_to_json(r) for results in per_image_results for r in results
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and # comments ignored."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()
    return entries


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def _coerce(key: str, value: str):
    declared = _FIELD_TYPES[key]
    if declared in ("bool",):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: not a boolean: {value!r}")
    if declared == "int":
        return int(value)
    if declared == "float":
        return float(value)
    if declared == "float | None":
        return None if value.lower() in ("", "none") else float(value)
    if declared == "str | None":
        return None if value.lower() in ("", "none") else value
    return value


def config_from_file(path: str | Path) -> PipelineConfig:
    """Build a PipelineConfig from a flat config file; unknown keys fail
    loudly with the list of valid ones."""
    entries = load_config_file(path)
    kwargs = {}
    for key, value in entries.items():
        if key not in _FIELD_TYPES:
            valid = ", ".join(sorted(_FIELD_TYPES))
            raise ValueError(f"{path}: unknown config key {key!r} (valid: {valid})")
        kwargs[key] = _coerce(key, value)
    return PipelineConfig(**kwargs)
