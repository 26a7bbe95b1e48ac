"""promocat: find promotion descriptions in retail leaflet images, read
them, and assign product categories.

The package is organized as a pipeline of small, independently testable
stages: box geometry (`geometry`), page masking (`masking`), region
detection behind a provider seam (`detector`), OCR behind a provider seam
plus text cleanup (`ocr`), a trainable multi-label text classifier
(`classifier`), evaluation tooling (`evaluation`), a synthetic annotated
corpus generator (`corpus`), and the end-to-end orchestration plus CLI
(`pipeline`, `cli`).
"""

from .classifier import (
    ClassifierModel,
    FeatureExtractorConfig,
    ModelChecksumError,
    ModelLoadError,
    ModelTruncatedError,
    ModelVersionError,
    TrainConfig,
    decode_labels,
    embed,
    extract_features,
    load_model,
    loss_and_gradients,
    predict_probs,
    save_model,
    train,
)
from .corpus import (
    Annotation,
    AnnotationError,
    CorpusStats,
    DistractorAnnotation,
    PageLayoutError,
    RegionAnnotation,
    SyntheticConfig,
    compute_stats,
    format_stats_table,
    generate_page,
    generate_synthetic,
    load_annotations,
    save_annotations,
)
from .detector import (
    DetectionConfig,
    DetectionError,
    ExternalProposalSource,
    FileProposalSource,
    HeuristicProposalSource,
    HeuristicSettings,
    detect_regions,
    heuristic_proposals,
    load_proposals,
)
from .evaluation import (
    EvalReport,
    EvalSample,
    SweepPoint,
    export_curves,
    format_summary_table,
    metrics_at,
    threshold_sweep,
)
from .geometry import AnchorConfig, BBox, clip_box, generate_anchors, iou, nms
from .image import RasterImage, encode_png, load_png, resize_longest_side, save_png
from .masking import apply_mask, pixel_bounds
from .ocr import (
    MockOcrProvider,
    OcrError,
    OcrResult,
    OcrWord,
    PostprocessConfig,
    RemoteOcrProvider,
    group_words,
    levenshtein,
    postprocess,
    recognize,
)
from .pipeline import (
    BenchmarkScore,
    PipelineConfig,
    PipelineContext,
    PipelineError,
    PromotionResult,
    benchmark,
    config_from_file,
    eval_samples_from_matches,
    match_results,
    result_to_json,
    run_baseline,
    run_batch,
    run_pipeline,
    write_results,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorConfig",
    "Annotation",
    "AnnotationError",
    "BBox",
    "BenchmarkScore",
    "ClassifierModel",
    "CorpusStats",
    "DetectionConfig",
    "DetectionError",
    "DistractorAnnotation",
    "EvalReport",
    "EvalSample",
    "ExternalProposalSource",
    "FeatureExtractorConfig",
    "FileProposalSource",
    "HeuristicProposalSource",
    "HeuristicSettings",
    "MockOcrProvider",
    "ModelChecksumError",
    "ModelLoadError",
    "ModelTruncatedError",
    "ModelVersionError",
    "OcrError",
    "OcrResult",
    "OcrWord",
    "PageLayoutError",
    "PipelineConfig",
    "PipelineContext",
    "PipelineError",
    "PostprocessConfig",
    "PromotionResult",
    "RasterImage",
    "RegionAnnotation",
    "RemoteOcrProvider",
    "SweepPoint",
    "SyntheticConfig",
    "TrainConfig",
    "apply_mask",
    "benchmark",
    "clip_box",
    "compute_stats",
    "config_from_file",
    "decode_labels",
    "detect_regions",
    "embed",
    "encode_png",
    "eval_samples_from_matches",
    "export_curves",
    "extract_features",
    "format_stats_table",
    "format_summary_table",
    "generate_anchors",
    "generate_page",
    "generate_synthetic",
    "group_words",
    "heuristic_proposals",
    "iou",
    "levenshtein",
    "load_annotations",
    "load_model",
    "load_png",
    "load_proposals",
    "loss_and_gradients",
    "match_results",
    "metrics_at",
    "nms",
    "pixel_bounds",
    "postprocess",
    "predict_probs",
    "recognize",
    "result_to_json",
    "resize_longest_side",
    "run_baseline",
    "run_batch",
    "run_pipeline",
    "save_annotations",
    "save_model",
    "save_png",
    "threshold_sweep",
    "train",
    "write_results",
]
