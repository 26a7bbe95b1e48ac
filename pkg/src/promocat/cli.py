"""Command-line interface.

Subcommands: generate (synthetic corpus), train, predict, evaluate, sweep,
stats.  Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .classifier import (
    FeatureExtractorConfig,
    ModelLoadError,
    TrainConfig,
    load_model,
    predict_probs,
    save_model,
    train,
)
from .corpus import (
    AnnotationError,
    PageLayoutError,
    SyntheticConfig,
    compute_stats,
    format_stats_table,
    generate_page,
    load_annotations,
    save_annotations,
)
from .detector import DetectionError
from .evaluation import EvalSample, export_curves, format_summary_table, threshold_sweep
from .image import load_png, save_png
from .ocr import OcrError, postprocess
from .pipeline import (
    PipelineConfig,
    PipelineContext,
    PipelineError,
    benchmark,
    config_from_file,
    run_batch,
    write_results,
)

USAGE_EXIT = 1
RUNTIME_EXIT = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this tool reserves 2 for runtime
    failures, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="promocat",
        description="Detect, read, and categorize promotion descriptions in leaflet images.",
    )
    parser.add_argument(
        "--config",
        help="flat key=value pipeline config file (keys documented in the README)",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a seeded synthetic leaflet corpus")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=10, help="number of pages")
    g.add_argument("--categories", type=int, default=20)
    g.add_argument("--zipf-exponent", type=float, default=1.2)
    g.add_argument("--multi-label-prob", type=float, default=0.3)
    g.add_argument("--distractor-density", type=float, default=0.5)
    g.add_argument("--vocab-per-category", type=int, default=25)
    g.add_argument("--page-width", type=int, default=800)
    g.add_argument("--page-height", type=int, default=1000)
    g.add_argument("--no-images", action="store_true", help="annotations only")

    t = sub.add_parser("train", help="train the category classifier on annotations")
    t.add_argument("--annotations", required=True)
    t.add_argument("--out", required=True, help="model file to write")
    t.add_argument("--dim", type=int, default=100)
    t.add_argument("--epochs", type=int, default=30)
    t.add_argument("--lr", type=float, default=0.1)
    t.add_argument("--lr-update-rate", type=int, default=100)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--ngram-len", type=int, default=3)
    t.add_argument("--buckets", type=int, default=1 << 21, help="hash bucket count")
    t.add_argument("--no-word-tokens", action="store_true", help="disable whole-word features")

    p = sub.add_parser("predict", help="run the pipeline on an image or directory")
    p.add_argument("--image", required=True, help="PNG file or directory of PNGs")
    p.add_argument("--model", help="model file (overrides config model_path)")
    p.add_argument("--baseline", action="store_true", help="unmasked-paragraph baseline mode")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="JSON-lines output file (default stdout)")

    e = sub.add_parser("evaluate", help="score pipeline and baseline against annotations")
    e.add_argument("--annotations", required=True)
    e.add_argument("--images", required=True, help="directory of page PNGs")
    e.add_argument("--model", help="model file (overrides config model_path)")
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--min-iou", type=float, default=0.1, help="result-to-region match overlap")

    s = sub.add_parser("sweep", help="classification threshold sweep on annotated text")
    s.add_argument("--annotations", required=True)
    s.add_argument("--model", help="model file (overrides config model_path)")
    s.add_argument("--out", required=True, help="CSV file to write")
    s.add_argument("--step", type=float, default=0.01)

    st = sub.add_parser("stats", help="print corpus statistics as an aligned table")
    st.add_argument("--annotations", required=True)

    return parser


def _pipeline_config(args, **overrides) -> PipelineConfig:
    cfg = config_from_file(args.config) if args.config else PipelineConfig()
    fields = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(cfg, **fields) if fields else cfg


def _cmd_generate(args) -> int:
    cfg = SyntheticConfig(
        seed=args.seed,
        image_count=args.count,
        categories=args.categories,
        zipf_exponent=args.zipf_exponent,
        multi_label_prob=args.multi_label_prob,
        distractor_density=args.distractor_density,
        vocab_per_category=args.vocab_per_category,
        page_size=(args.page_width, args.page_height),
    )
    out = Path(args.out)
    pages_dir = out / "pages"
    if not args.no_images:
        pages_dir.mkdir(parents=True, exist_ok=True)
    else:
        out.mkdir(parents=True, exist_ok=True)
    annotations = []
    for i in range(cfg.image_count):
        image, ann = generate_page(cfg, i, render=not args.no_images)
        annotations.append(ann)
        if image is not None:
            save_png(image, pages_dir / f"{ann.image_id}.png")
    save_annotations(annotations, out / "annotations.json")
    print(format_stats_table(compute_stats(annotations), name=out.name))
    return 0


def _cmd_train(args) -> int:
    annotations = load_annotations(args.annotations)
    samples = [
        (postprocess(region.text), region.categories)
        for ann in annotations
        for region in ann.regions
    ]
    model = train(
        samples,
        TrainConfig(
            lr=args.lr,
            lr_update_rate=args.lr_update_rate,
            epochs=args.epochs,
            dim=args.dim,
            seed=args.seed,
        ),
        FeatureExtractorConfig(
            ngram_len=args.ngram_len,
            bucket_count=args.buckets,
            include_word_tokens=not args.no_word_tokens,
        ),
    )
    save_model(model, args.out)
    print(
        f"trained on {len(samples)} descriptions, "
        f"{len(model.labels)} categories -> {args.out}"
    )
    return 0


def _load_images(path: str):
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.png"))
        if not files:
            raise FileNotFoundError(f"no .png files in {p}")
        return [load_png(f) for f in files]
    return [load_png(p)]


def _cmd_predict(args) -> int:
    cfg = _pipeline_config(
        args, model_path=args.model, baseline_mode=True if args.baseline else None
    )
    ctx = PipelineContext.from_config(cfg)
    images = _load_images(args.image)
    results = run_batch(images, ctx, jobs=args.jobs)
    if args.out:
        write_results(results, args.out)
    else:
        from .pipeline import result_to_json

        for group in results:
            for r in group:
                print(result_to_json(r))
    return 0


def _cmd_evaluate(args) -> int:
    annotations = load_annotations(args.annotations)
    cfg = _pipeline_config(args, model_path=args.model, ocr_ground_truth=args.annotations)
    ctx = PipelineContext.from_config(cfg, annotations=annotations)
    by_id = {a.image_id: a for a in annotations}
    images = _load_images(args.images)
    images = [img for img in images if img.image_id in by_id]
    if not images:
        raise FileNotFoundError(f"{args.images}: no page images matching the annotations")
    aligned = [by_id[img.image_id] for img in images]

    pipeline_results = run_batch(images, ctx, jobs=args.jobs)
    base_cfg = dataclasses.replace(cfg, baseline_mode=True)
    base_ctx = PipelineContext.from_config(base_cfg, annotations=annotations, model=ctx.model)
    baseline_results = run_batch(images, base_ctx, jobs=args.jobs)

    full = benchmark(pipeline_results, aligned, min_iou=args.min_iou)
    base = benchmark(baseline_results, aligned, min_iou=args.min_iou)
    print(
        format_summary_table(
            [
                ("baseline (unmasked paragraphs)", base.precision, base.recall, base.accuracy),
                ("pipeline (detect+mask)", full.precision, full.recall, full.accuracy),
            ]
        )
    )
    print(
        f"\npipeline: {full.matched} matched, {full.missed} missed, "
        f"{full.false_positives} false positives; "
        f"baseline: {base.matched} matched, {base.missed} missed, "
        f"{base.false_positives} false positives"
    )
    return 0


def _cmd_sweep(args) -> int:
    annotations = load_annotations(args.annotations)
    cfg = _pipeline_config(args, model_path=args.model)
    if not cfg.model_path:
        raise ValueError("a model is required: pass --model or set model_path in the config")
    model = load_model(cfg.model_path)
    position = {c: i for i, c in enumerate(model.labels)}
    samples = []
    for ann in annotations:
        for region in ann.regions:
            truth = frozenset(position[c] for c in region.categories if c in position)
            if not truth:
                continue
            probs = predict_probs(postprocess(region.text), model)
            samples.append(EvalSample(tuple(probs), truth))
    if not samples:
        raise ValueError("no annotated regions with categories known to the model")
    report = threshold_sweep(samples, step=args.step)
    export_curves(report, args.out)
    best = report.best
    print(
        f"best threshold {report.best_threshold:.2f}: "
        f"precision {best.precision:.4f}, recall {best.recall:.4f}, "
        f"accuracy {best.accuracy:.4f} -> {args.out}"
    )
    return 0


def _cmd_stats(args) -> int:
    annotations = load_annotations(args.annotations)
    print(format_stats_table(compute_stats(annotations), name=Path(args.annotations).stem))
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "stats": _cmd_stats,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (
        AnnotationError,
        DetectionError,
        OcrError,
        PipelineError,
        ModelLoadError,
        PageLayoutError,
        FileNotFoundError,
        ValueError,
        OSError,
    ) as exc:
        print(f"promocat {args.command}: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
