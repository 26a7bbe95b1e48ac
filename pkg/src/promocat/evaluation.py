"""Multi-label evaluation: example-based precision/recall/accuracy, a
threshold sweep with accuracy-maximizing selection, and plot-ready CSV
export.

Metric definitions (they matter when comparing numbers across systems):
for one sample with predicted set P and ground-truth set G,

    precision = |P n G| / |P|      (0 when P is empty)
    recall    = |P n G| / |G|
    accuracy  = |P n G| / |P u G|  (Jaccard similarity)

and the reported values are plain means over samples (example-based, not
micro or macro).  Subset accuracy (1 iff P == G) is computed alongside for
transparency but never drives threshold selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .classifier import decode_labels

__all__ = [
    "EvalSample",
    "SweepPoint",
    "EvalReport",
    "metrics_at",
    "threshold_sweep",
    "export_curves",
    "format_summary_table",
]


@dataclass(frozen=True)
class EvalSample:
    """Predicted per-label probabilities plus the true label positions."""

    probs: tuple[float, ...]
    truth: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        object.__setattr__(self, "truth", frozenset(int(t) for t in self.truth))


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    precision: float
    recall: float
    accuracy: float
    subset_accuracy: float


@dataclass(frozen=True)
class EvalReport:
    points: tuple[SweepPoint, ...]
    best_threshold: float
    best: SweepPoint

    def __post_init__(self):
        thresholds = [p.threshold for p in self.points]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("sweep thresholds must be strictly increasing")


def _sample_metrics(sample: EvalSample, threshold: float) -> tuple[float, float, float, float]:
    predicted = decode_labels(np.asarray(sample.probs), threshold)
    truth = sample.truth
    inter = len(predicted & truth)
    precision = inter / len(predicted) if predicted else 0.0
    recall = inter / len(truth)
    accuracy = inter / len(predicted | truth)
    return precision, recall, accuracy, 1.0 if predicted == truth else 0.0


def metrics_at(
    samples: Sequence[EvalSample], threshold: float
) -> tuple[float, float, float]:
    """Mean example-based (precision, recall, accuracy) at one threshold."""
    if not samples:
        raise ValueError("no evaluation samples")
    for i, s in enumerate(samples):
        if not s.truth:
            raise ValueError(f"sample {i} has an empty ground-truth set")
    acc = np.zeros(4)
    for s in samples:
        acc += _sample_metrics(s, threshold)
    p, r, a, _ = acc / len(samples)
    return float(p), float(r), float(a)


def _grid(start: float, end: float, step: float) -> list[float]:
    count = math.floor((end - start) / step + 1e-9) + 1
    # Rounding keeps thresholds like 0.30 exact so reported optima are
    # clean grid values.
    return [round(start + i * step, 12) for i in range(count)]


def threshold_sweep(
    samples: Sequence[EvalSample],
    start: float = 0.0,
    end: float = 1.0,
    step: float = 0.01,
) -> EvalReport:
    """Evaluate every grid threshold and pick the accuracy argmax (ties go
    to the smaller threshold)."""
    if not 0.0 <= start < end <= 1.0:
        raise ValueError("need 0 <= start < end <= 1")
    if step <= 0:
        raise ValueError("step must be positive")
    if not samples:
        raise ValueError("no evaluation samples")
    for i, s in enumerate(samples):
        if not s.truth:
            raise ValueError(f"sample {i} has an empty ground-truth set")

    points = []
    for t in _grid(start, end, step):
        acc = np.zeros(4)
        for s in samples:
            acc += _sample_metrics(s, t)
        p, r, a, sub = acc / len(samples)
        points.append(SweepPoint(t, float(p), float(r), float(a), float(sub)))

    best = max(points, key=lambda pt: pt.accuracy)  # max keeps the first tie
    return EvalReport(tuple(points), best.threshold, best)


def export_curves(report: EvalReport, path: str | Path) -> None:
    """CSV of the sweep, all columns fixed to 4 decimals; deterministic, so
    re-exporting the same report is byte-identical."""
    if not report.points:
        raise ValueError("empty report")
    lines = ["threshold,precision,recall,accuracy,subset_accuracy"]
    for pt in report.points:
        lines.append(
            f"{pt.threshold:.4f},{pt.precision:.4f},{pt.recall:.4f},"
            f"{pt.accuracy:.4f},{pt.subset_accuracy:.4f}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def format_summary_table(rows: Iterable[tuple[str, float, float, float]]) -> str:
    """Aligned text table with Method / Precision / Recall / Accuracy."""
    headers = ("Method", "Precision", "Recall", "Accuracy")
    rendered = [
        (method, f"{p:.4f}", f"{r:.4f}", f"{a:.4f}") for method, p, r, a in rows
    ]
    widths = [
        max(len(headers[c]), *(len(row[c]) for row in rendered)) if rendered else len(headers[c])
        for c in range(4)
    ]
    out = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    for row in rendered:
        out.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(out)
