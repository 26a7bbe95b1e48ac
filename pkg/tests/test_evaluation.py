"""Example-based multi-label metrics, the threshold sweep, and CSV export."""

from __future__ import annotations

import numpy as np
import pytest

from promocat import (
    EvalReport,
    EvalSample,
    SweepPoint,
    export_curves,
    format_summary_table,
    metrics_at,
    threshold_sweep,
)
from .reference import jaccard_ref


def sample(probs, truth):
    return EvalSample(tuple(probs), frozenset(truth))


class TestMetricsAt:
    def test_half_right_prediction(self):
        """P = {0, 1}, G = {1, 2}: precision 1/2, recall 1/2, accuracy 1/3."""
        s = sample((0.9, 0.8, 0.1), {1, 2})
        p, r, a = metrics_at([s], 0.5)
        np.testing.assert_allclose((p, r, a), (0.5, 0.5, 1.0 / 3.0))

    def test_empty_prediction_scores_zero(self):
        s = sample((0.1, 0.2), {0})
        assert metrics_at([s], 0.9) == (0.0, 0.0, 0.0)

    def test_perfect_prediction(self):
        s = sample((0.9, 0.1, 0.95), {0, 2})
        assert metrics_at([s], 0.5) == (1.0, 1.0, 1.0)

    def test_mean_over_samples(self):
        samples = [
            sample((0.9, 0.1), {0}),  # perfect
            sample((0.9, 0.1), {1}),  # fully wrong
        ]
        p, r, a = metrics_at(samples, 0.5)
        assert (p, r, a) == (0.5, 0.5, 0.5)

    def test_matches_jaccard_reference(self):
        rng = np.random.default_rng(23)
        samples = []
        for _ in range(100):
            probs = rng.random(6)
            truth = {int(i) for i in rng.choice(6, size=rng.integers(1, 4), replace=False)}
            samples.append(sample(probs, truth))
        threshold = 0.4
        _, _, accuracy = metrics_at(samples, threshold)
        expected = np.mean(
            [jaccard_ref({i for i, p in enumerate(s.probs) if p > threshold}, set(s.truth)) for s in samples]
        )
        np.testing.assert_allclose(accuracy, expected)

    def test_rejects_empty_inputs(self):
        with pytest.raises(ValueError):
            metrics_at([], 0.5)
        with pytest.raises(ValueError):
            metrics_at([sample((0.5,), set())], 0.5)


class TestSweepGrid:
    def test_standard_grid_has_101_exact_points(self):
        report = threshold_sweep([sample((0.5,), {0})])
        thresholds = [p.threshold for p in report.points]
        assert len(thresholds) == 101
        assert thresholds[:4] == [0.0, 0.01, 0.02, 0.03]
        assert thresholds[30] == 0.30
        assert thresholds[-1] == 1.0

    def test_grid_handles_awkward_steps(self):
        report = threshold_sweep([sample((0.5,), {0})], 0.0, 1.0, 0.1)
        assert [p.threshold for p in report.points] == [
            0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0,
        ]

    def test_partial_range(self):
        report = threshold_sweep([sample((0.5,), {0})], 0.2, 0.4, 0.05)
        assert [p.threshold for p in report.points] == [0.2, 0.25, 0.3, 0.35, 0.4]

    def test_validation(self):
        s = [sample((0.5,), {0})]
        with pytest.raises(ValueError):
            threshold_sweep(s, 0.5, 0.5)
        with pytest.raises(ValueError):
            threshold_sweep(s, -0.1, 1.0)
        with pytest.raises(ValueError):
            threshold_sweep(s, 0.0, 1.1)
        with pytest.raises(ValueError):
            threshold_sweep(s, 0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            threshold_sweep([])


class TestSweepSelection:
    def crafted_samples(self):
        """Accuracy 0.75 below 0.30, exactly 1.0 at 0.30, <= 0.5 above:
        the optimum is the 0.30 grid point and nothing else."""
        return [
            sample((0.305, 0.01), {0}),
            sample((0.30, 0.9), {1}),
        ]

    def test_known_optimum_selected_exactly(self):
        report = threshold_sweep(self.crafted_samples())
        assert report.best_threshold == 0.30
        assert report.best.accuracy == 1.0

    def test_accuracy_profile_around_the_optimum(self):
        report = threshold_sweep(self.crafted_samples())
        by_threshold = {p.threshold: p.accuracy for p in report.points}
        assert by_threshold[0.29] == 0.75
        assert by_threshold[0.30] == 1.0
        assert by_threshold[0.31] == 0.5

    def test_ties_go_to_the_smaller_threshold(self):
        report = threshold_sweep([sample((0.95,), {0})])
        assert report.best.accuracy == 1.0
        assert report.best_threshold == 0.0

    def test_recall_never_increases_with_threshold(self):
        rng = np.random.default_rng(31)
        samples = [
            sample(rng.random(8), {int(i) for i in rng.choice(8, size=3, replace=False)})
            for _ in range(60)
        ]
        report = threshold_sweep(samples)
        recalls = [p.recall for p in report.points]
        assert all(b <= a + 1e-12 for a, b in zip(recalls, recalls[1:]))

    def test_subset_accuracy_counts_exact_matches(self):
        samples = [
            sample((0.9, 0.9), {0, 1}),  # exact at 0.5
            sample((0.9, 0.1), {0, 1}),  # partial
        ]
        report = threshold_sweep(samples, 0.5, 0.6, 0.1)
        assert report.points[0].subset_accuracy == 0.5

    def test_report_rejects_unordered_points(self):
        pt = SweepPoint(0.5, 1, 1, 1, 1)
        with pytest.raises(ValueError):
            EvalReport((pt, SweepPoint(0.4, 1, 1, 1, 1)), 0.5, pt)


class TestExportCurves:
    def test_exact_csv_layout(self, tmp_path):
        samples = [sample((0.6, 0.2), {0})]
        report = threshold_sweep(samples, 0.5, 0.7, 0.1)
        path = tmp_path / "curves.csv"
        export_curves(report, path)
        assert path.read_text() == (
            "threshold,precision,recall,accuracy,subset_accuracy\n"
            "0.5000,1.0000,1.0000,1.0000,1.0000\n"
            "0.6000,0.0000,0.0000,0.0000,0.0000\n"
            "0.7000,0.0000,0.0000,0.0000,0.0000\n"
        )

    def test_reexport_is_byte_identical(self, tmp_path):
        rng = np.random.default_rng(3)
        samples = [sample(rng.random(5), {0, 2}) for _ in range(20)]
        report = threshold_sweep(samples)
        export_curves(report, tmp_path / "a.csv")
        export_curves(report, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestSummaryTable:
    def test_alignment_and_rounding(self):
        table = format_summary_table(
            [("pipeline", 0.86123, 0.8098, 0.72), ("baseline", 0.64, 0.66, 0.48)]
        )
        assert table == (
            "Method    Precision  Recall  Accuracy\n"
            "pipeline  0.8612     0.8098  0.7200  \n"
            "baseline  0.6400     0.6600  0.4800  "
        )
