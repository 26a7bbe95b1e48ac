"""Train the classifier and calibrate its threshold
=================================================

Trains the subword n-gram model on synthetic descriptions, sweeps the
decision threshold, exports the curves as CSV, and plots precision,
recall, and accuracy against the threshold.
"""

import itertools
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from promocat import (
    EvalSample,
    FeatureExtractorConfig,
    SyntheticConfig,
    TrainConfig,
    export_curves,
    generate_page,
    postprocess,
    predict_probs,
    save_model,
    threshold_sweep,
    train,
)

out_dir = Path(__file__).parent / "output" / "sweep"
out_dir.mkdir(parents=True, exist_ok=True)

# 2,000 cleaned (text, categories) samples from the page stream.
cfg = SyntheticConfig(seed=5, categories=12, multi_label_prob=0.3)
samples = []
for index in itertools.count():
    _, annotation = generate_page(cfg, index, render=False)
    samples.extend((postprocess(r.text), r.categories) for r in annotation.regions)
    if len(samples) >= 2000:
        samples = samples[:2000]
        break

split = int(len(samples) * 0.8)
model = train(
    samples[:split],
    TrainConfig(lr=0.1, lr_update_rate=100, epochs=20, dim=64, seed=0),
    FeatureExtractorConfig(ngram_len=3, bucket_count=1 << 16),
)
save_model(model, out_dir / "model.bin")
print(f"trained on {split} descriptions, {len(model.labels)} categories")

# Held-out probabilities become sweepable samples.
position = {c: i for i, c in enumerate(model.labels)}
held_out = [
    EvalSample(tuple(predict_probs(text, model)), frozenset(position[c] for c in cats))
    for text, cats in samples[split:]
]
report = threshold_sweep(held_out, step=0.01)
export_curves(report, out_dir / "curves.csv")
best = report.best
print(f"best threshold {report.best_threshold:.2f}: precision {best.precision:.4f}, "
      f"recall {best.recall:.4f}, accuracy {best.accuracy:.4f}")

thresholds = [p.threshold for p in report.points]
fig, ax = plt.subplots(figsize=(7, 4.5))
ax.plot(thresholds, [p.precision for p in report.points], label="precision")
ax.plot(thresholds, [p.recall for p in report.points], label="recall")
ax.plot(thresholds, [p.accuracy for p in report.points], label="accuracy")
ax.axvline(report.best_threshold, color="gray", linestyle=":",
           label=f"best = {report.best_threshold:.2f}")
ax.set_xlabel("decision threshold")
ax.set_ylabel("example-based metric")
ax.set_title("Threshold sweep on held-out descriptions")
ax.legend()
fig.tight_layout()
fig.savefig(out_dir / "curves.png", dpi=120)
print(f"curves -> {out_dir / 'curves.csv'} and {out_dir / 'curves.png'}")
