"""Detect, mask, read
===================

The core trick of the pipeline: find description regions, black out
everything else, and OCR only what survives.  Distractor prices vanish;
the description text comes back word for word.
"""

from pathlib import Path

from promocat import (
    HeuristicProposalSource,
    DetectionConfig,
    MockOcrProvider,
    SyntheticConfig,
    apply_mask,
    detect_regions,
    generate_page,
    group_words,
    postprocess,
    save_png,
)

out_dir = Path(__file__).parent / "output" / "masking"
out_dir.mkdir(parents=True, exist_ok=True)

cfg = SyntheticConfig(seed=9, categories=10, distractor_density=0.8)
image, annotation = generate_page(cfg, index=0)
provider = MockOcrProvider([annotation])

# OCR on the wild: the unmasked page mixes descriptions and price noise.
wild = provider.analyze(image)
print(f"unmasked OCR sees {len(wild.words)} words in {len(wild.paragraphs)} paragraphs")

# Detect text blocks (no ground truth involved), then mask.
regions = detect_regions(image, HeuristicProposalSource(), DetectionConfig())
masked = apply_mask(image, regions)
save_png(image, out_dir / "page.png")
save_png(masked, out_dir / "page_masked.png")
print(f"heuristic detector proposed {len(regions)} regions")

# Mask with ground-truth boxes instead to isolate just the descriptions.
gt_boxes = [r.box for r in annotation.regions]
gt_masked = apply_mask(image, gt_boxes)
surviving = provider.analyze(gt_masked)
texts = group_words(list(surviving.words), gt_boxes)
save_png(gt_masked, out_dir / "page_gt_masked.png")

print(f"\nafter ground-truth masking only {len(surviving.words)} words survive:")
exact = 0
for i, region in enumerate(annotation.regions):
    recovered = postprocess(texts[i])
    mark = "==" if recovered == region.text else "!="
    exact += recovered == region.text
    print(f"  {mark} {recovered!r}")
print(f"\n{exact}/{len(annotation.regions)} regions recovered exactly")
print(f"images -> {out_dir}")
