"""Boxes, overlap, and non-maximum suppression
=============================================

Walks the geometry layer: IoU between two boxes, thinning a cluster of
near-duplicate detections with NMS, and the anchor grid a region proposer
would refine.
"""

import numpy as np

from promocat import AnchorConfig, BBox, generate_anchors, iou, nms

rng = np.random.default_rng(0)

# Two boxes sharing a third of their union.
a = BBox(0, 0, 100, 100, score=0.9)
b = BBox(50, 0, 150, 100, score=0.8)
print(f"iou(a, b) = {iou(a, b):.4f}")
print(f"iou(a, a) = {iou(a, a):.4f} (identity)")

# A cluster of jittered copies around one true region plus one far box:
# NMS keeps the best copy per cluster and the loner.
true_box = np.array([200.0, 120.0, 340.0, 200.0])
detections = []
for _ in range(12):
    jitter = rng.normal(scale=4.0, size=4)
    x0, y0, x1, y1 = true_box + jitter
    detections.append(BBox(x0, y0, x1, y1, score=float(rng.uniform(0.5, 1.0))))
detections.append(BBox(500, 400, 620, 470, score=0.6))

kept = nms(detections, iou_threshold=0.5)
print(f"\n{len(detections)} raw detections -> {len(kept)} after NMS at 0.5:")
for box in kept:
    print(f"  score {box.score:.3f} at ({box.x_min:6.1f}, {box.y_min:6.1f}, "
          f"{box.x_max:6.1f}, {box.y_max:6.1f})")

# The anchor grid: every (scale, ratio) shape at every stride cell that
# fits the image, scores all zero until a model fills them in.
anchor_cfg = AnchorConfig(base_size=64, scales=(1.0, 2.0), ratios=(0.5, 1.0, 2.0), stride=64)
anchors = generate_anchors(anchor_cfg, image_w=256, image_h=256)
print(f"\n{len(anchors)} anchors on a 256x256 grid (base 64, 2 scales x 3 ratios)")
center = anchors[len(anchors) // 2]
print(f"one anchor: ({center.x_min:.1f}, {center.y_min:.1f}, "
      f"{center.x_max:.1f}, {center.y_max:.1f}), score {center.score}")
