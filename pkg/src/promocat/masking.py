"""Blacken everything outside the kept boxes so surrounding text cannot
leak into OCR output."""

from __future__ import annotations

import math

import numpy as np

from .geometry import BBox
from .image import RasterImage

__all__ = ["apply_mask", "pixel_bounds"]


def pixel_bounds(box: BBox, width: int, height: int) -> tuple[int, int, int, int] | None:
    """Inclusive pixel index range (x0, y0, x1, y1) covered by a box.

    Rounding is generous so glyphs touching a box edge are never cropped:
    floor on every edge, both ends inclusive.  A box at (2, 2, 5, 5) keeps
    pixels with 2 <= x <= 5 and 2 <= y <= 5.  Returns None when the box
    misses the image entirely.
    """
    x0 = max(0, math.floor(box.x_min))
    y0 = max(0, math.floor(box.y_min))
    x1 = min(width - 1, math.floor(box.x_max))
    y1 = min(height - 1, math.floor(box.y_max))
    if x0 > x1 or y0 > y1:
        return None
    return x0, y0, x1, y1


def apply_mask(image: RasterImage, keep: list[BBox]) -> RasterImage:
    """Return a copy of ``image`` with every pixel outside the union of the
    kept boxes set to pure black.  The input image is not modified."""
    out = np.zeros_like(image.pixels)
    for box in keep:
        bounds = pixel_bounds(box, image.width, image.height)
        if bounds is None:
            continue
        x0, y0, x1, y1 = bounds
        out[y0 : y1 + 1, x0 : x1 + 1] = image.pixels[y0 : y1 + 1, x0 : x1 + 1]
    return RasterImage(out, image.image_id)
