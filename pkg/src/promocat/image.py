"""8-bit RGB raster images: the leaflet page representation.

Pixels live in a ``(height, width, 3)`` uint8 numpy array, row-major.
``image_id`` identifies the page across annotation files and providers and
is carried through masking/resizing unchanged.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = ["RasterImage", "load_png", "save_png", "encode_png", "resize_longest_side"]

WHITE = (255, 255, 255)
BLACK = (0, 0, 0)


@dataclass
class RasterImage:
    pixels: np.ndarray
    image_id: str | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) pixel array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image dimensions must be positive")
        if px.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {px.dtype}")
        self.pixels = px

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def blank(cls, width: int, height: int, color=WHITE, image_id: str | None = None):
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:, :] = color
        return cls(px, image_id)

    def luminance(self) -> np.ndarray:
        """Rec. 601 luma as a (h, w) float64 array in [0, 255]."""
        px = self.pixels.astype(np.float64)
        return 0.299 * px[:, :, 0] + 0.587 * px[:, :, 1] + 0.114 * px[:, :, 2]

    def copy(self) -> "RasterImage":
        return RasterImage(self.pixels.copy(), self.image_id)


def load_png(path: str | Path) -> RasterImage:
    """Read an image file as RGB; image_id is the filename stem."""
    path = Path(path)
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        return RasterImage(np.asarray(rgb, dtype=np.uint8).copy(), image_id=path.stem)


def save_png(image: RasterImage, path: str | Path) -> None:
    Image.fromarray(image.pixels, mode="RGB").save(Path(path), format="PNG")


def encode_png(image: RasterImage) -> bytes:
    """PNG-encode in memory (for network transport)."""
    buf = io.BytesIO()
    Image.fromarray(image.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def resize_longest_side(image: RasterImage, target: int) -> tuple[RasterImage, float]:
    """Scale so the longest side equals ``target`` px (bilinear).

    Returns the resized image and the applied scale factor; divide resized
    coordinates by the factor to map back to the original frame.
    """
    if target <= 0:
        raise ValueError("resize target must be positive")
    scale = target / max(image.width, image.height)
    if scale == 1.0:
        return image, 1.0
    new_w = max(1, round(image.width * scale))
    new_h = max(1, round(image.height * scale))
    resized = Image.fromarray(image.pixels, mode="RGB").resize(
        (new_w, new_h), resample=Image.BILINEAR
    )
    return RasterImage(np.asarray(resized, dtype=np.uint8).copy(), image.image_id), scale
