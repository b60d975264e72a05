"""Image decode/encode helpers; the only module touching Pillow."""

from __future__ import annotations

import io
import math
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageDecodeError, InvalidInputError
from .geometry import BoundingBox
from .panelizer import RasterImage

__all__ = ["load_image", "decode_image", "encode_png", "crop"]


def decode_image(data: bytes) -> RasterImage:
    """Decode PNG/JPEG bytes into a RasterImage (RGB or grayscale)."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            if img.mode in ("L",):
                pixels = np.asarray(img, dtype=np.uint8)
            else:
                pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image: {exc}") from exc
    return RasterImage(pixels)


def load_image(path: str | Path) -> tuple[bytes, RasterImage]:
    """Read a file and decode it; returns the original bytes and the raster."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ImageDecodeError(f"cannot read {path}: {exc}") from exc
    return data, decode_image(data)


def encode_png(raster: RasterImage) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(raster.pixels).save(buf, format="PNG")
    return buf.getvalue()


def crop(raster: RasterImage, box: BoundingBox) -> RasterImage:
    """Cut the (integer-aligned, bounds-clipped) region of ``box``."""
    x0 = max(0, math.floor(box.x_min))
    y0 = max(0, math.floor(box.y_min))
    x1 = min(raster.width, math.ceil(box.x_max))
    y1 = min(raster.height, math.ceil(box.y_max))
    if x1 <= x0 or y1 <= y0:
        raise InvalidInputError(f"degenerate crop {box} on {raster.width}x{raster.height} image")
    return RasterImage(np.ascontiguousarray(raster.pixels[y0:y1, x0:x1]))
