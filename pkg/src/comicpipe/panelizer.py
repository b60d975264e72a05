"""Panel segmentation for comic-strip images.

Panels are found by estimating the gutter intensity from the image border
(gutters may be white or black), binarizing against it, and taking bounding
boxes of the resulting connected components. Boxes that overlap beyond
``merge_iou`` are merged, and when nothing survives the whole image is
returned as a single fallback panel so downstream stages always have at
least one panel to work with.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError
from .geometry import BoundingBox, area_fraction

__all__ = [
    "RasterImage",
    "Panel",
    "PanelizerConfig",
    "extract_panels",
    "reading_order",
]


@dataclass(frozen=True)
class RasterImage:
    """Decoded image: uint8 pixels, shape (H, W) grayscale or (H, W, 3) RGB."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.ndim not in (2, 3):
            raise InvalidInputError("pixels must be a 2-D or 3-D numpy array")
        if p.ndim == 3 and p.shape[2] != 3:
            raise InvalidInputError(f"color images need 3 channels, got {p.shape[2]}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise InvalidInputError(f"empty image with shape {p.shape}")
        if p.dtype != np.uint8:
            raise InvalidInputError(f"pixels must be uint8, got {p.dtype}")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    def grayscale(self) -> np.ndarray:
        """Float grayscale intensities via the ITU-R 601 luma weights."""
        p = self.pixels
        if p.ndim == 2:
            return p.astype(np.float64)
        return p[..., 0] * 0.299 + p[..., 1] * 0.587 + p[..., 2] * 0.114


@dataclass
class Panel:
    """A panel in reading order with its assigned character names and dialogue."""

    index: int
    box: BoundingBox
    characters: list[str] = field(default_factory=list)
    texts: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class PanelizerConfig:
    binarize_delta: float = 32.0
    min_panel_area_frac: float = 0.02
    merge_iou: float = 0.2
    row_tolerance: float = 0.5


def _merge_overlapping(boxes: list[BoundingBox], merge_iou: float) -> list[BoundingBox]:
    """Union-merge boxes until every remaining pair has IoU <= merge_iou."""
    from .geometry import iou

    boxes = sorted(boxes)
    merged = True
    while merged:
        merged = False
        out: list[BoundingBox] = []
        for box in boxes:
            for i, kept in enumerate(out):
                if iou(box, kept) > merge_iou:
                    out[i] = kept.union_box(box)
                    merged = True
                    break
            else:
                out.append(box)
        boxes = sorted(out)
    return boxes


def extract_panels(image: RasterImage, config: PanelizerConfig | None = None) -> list[BoundingBox]:
    """Segment an image into panel bounding boxes (unordered; >= 1 box).

    Steps: grayscale; background intensity = median of the 1-px border ring;
    foreground mask where |intensity - background| > binarize_delta;
    4-connected components; keep component boxes covering at least
    ``min_panel_area_frac`` of the image; merge boxes with IoU above
    ``merge_iou``; fall back to the full image when nothing remains.
    """
    config = config or PanelizerConfig()
    gray = image.grayscale()
    h, w = gray.shape

    border = np.concatenate([gray[0, :], gray[-1, :], gray[:, 0], gray[:, -1]])
    background = float(np.median(border))

    mask = np.abs(gray - background) > config.binarize_delta

    # 4-connectivity: the default cross-shaped structuring element.
    labeled, count = ndimage.label(mask)
    boxes: list[BoundingBox] = []
    for sl in ndimage.find_objects(labeled):
        if sl is None:
            continue
        ys, xs = sl
        box = BoundingBox(float(xs.start), float(ys.start), float(xs.stop), float(ys.stop))
        if area_fraction(box, w, h) >= config.min_panel_area_frac:
            boxes.append(box)

    boxes = _merge_overlapping(boxes, config.merge_iou)

    if not boxes:
        return [BoundingBox(0.0, 0.0, float(w), float(h))]
    return boxes


def reading_order(boxes: list[BoundingBox], row_tolerance: float = 0.5) -> list[BoundingBox]:
    """Order panel boxes for reading: rows top-to-bottom, left-to-right within a row.

    Two boxes share a row when their vertical centers differ by at most
    ``row_tolerance`` times the median box height (single-linkage in 1-D, so
    the relation is closed transitively). The result is a permutation of the
    input and does not depend on the input ordering.
    """
    if not boxes:
        raise InvalidInputError("reading_order needs at least one box")
    ordered = sorted(boxes, key=lambda b: (b.center[1], b.x_min, b.y_min, b.x_max, b.y_max))
    heights = sorted(b.height for b in ordered)
    n = len(heights)
    median_h = heights[n // 2] if n % 2 else 0.5 * (heights[n // 2 - 1] + heights[n // 2])
    threshold = row_tolerance * median_h

    rows: list[list[BoundingBox]] = [[ordered[0]]]
    for box in ordered[1:]:
        if box.center[1] - rows[-1][-1].center[1] <= threshold:
            rows[-1].append(box)
        else:
            rows.append([box])

    out: list[BoundingBox] = []
    for row in rows:
        out.extend(sorted(row, key=lambda b: (b.x_min, b.y_min, b.x_max, b.y_max)))
    return out
