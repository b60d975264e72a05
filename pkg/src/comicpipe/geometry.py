"""Axis-aligned box arithmetic: IoU, area fractions, and non-maximum suppression.

Boxes use pixel coordinates with the origin at the top-left corner and y
growing downward. Width is ``x_max - x_min`` (half-open pixel semantics);
the same convention is used everywhere, including evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidInputError

__all__ = ["BoundingBox", "Detection", "iou", "area_fraction", "nms", "detection_sort_key"]


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Axis-aligned rectangle with ``x_min <= x_max`` and ``y_min <= y_max``."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if self.x_min < 0 or self.y_min < 0:
            raise InvalidInputError(f"negative coordinates in {self!r}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise InvalidInputError(f"inverted box {self!r}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def intersection_area(self, other: "BoundingBox") -> float:
        iw = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        ih = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        if iw <= 0 or ih <= 0:
            return 0.0
        return iw * ih

    def clip(self, width: float, height: float) -> "BoundingBox":
        """Clip to an image of the given size."""
        return BoundingBox(
            min(max(self.x_min, 0.0), width),
            min(max(self.y_min, 0.0), height),
            min(max(self.x_max, 0.0), width),
            min(max(self.y_max, 0.0), height),
        )

    def union_box(self, other: "BoundingBox") -> "BoundingBox":
        """Smallest box covering both."""
        return BoundingBox(
            min(self.x_min, other.x_min),
            min(self.y_min, other.y_min),
            max(self.x_max, other.x_max),
            max(self.y_max, other.y_max),
        )

    def as_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @classmethod
    def from_list(cls, coords) -> "BoundingBox":
        if len(coords) != 4:
            raise InvalidInputError(f"box needs 4 coordinates, got {len(coords)}")
        return cls(float(coords[0]), float(coords[1]), float(coords[2]), float(coords[3]))


@dataclass(frozen=True)
class Detection:
    """A bounding box with a class label and a confidence score in [0, 1]."""

    box: BoundingBox
    label: str
    confidence: float

    def __post_init__(self) -> None:
        if not self.label:
            raise InvalidInputError("detection label must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidInputError(f"confidence {self.confidence} outside [0, 1]")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0.0 when the union is degenerate."""
    inter = a.intersection_area(b)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def area_fraction(box: BoundingBox, image_width: float, image_height: float) -> float:
    """Fraction of the image covered by ``box`` after clipping to the image."""
    if image_width <= 0 or image_height <= 0:
        raise InvalidInputError(
            f"image dimensions must be positive, got {image_width}x{image_height}"
        )
    clipped = box.clip(image_width, image_height)
    return clipped.area / (image_width * image_height)


def detection_sort_key(d: Detection) -> tuple:
    # Confidence descending; coordinate ties keep the output deterministic.
    return (-d.confidence, d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max, d.label)


def nms(detections: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy per-class non-maximum suppression.

    Detections are visited in confidence-descending order (ties broken by
    smaller x_min, then y_min). A detection is kept iff its IoU with every
    already-kept detection *of the same label* is <= ``iou_threshold``.
    Boxes of different labels never suppress each other.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise InvalidInputError(f"iou_threshold {iou_threshold} outside [0, 1]")
    kept: list[Detection] = []
    for det in sorted(detections, key=detection_sort_key):
        if all(
            iou(det.box, k.box) <= iou_threshold
            for k in kept
            if k.label == det.label
        ):
            kept.append(det)
    return kept
