"""Detection filtering and panel assignment.

Raw detector output goes through three steps in order: a confidence floor,
removal of text boxes covering most of the image (almost always false
positives), and per-class NMS. Surviving elements are then assigned to the
panel they overlap most.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidInputError
from .geometry import BoundingBox, Detection, area_fraction, detection_sort_key, nms
from .panelizer import Panel

__all__ = ["DetectorConfig", "filter_detections", "assign_to_panels"]


@dataclass(frozen=True)
class DetectorConfig:
    """Detector thresholds; the defaults accept moderate-confidence boxes."""

    text_threshold: float = 0.2
    box_threshold: float = 0.2
    nms_iou: float = 0.5
    max_text_area_frac: float = 0.8
    # The large-box filter targets the "text" class only; set this to apply
    # it to every class.
    area_filter_all_classes: bool = False

    def __post_init__(self) -> None:
        for name in ("text_threshold", "box_threshold", "nms_iou"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidInputError(f"{name} {v} outside [0, 1]")
        if not 0.0 < self.max_text_area_frac <= 1.0:
            raise InvalidInputError(
                f"max_text_area_frac {self.max_text_area_frac} outside (0, 1]"
            )


def filter_detections(
    raw: list[Detection],
    image_width: float,
    image_height: float,
    config: DetectorConfig | None = None,
) -> list[Detection]:
    """Apply confidence floor, large-text-box removal, and per-class NMS.

    Output is sorted by confidence descending (coordinate tie-breaks), which
    keeps it confidence-descending within every class.
    """
    config = config or DetectorConfig()
    kept = [d for d in raw if d.confidence >= config.box_threshold]
    kept = [
        d
        for d in kept
        if not (
            (d.label == "text" or config.area_filter_all_classes)
            and area_fraction(d.box, image_width, image_height) > config.max_text_area_frac
        )
    ]
    return sorted(nms(kept, config.nms_iou), key=detection_sort_key)


def assign_to_panels(
    panels: list[Panel], detections: list[Detection]
) -> list[list[Detection]]:
    """Partition detections among panels.

    Each detection goes to the panel whose box has the greatest intersection
    area with it; a detection overlapping no panel goes to the panel with the
    nearest center. Returns one list per panel, parallel to ``panels``, with
    each list ordered by reading position (top, then left, of the box origin).
    """
    if not panels:
        raise InvalidInputError("assign_to_panels needs at least one panel")
    groups: list[list[Detection]] = [[] for _ in panels]
    for det in detections:
        overlaps = [p.box.intersection_area(det.box) for p in panels]
        best = max(range(len(panels)), key=lambda i: overlaps[i])
        if overlaps[best] <= 0:
            cx, cy = det.box.center
            def dist2(p: Panel) -> float:
                px, py = p.box.center
                return (px - cx) ** 2 + (py - cy) ** 2
            best = min(range(len(panels)), key=lambda i: dist2(panels[i]))
        groups[best].append(det)
    for group in groups:
        group.sort(key=lambda d: (d.box.y_min, d.box.x_min, d.box.x_max, d.box.y_max))
    return groups
