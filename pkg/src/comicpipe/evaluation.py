"""Detection and identification metrics.

Detection quality is measured as mean average precision at a fixed IoU
threshold: predictions are pooled per class across the corpus, matched
greedily (highest IoU first, each ground-truth box used at most once, but
only within the same image), and AP is the all-point interpolated area under
the precision-recall curve. mAP is the unweighted mean over classes present
in the ground truth.

Identification quality is support-weighted precision / recall / F1 over
aligned label lists (one prediction per ground-truth crop). Weighted F1 is
the support-weighted mean of per-class F1 values, not the harmonic mean of
the weighted precision and recall.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidInputError
from .geometry import BoundingBox, iou

__all__ = [
    "GroundTruthAnnotation",
    "EvalReport",
    "average_precision",
    "mean_average_precision",
    "weighted_prf",
    "load_annotations",
    "load_predictions",
]


@dataclass(frozen=True)
class GroundTruthAnnotation:
    image_id: str
    boxes: list[tuple[BoundingBox, str]] = field(default_factory=list)
    identities: list[tuple[BoundingBox, str]] = field(default_factory=list)


@dataclass
class EvalReport:
    iou_threshold: float | None = None
    per_class_ap: dict[str, float] = field(default_factory=dict)
    map: float | None = None
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    per_class_support: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out: dict = {}
        if self.map is not None:
            out["iou_threshold"] = self.iou_threshold
            out["per_class_ap"] = dict(sorted(self.per_class_ap.items()))
            out["map"] = self.map
        if self.f1 is not None:
            out["precision"] = self.precision
            out["recall"] = self.recall
            out["f1"] = self.f1
            out["per_class_support"] = dict(sorted(self.per_class_support.items()))
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out

    def to_table(self) -> str:
        rows: list[str] = []
        if self.map is not None:
            rows.append(f"{'class':<16}{'AP':>10}")
            for name, ap in sorted(self.per_class_ap.items()):
                rows.append(f"{name:<16}{ap:>10.4f}")
            rows.append(f"{'mAP@' + format(self.iou_threshold, 'g'):<16}{self.map:>10.4f}")
        if self.f1 is not None:
            rows.append(f"{'weighted precision':<20}{self.precision:>10.4f}")
            rows.append(f"{'weighted recall':<20}{self.recall:>10.4f}")
            rows.append(f"{'weighted f1':<20}{self.f1:>10.4f}")
        for warning in self.warnings:
            rows.append(f"warning: {warning}")
        return "\n".join(rows)


def _pred_sort_key(pred: tuple[BoundingBox, float]) -> tuple:
    box, confidence = pred
    return (-confidence, box.x_min, box.y_min, box.x_max, box.y_max)


def _match_greedy(
    gt: list[BoundingBox],
    preds: list[tuple[BoundingBox, float]],
    iou_threshold: float,
) -> list[bool]:
    """True/False per prediction (in confidence order): matched a GT box or not."""
    order = sorted(preds, key=_pred_sort_key)
    taken = [False] * len(gt)
    outcomes: list[bool] = []
    for box, _conf in order:
        best_iou = 0.0
        best_idx = -1
        for i, g in enumerate(gt):
            if taken[i]:
                continue
            v = iou(box, g)
            if v > best_iou:
                best_iou = v
                best_idx = i
        if best_idx >= 0 and best_iou >= iou_threshold:
            taken[best_idx] = True
            outcomes.append(True)
        else:
            outcomes.append(False)
    return outcomes


def _ap_from_outcomes(outcomes: list[bool], n_gt: int) -> float:
    """All-point interpolated AP from a ranked TP/FP sequence."""
    if n_gt == 0:
        return 1.0 if not outcomes else 0.0
    if not outcomes:
        return 0.0
    precisions: list[float] = []
    recalls: list[float] = []
    tp = 0
    for rank, is_tp in enumerate(outcomes, start=1):
        tp += int(is_tp)
        precisions.append(tp / rank)
        recalls.append(tp / n_gt)
    # Precision envelope from the right, then rectangle areas over recall steps.
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])
    ap = 0.0
    prev_recall = 0.0
    for p, r in zip(precisions, recalls):
        if r > prev_recall:
            ap += (r - prev_recall) * p
            prev_recall = r
    return ap


def average_precision(
    gt: list[BoundingBox],
    preds: list[tuple[BoundingBox, float]],
    iou_threshold: float,
) -> float:
    """AP for a single class on a single pooled stream of predictions."""
    if not 0.0 < iou_threshold <= 1.0:
        raise InvalidInputError(f"iou_threshold {iou_threshold} outside (0, 1]")
    outcomes = _match_greedy(gt, preds, iou_threshold)
    return _ap_from_outcomes(outcomes, len(gt))


def mean_average_precision(
    annotations: list[GroundTruthAnnotation],
    predictions: dict[str, list[tuple[BoundingBox, str, float]]],
    iou_threshold: float = 0.5,
) -> EvalReport:
    """Corpus-level per-class AP and their unweighted mean.

    ``predictions`` maps image_id to (box, label, confidence) triples.
    Detections are pooled across images per class but matched only within
    their own image. Predicted classes absent from the ground truth
    everywhere are excluded from mAP and reported as warnings.
    """
    gt_classes: set[str] = set()
    for ann in annotations:
        gt_classes.update(label for _, label in ann.boxes)
    pred_classes = {
        label for items in predictions.values() for _, label, _ in items
    }

    report = EvalReport(iou_threshold=iou_threshold)
    for stray in sorted(pred_classes - gt_classes):
        report.warnings.append(
            f"predicted class {stray!r} absent from ground truth; excluded from mAP"
        )
    unknown_images = sorted(set(predictions) - {a.image_id for a in annotations})
    for image_id in unknown_images:
        report.warnings.append(
            f"predictions for unannotated image {image_id!r} ignored"
        )

    per_class: dict[str, float] = {}
    for cls in sorted(gt_classes):
        # Pool (image_id, box, conf) for this class; match per image.
        pooled: list[tuple[str, BoundingBox, float]] = []
        for ann in annotations:
            for box, label, conf in predictions.get(ann.image_id, []):
                if label == cls:
                    pooled.append((ann.image_id, box, conf))
        pooled.sort(key=lambda t: (-t[2], t[0], t[1].x_min, t[1].y_min, t[1].x_max, t[1].y_max))

        gt_by_image = {
            ann.image_id: [box for box, label in ann.boxes if label == cls]
            for ann in annotations
        }
        taken = {img: [False] * len(boxes) for img, boxes in gt_by_image.items()}
        outcomes: list[bool] = []
        for image_id, box, _conf in pooled:
            gt_boxes = gt_by_image[image_id]
            best_iou, best_idx = 0.0, -1
            for i, g in enumerate(gt_boxes):
                if taken[image_id][i]:
                    continue
                v = iou(box, g)
                if v > best_iou:
                    best_iou, best_idx = v, i
            if best_idx >= 0 and best_iou >= iou_threshold:
                taken[image_id][best_idx] = True
                outcomes.append(True)
            else:
                outcomes.append(False)
        n_gt = sum(len(b) for b in gt_by_image.values())
        per_class[cls] = _ap_from_outcomes(outcomes, n_gt)

    report.per_class_ap = per_class
    report.map = sum(per_class.values()) / len(per_class) if per_class else 0.0
    return report


def weighted_prf(gt_labels: list[str], pred_labels: list[str]) -> tuple[float, float, float]:
    """Support-weighted precision, recall, and F1 over aligned label lists."""
    if len(gt_labels) != len(pred_labels):
        raise InvalidInputError(
            f"gt has {len(gt_labels)} labels but predictions have {len(pred_labels)}"
        )
    if not gt_labels:
        raise InvalidInputError("weighted_prf needs at least one sample")

    classes = sorted(set(gt_labels) | set(pred_labels))
    total = len(gt_labels)
    w_precision = w_recall = w_f1 = 0.0
    for cls in classes:
        tp = sum(1 for g, p in zip(gt_labels, pred_labels) if g == cls and p == cls)
        fp = sum(1 for g, p in zip(gt_labels, pred_labels) if g != cls and p == cls)
        fn = sum(1 for g, p in zip(gt_labels, pred_labels) if g == cls and p != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        support = sum(1 for g in gt_labels if g == cls)
        weight = support / total
        w_precision += weight * precision
        w_recall += weight * recall
        w_f1 += weight * f1
    return w_precision, w_recall, w_f1


# --- annotation / prediction file formats -----------------------------------

def load_annotations(path: str | Path) -> list[GroundTruthAnnotation]:
    """Read an annotations.json file (see protocol/annotations.schema.json)."""
    from .backends import validate_against

    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    validate_against("annotations", data)
    out = []
    for item in data:
        out.append(
            GroundTruthAnnotation(
                image_id=item["image_id"],
                boxes=[(BoundingBox.from_list(b["box"]), b["label"]) for b in item["boxes"]],
                identities=[
                    (BoundingBox.from_list(b["box"]), b["name"])
                    for b in item.get("identities", [])
                ],
            )
        )
    return out


def load_predictions(path: str | Path) -> dict[str, list[tuple[BoundingBox, str, float]]]:
    """Read a predictions.json file; also accepts a single `detect` dump."""
    from .backends import validate_against

    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    validate_against("predictions", data)
    out: dict[str, list[tuple[BoundingBox, str, float]]] = {}
    for item in data:
        dets = [
            (BoundingBox.from_list(d["box"]), d["label"], float(d["confidence"]))
            for d in item["detections"]
        ]
        out.setdefault(item["image_id"], []).extend(dets)
    return out
