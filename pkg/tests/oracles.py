"""Brute-force reference implementations used to check the real ones.

Everything here works on plain tuples/lists and is written straight from the
definitions, independently of the package's own code paths.
"""

from __future__ import annotations

Box = tuple[float, float, float, float]


def iou_ref(a: Box, b: Box) -> float:
    iw = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    ih = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = iw * ih
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    return inter / union if union > 0 else 0.0


def nms_ref(dets: list[tuple[Box, str, float]], threshold: float) -> list[tuple[Box, str, float]]:
    """Greedy per-class NMS by direct definition on (box, label, conf) tuples."""
    order = sorted(dets, key=lambda d: (-d[2], d[0][0], d[0][1], d[0][2], d[0][3], d[1]))
    kept: list[tuple[Box, str, float]] = []
    for det in order:
        suppressed = False
        for other in kept:
            if other[1] == det[1] and iou_ref(other[0], det[0]) > threshold:
                suppressed = True
                break
        if not suppressed:
            kept.append(det)
    return kept


def ap_ref(gt: list[Box], preds: list[tuple[Box, float]], threshold: float) -> float:
    """All-point interpolated AP, computed as the per-TP max-suffix-precision sum."""
    order = sorted(preds, key=lambda p: (-p[1], p[0][0], p[0][1], p[0][2], p[0][3]))
    matched: set[int] = set()
    flags: list[bool] = []
    for box, _conf in order:
        best, best_i = 0.0, None
        for i, g in enumerate(gt):
            if i in matched:
                continue
            v = iou_ref(box, g)
            if v > best:
                best, best_i = v, i
        if best_i is not None and best >= threshold:
            matched.add(best_i)
            flags.append(True)
        else:
            flags.append(False)
    if not gt:
        return 1.0 if not flags else 0.0
    if not flags:
        return 0.0
    precisions = []
    tp = 0
    for rank, flag in enumerate(flags, start=1):
        tp += int(flag)
        precisions.append(tp / rank)
    total = 0.0
    for rank, flag in enumerate(flags, start=1):
        if flag:
            total += max(precisions[rank - 1:])
    return total / len(gt)


def prf_ref(gt: list[str], pred: list[str]) -> tuple[float, float, float]:
    """Weighted P/R/F1 via an explicit confusion matrix."""
    labels = sorted(set(gt) | set(pred))
    index = {label: i for i, label in enumerate(labels)}
    n = len(labels)
    matrix = [[0] * n for _ in range(n)]  # rows: gt, cols: pred
    for g, p in zip(gt, pred):
        matrix[index[g]][index[p]] += 1
    total = len(gt)
    wp = wr = wf = 0.0
    for i in range(n):
        tp = matrix[i][i]
        row = sum(matrix[i])
        col = sum(matrix[j][i] for j in range(n))
        precision = tp / col if col else 0.0
        recall = tp / row if row else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        weight = row / total
        wp += weight * precision
        wr += weight * recall
        wf += weight * f1
    return wp, wr, wf


def random_box(rng, scale: float = 100.0) -> Box:
    xs = sorted(rng.uniform(0, scale, size=2))
    ys = sorted(rng.uniform(0, scale, size=2))
    return (float(xs[0]), float(ys[0]), float(xs[1]), float(ys[1]))
