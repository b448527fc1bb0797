"""Independent brute-force oracles used to cross-check the implementations.

Everything here recomputes results from first principles (exhaustive
enumeration, closed forms, dense numeric integration) and deliberately
avoids the code paths under test.
"""

from __future__ import annotations

import itertools

import numpy as np


def iou_xyxy(a, b) -> float:
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def _match_prefix(dets, gts, threshold):
    """Greedy matching of a score-ordered detection prefix, from scratch.

    dets: list of (image_id, box, score) already restricted to one class,
    in descending score order. gts: list of (image_id, box). Returns the
    number of true positives.
    """
    used = [False] * len(gts)
    tp = 0
    for image_id, box, _score in dets:
        best, best_iou = -1, 0.0
        for j, (g_img, g_box) in enumerate(gts):
            if used[j] or g_img != image_id:
                continue
            v = iou_xyxy(box, g_box)
            if v >= threshold and v > best_iou:
                best, best_iou = j, v
        if best >= 0:
            used[best] = True
            tp += 1
    return tp


def ap_bruteforce(dets, gts, class_id, threshold) -> float:
    """AP by enumerating every distinct score cutoff.

    For each cutoff the precision/recall point is recomputed from
    scratch on the detections at or above the cutoff; the all-point
    precision envelope is then integrated over recall.
    """
    cls_dets = [
        (d.image_id, (d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max), d.score)
        for d in dets
        if d.class_id == class_id
    ]
    cls_gts = [
        (g.image_id, (g.box.x_min, g.box.y_min, g.box.x_max, g.box.y_max))
        for g in gts
        if g.class_id == class_id
    ]
    if not cls_gts or not cls_dets:
        return 0.0
    ordered = sorted(cls_dets, key=lambda t: -t[2])
    cutoffs = sorted({s for _, _, s in cls_dets}, reverse=True)
    points = []
    for cut in cutoffs:
        prefix = [d for d in ordered if d[2] >= cut]
        tp = _match_prefix(prefix, cls_gts, threshold)
        points.append((tp / len(cls_gts), tp / len(prefix)))
    ap = 0.0
    prev_recall = 0.0
    for i, (recall, _) in enumerate(points):
        envelope = max(p for _, p in points[i:])
        if recall > prev_recall:
            ap += (recall - prev_recall) * envelope
            prev_recall = recall
    return ap


def map_bruteforce(dets, gts, thresholds) -> float:
    classes = sorted({g.class_id for g in gts})
    per_class = [
        np.mean([ap_bruteforce(dets, gts, c, t) for t in thresholds])
        for c in classes
    ]
    return float(np.mean(per_class))


def pareto_bruteforce(points) -> list[tuple[float, float]]:
    """O(n^2) dominance filter over (rate, quality) pairs."""
    uniq = sorted(set(points))
    keep = []
    for p in uniq:
        dominated = any(
            q[0] <= p[0] and q[1] >= p[1] and (q[0] < p[0] or q[1] > p[1])
            for q in uniq
        )
        if not dominated:
            keep.append(p)
    return keep


def bd_rate_oracle_loglinear(a1, b1, a2, b2, q_lo, q_hi, samples=10_000) -> float:
    """BD-rate for curves with exact form q = a + b*log10(R).

    log10 R(q) inverts in closed form; the average log-rate gap over the
    shared quality interval is integrated with dense trapezoids.
    """
    qs = np.linspace(q_lo, q_hi, samples + 1)
    gap = (qs - a2) / b2 - (qs - a1) / b1
    mean = np.trapezoid(gap, qs) / (q_hi - q_lo)
    return (10.0 ** mean - 1.0) * 100.0


def best_chain_bruteforce(channels: np.ndarray) -> tuple[int, ...]:
    """Cheapest adjacent-MSE chain over all orders starting at channel 0."""
    c = channels.shape[0]
    flat = channels.reshape(c, -1).astype(np.float64)

    def cost(order):
        return sum(
            float(np.mean((flat[a] - flat[b]) ** 2))
            for a, b in zip(order, order[1:])
        )

    best = min(
        (tuple([0] + list(rest)) for rest in itertools.permutations(range(1, c))),
        key=cost,
    )
    return best
