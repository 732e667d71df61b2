"""Single-class AP@IoU evaluation with COCO-style size stratification.

Matching and interpolation follow pycocotools: detections claim ground truths
greedily in descending confidence; AP is the mean of the interpolated
precision at the 101 recall points 0.00, 0.01, ..., 1.00. Size-restricted APs
keep out-of-bin ground truths in the matching but ignore whatever they match,
and ignore unmatched detections whose own area falls outside the bin.

Undefined APs (no ground truth in scope) are ``None``, never 0 or NaN.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import SIZE_CATEGORIES, BoundingBox, area_category, iou

TP = "tp"
FP = "fp"
IGNORE = "ignore"

RECALL_THRESHOLDS = np.linspace(0.0, 1.0, 101)

REPORT_FIELDS = (
    "ap_50",
    "ap_small",
    "ap_medium",
    "ap_large",
    "num_gt_small",
    "num_gt_medium",
    "num_gt_large",
    "num_gt_total",
)

ScoredBox = Tuple[BoundingBox, float]


@dataclass
class EvalReport:
    ap_50: Optional[float]
    ap_small: Optional[float]
    ap_medium: Optional[float]
    ap_large: Optional[float]
    num_gt: Dict[str, int]
    pr_curve: List[Tuple[float, float]] = field(default_factory=list)
    iou_threshold: float = 0.5
    diagnostics: List[str] = field(default_factory=list)

    def metrics(self) -> Dict[str, Any]:
        return {
            "ap_50": self.ap_50,
            "ap_small": self.ap_small,
            "ap_medium": self.ap_medium,
            "ap_large": self.ap_large,
            "num_gt_small": self.num_gt["small"],
            "num_gt_medium": self.num_gt["medium"],
            "num_gt_large": self.num_gt["large"],
            "num_gt_total": self.num_gt["total"],
        }

    def to_json(self) -> str:
        doc = self.metrics()
        doc["iou_threshold"] = self.iou_threshold
        doc["pr_curve"] = [list(p) for p in self.pr_curve]
        doc["diagnostics"] = list(self.diagnostics)
        return json.dumps(doc, indent=2)

    def to_text(self) -> str:
        lines = []
        for key, value in self.metrics().items():
            if value is None:
                value = "undefined"
            elif isinstance(value, float):
                value = f"{value:.6f}"
            lines.append(f"{key}: {value}")
        return "\n".join(lines) + "\n"


def _scored(item) -> ScoredBox:
    """Accept (bbox, conf) pairs, Detection or BoostedDetection."""
    if hasattr(item, "boosted_confidence"):
        return item.detection.bbox, item.boosted_confidence
    if hasattr(item, "bbox") and hasattr(item, "confidence"):
        return item.bbox, item.confidence
    bbox, conf = item
    return bbox, float(conf)


def _confidence_order(dets: Sequence[ScoredBox]) -> List[int]:
    # stable: equal confidences keep input order
    return sorted(range(len(dets)), key=lambda i: -dets[i][1])


def match_frame_detailed(
    dets: Sequence[ScoredBox],
    gts: Sequence[BoundingBox],
    iou_threshold: float,
    gt_ignored: Optional[Sequence[bool]] = None,
    det_in_range: Optional[Sequence[bool]] = None,
) -> List[str]:
    """Label each detection TP, FP or IGNORE (returned in input order).

    A detection prefers unclaimed in-scope ground truths; it only falls back
    to an ignored ground truth when no in-scope one clears the threshold.
    Among equal IoUs the earlier ground truth wins.
    """
    if gt_ignored is None:
        gt_ignored = [False] * len(gts)
    if det_in_range is None:
        det_in_range = [True] * len(dets)
    gt_order = sorted(range(len(gts)), key=lambda g: gt_ignored[g])
    claimed = [False] * len(gts)
    labels = [FP] * len(dets)

    for d in _confidence_order(dets):
        box = dets[d][0]
        best, best_iou = None, -1.0
        for g in gt_order:
            if claimed[g]:
                continue
            if best is not None and not gt_ignored[best] and gt_ignored[g]:
                break
            overlap = iou(box, gts[g])
            if overlap >= iou_threshold and overlap > best_iou:
                best, best_iou = g, overlap
        if best is not None:
            claimed[best] = True
            labels[d] = IGNORE if gt_ignored[best] else TP
        elif not det_in_range[d]:
            labels[d] = IGNORE
    return labels


def match_frame(
    dets: Sequence[ScoredBox], gts: Sequence[BoundingBox], iou_threshold: float = 0.5
) -> List[bool]:
    """TP flag per detection (input order); each ground truth is claimed once."""
    if not 0 < iou_threshold <= 1:
        raise ValueError("iou_threshold must lie in (0, 1]")
    return [label == TP for label in match_frame_detailed(dets, gts, iou_threshold)]


def precision_recall(
    flags_with_confidence: Sequence[Tuple[float, bool]], num_gt: int
) -> Tuple[np.ndarray, np.ndarray]:
    order = sorted(range(len(flags_with_confidence)), key=lambda i: -flags_with_confidence[i][0])
    tp = np.array([bool(flags_with_confidence[i][1]) for i in order], dtype=float)
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(1.0 - tp)
    recall = tp_cum / num_gt
    precision = tp_cum / np.maximum(tp_cum + fp_cum, np.finfo(float).eps)
    return recall, precision


def average_precision(
    flags_with_confidence: Sequence[Tuple[float, bool]], num_gt: int
) -> Optional[float]:
    """101-point interpolated AP over ``(confidence, is_tp)`` pairs.

    Ignored detections must be removed by the caller. Returns ``None`` when
    ``num_gt`` is 0.
    """
    if num_gt < 0:
        raise ValueError("num_gt must be >= 0")
    if num_gt == 0:
        return None
    recall, precision = precision_recall(flags_with_confidence, num_gt)
    if len(recall) == 0:
        return 0.0
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_THRESHOLDS, side="left")
    interpolated = np.zeros(len(RECALL_THRESHOLDS))
    valid = idx < len(recall)
    interpolated[valid] = envelope[idx[valid]]
    return float(interpolated.mean())


def _ordered_keys(keys):
    keys = list(keys)
    try:
        return sorted(keys)
    except TypeError:
        return keys


def evaluate(
    dets: Mapping[Hashable, Sequence[Any]],
    gts: Mapping[Hashable, Sequence[BoundingBox]],
    iou_threshold: float = 0.5,
) -> EvalReport:
    """Evaluate detections against ground truth keyed by frame.

    ``dets`` values may hold ``(bbox, confidence)`` pairs, ``Detection`` or
    ``BoostedDetection`` objects (the boosted score is used). Detection frames
    missing from ``gts`` are skipped and listed in ``diagnostics``.
    """
    if not 0 < iou_threshold <= 1:
        raise ValueError("iou_threshold must lie in (0, 1]")
    diagnostics = [
        f"detections for frame {key!r} have no ground-truth entry; frame ignored"
        for key in _ordered_keys(k for k in dets if k not in gts)
    ]
    keys = _ordered_keys(gts)
    frames = [([_scored(x) for x in dets.get(key, ())], list(gts[key])) for key in keys]

    num_gt = {c: 0 for c in SIZE_CATEGORIES}
    for _, frame_gts in frames:
        for g in frame_gts:
            num_gt[area_category(g)] += 1
    num_gt["total"] = sum(num_gt[c] for c in SIZE_CATEGORIES)

    def run(category: Optional[str]):
        pairs = []
        for frame_dets, frame_gts in frames:
            if category is None:
                labels = match_frame_detailed(frame_dets, frame_gts, iou_threshold)
            else:
                labels = match_frame_detailed(
                    frame_dets,
                    frame_gts,
                    iou_threshold,
                    gt_ignored=[area_category(g) != category for g in frame_gts],
                    det_in_range=[area_category(b) == category for b, _ in frame_dets],
                )
            # within-frame confidence order first, so global ties stay stable
            for d in _confidence_order(frame_dets):
                if labels[d] != IGNORE:
                    pairs.append((frame_dets[d][1], labels[d] == TP))
        return pairs

    overall = run(None)
    ap_all = average_precision(overall, num_gt["total"])
    pr_curve = []
    if num_gt["total"]:
        recall, precision = precision_recall(overall, num_gt["total"])
        pr_curve = list(zip(recall.tolist(), precision.tolist()))

    per_bin = {c: average_precision(run(c), num_gt[c]) for c in SIZE_CATEGORIES}
    return EvalReport(
        ap_50=ap_all,
        ap_small=per_bin["small"],
        ap_medium=per_bin["medium"],
        ap_large=per_bin["large"],
        num_gt=num_gt,
        pr_curve=pr_curve,
        iou_threshold=iou_threshold,
        diagnostics=diagnostics,
    )
