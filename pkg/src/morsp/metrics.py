"""Pixel-level segmentation scores and the skeleton-based cl-Dice score.

Zero-denominator convention: a score with an empty denominator is 0,
except when prediction and ground truth are both empty, where every
score is 1.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Tuple

import numpy as np

from .morph_core import StructuringElement, as_image, check_same_shape, classic_skeleton, make_element


@dataclass(frozen=True)
class MetricsReport:
    f1: float
    iou: float
    precision: float
    recall: float
    cl_dice: float
    tp: int
    fp: int
    fn: int
    tn: int

    def as_dict(self) -> dict:
        return asdict(self)

    def format(self) -> str:
        lines = [f"{k}={getattr(self, k):.4f}" for k in ("f1", "iou", "precision", "recall", "cl_dice")]
        lines += [f"{k}={getattr(self, k)}" for k in ("tp", "fp", "fn", "tn")]
        return "\n".join(lines)


def confusion(pred, gt, threshold: float = 0.5) -> Tuple[int, int, int, int]:
    """``(tp, fp, fn, tn)`` with ``pred > threshold`` and ``gt > 0.5``."""
    pred = as_image(pred, "prediction")
    gt = as_image(gt, "ground truth")
    check_same_shape(pred, gt, "prediction and ground truth")
    p = pred > threshold
    g = gt > 0.5
    return (
        int(np.sum(p & g)),
        int(np.sum(p & ~g)),
        int(np.sum(~p & g)),
        int(np.sum(~p & ~g)),
    )


def _ratio(num: float, den: float, both_empty: bool) -> float:
    if both_empty:
        return 1.0
    return num / den if den > 0 else 0.0


def scores(tp: int, fp: int, fn: int) -> dict:
    """F1, IoU, precision and recall from confusion counts."""
    empty = tp + fp + fn == 0
    return {
        "f1": _ratio(2 * tp, 2 * tp + fp + fn, empty),
        "iou": _ratio(tp, tp + fp + fn, empty),
        "precision": _ratio(tp, tp + fp, empty),
        "recall": _ratio(tp, tp + fn, empty),
    }


def cl_dice(pred, gt, element: StructuringElement = None, levels: int = 5) -> float:
    """Harmonic mean of topology precision and sensitivity.

    Topology precision is the fraction of the prediction's skeleton lying
    inside the ground truth; sensitivity is the fraction of the ground-truth
    skeleton covered by the prediction.
    """
    element = element or make_element("square", 1)
    pred = as_image(pred, "prediction")
    gt = as_image(gt, "ground truth")
    check_same_shape(pred, gt, "prediction and ground truth")
    s_pred = classic_skeleton(pred, element, levels)
    s_gt = classic_skeleton(gt, element, levels)
    n_pred, n_gt = s_pred.sum(), s_gt.sum()
    if n_pred == 0 and n_gt == 0:
        return 1.0
    if n_pred == 0 or n_gt == 0:
        return 0.0
    t_prec = float(np.sum(gt * s_pred) / n_pred)
    t_sens = float(np.sum(s_gt * pred) / n_gt)
    if t_prec + t_sens == 0:
        return 0.0
    return 2.0 * t_prec * t_sens / (t_prec + t_sens)


def evaluate(pred, gt, threshold: float = 0.5, element: StructuringElement = None, levels: int = 5) -> MetricsReport:
    tp, fp, fn, tn = confusion(pred, gt, threshold)
    s = scores(tp, fp, fn)
    binary_pred = (np.asarray(pred) > threshold).astype(np.float64)
    binary_gt = (np.asarray(gt) > 0.5).astype(np.float64)
    return MetricsReport(cl_dice=cl_dice(binary_pred, binary_gt, element, levels), tp=tp, fp=fp, fn=fn, tn=tn, **s)
