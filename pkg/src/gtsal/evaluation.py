"""Saliency-map quality metrics against binary ground truth.

Maps are swept over 256 uniform thresholds in [0, 1] with the rule
predicted = (s >= tau). Precision of an empty prediction is defined as 1 so
the PR curve stays total. The F-measure weights precision over recall with
beta^2 = 0.3; the adaptive variant thresholds at twice the map's mean value
(clamped to 1). AUC integrates the ROC polygon with the (0,0) and (1,1)
endpoints attached.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

F_MEASURE_BETA_SQ = 0.3
N_THRESHOLDS = 256


@dataclass(frozen=True)
class PRCurve:
    thresholds: np.ndarray  # 256 values uniform in [0, 1]
    precision: np.ndarray
    recall: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray


def _check_pair(saliency: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    saliency = np.asarray(saliency, dtype=np.float64)
    gt = np.asarray(gt, dtype=bool)
    if saliency.shape != gt.shape:
        raise ValueError(f"map shape {saliency.shape} != ground truth shape {gt.shape}")
    if not np.all(np.isfinite(saliency)) or saliency.min() < 0.0 or saliency.max() > 1.0:
        raise ValueError("saliency values must be finite and in [0, 1]")
    return saliency, gt


def pr_curve(saliency: np.ndarray, gt: np.ndarray) -> PRCurve:
    """Precision/recall and ROC points at 256 uniform thresholds."""
    saliency, gt = _check_pair(saliency, gt)
    n_pos = int(gt.sum())
    if n_pos == 0:
        raise ValueError("ground truth has no positive pixels")
    n_neg = gt.size - n_pos
    thresholds = np.linspace(0.0, 1.0, N_THRESHOLDS)

    pos_sorted = np.sort(saliency[gt])
    neg_sorted = np.sort(saliency[~gt])
    # Count of values >= tau via binary search on the sorted scores.
    tp = n_pos - np.searchsorted(pos_sorted, thresholds, side="left")
    fp = n_neg - np.searchsorted(neg_sorted, thresholds, side="left")
    predicted = tp + fp

    precision = np.ones(N_THRESHOLDS)
    nonempty = predicted > 0
    precision[nonempty] = tp[nonempty] / predicted[nonempty]
    recall = tp / n_pos
    fpr = fp / n_neg if n_neg > 0 else np.zeros(N_THRESHOLDS)
    return PRCurve(thresholds=thresholds, precision=precision, recall=recall, tpr=recall.copy(), fpr=fpr)


def f_measure(precision: float, recall: float) -> float:
    """Weighted harmonic mean with beta^2 = 0.3; 0 when both inputs are 0."""
    denom = F_MEASURE_BETA_SQ * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + F_MEASURE_BETA_SQ) * precision * recall / denom


def f_measure_curve(curve: PRCurve) -> np.ndarray:
    """Per-threshold F-measure along a PR curve."""
    denom = F_MEASURE_BETA_SQ * curve.precision + curve.recall
    out = np.zeros_like(denom)
    ok = denom > 0
    out[ok] = (1.0 + F_MEASURE_BETA_SQ) * curve.precision[ok] * curve.recall[ok] / denom[ok]
    return out


def adaptive_f_measure(saliency: np.ndarray, gt: np.ndarray) -> float:
    """F-measure after binarizing at min(2 * mean(map), 1)."""
    saliency, gt = _check_pair(saliency, gt)
    if not gt.any():
        raise ValueError("ground truth has no positive pixels")
    tau = min(2.0 * float(saliency.mean()), 1.0)
    predicted = saliency >= tau
    tp = int((predicted & gt).sum())
    n_pred = int(predicted.sum())
    precision = 1.0 if n_pred == 0 else tp / n_pred
    recall = tp / int(gt.sum())
    return f_measure(precision, recall)


def auc(saliency: np.ndarray, gt: np.ndarray) -> float:
    """Trapezoidal area under the 256-threshold ROC curve."""
    saliency, gt = _check_pair(saliency, gt)
    if not gt.any() or gt.all():
        raise ValueError("AUC needs both positive and negative ground-truth pixels")
    curve = pr_curve(saliency, gt)
    # Thresholds descend left to right on a ROC plot; prepend/append endpoints.
    fpr = np.concatenate([[0.0], curve.fpr[::-1], [1.0]])
    tpr = np.concatenate([[0.0], curve.tpr[::-1], [1.0]])
    return float(np.trapezoid(tpr, fpr))
