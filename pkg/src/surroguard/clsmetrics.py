"""Binary classification metrics for detector evaluation.

Precision-recall machinery works directly on scores: thresholds are the
descending unique score values, a point is predicted positive at threshold
t iff its score >= t, and AUPR is the step-function integral
sum_i P_i * (R_i - R_{i-1}) over the achievable operating points.  Rank
statistics only — any strictly monotone transform of the scores leaves the
curve and its area unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _check_scored(scores: np.ndarray, labels: np.ndarray):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.ndim != 1 or scores.shape != labels.shape:
        raise ValueError("scores and labels must be 1-D arrays of equal length")
    if scores.size == 0:
        raise ValueError("scores must be non-empty")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    return scores, labels


@dataclass(frozen=True)
class PrCurve:
    """Operating points in threshold order (descending score)."""

    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray

    def points(self) -> list:
        return list(zip(self.recall.tolist(), self.precision.tolist()))


def pr_curve(scores: np.ndarray, labels: np.ndarray) -> PrCurve:
    scores, labels = _check_scored(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.size:
        raise ValueError("precision-recall needs both classes present")

    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    y_sorted = labels[order].astype(np.int64)

    # last index of each unique score block = cumulative counts at that threshold
    is_last = np.empty(s_sorted.size, dtype=bool)
    is_last[:-1] = s_sorted[1:] != s_sorted[:-1]
    is_last[-1] = True
    cut = np.flatnonzero(is_last)

    tp = np.cumsum(y_sorted)[cut].astype(np.float64)
    pred_pos = (cut + 1).astype(np.float64)
    precision = tp / pred_pos
    recall = tp / n_pos
    return PrCurve(thresholds=s_sorted[cut], precision=precision, recall=recall)


def aupr(curve: PrCurve) -> float:
    prev = np.concatenate([[0.0], curve.recall[:-1]])
    return float(np.sum(curve.precision * (curve.recall - prev)))


def confusion_counts(labels: np.ndarray, predicted: np.ndarray) -> dict:
    labels = np.asarray(labels, dtype=bool)
    predicted = np.asarray(predicted, dtype=bool)
    if labels.shape != predicted.shape:
        raise ValueError("labels and predictions must align")
    return {
        "tp": int(np.sum(predicted & labels)),
        "fp": int(np.sum(predicted & ~labels)),
        "fn": int(np.sum(~predicted & labels)),
        "tn": int(np.sum(~predicted & ~labels)),
    }


def _safe_div(num: float, den: float, flag: str, flags: list) -> float:
    if den == 0:
        flags.append(flag)
        return 0.0
    return num / den


@dataclass(frozen=True)
class ClassificationReport:
    """Per-class precision/recall at a fixed threshold, plus macro averages.

    Zero-denominator cells are reported as 0.0 and named in ``flags`` so a
    vacuous score cannot masquerade as a good one.
    """

    threshold: float
    id_precision: float
    id_recall: float
    ood_precision: float
    ood_recall: float
    macro_precision: float
    macro_recall: float
    support_id: int
    support_ood: int
    flags: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "id": {"precision": self.id_precision, "recall": self.id_recall,
                   "support": self.support_id},
            "ood": {"precision": self.ood_precision, "recall": self.ood_recall,
                    "support": self.support_ood},
            "macro": {"precision": self.macro_precision,
                      "recall": self.macro_recall},
            "flags": list(self.flags),
        }


def classification_report(scores: np.ndarray, labels: np.ndarray,
                          threshold: float = 0.5) -> ClassificationReport:
    scores, labels = _check_scored(scores, labels)
    predicted = scores >= threshold
    c = confusion_counts(labels, predicted)
    flags: list = []
    ood_p = _safe_div(c["tp"], c["tp"] + c["fp"], "ood_precision", flags)
    ood_r = _safe_div(c["tp"], c["tp"] + c["fn"], "ood_recall", flags)
    id_p = _safe_div(c["tn"], c["tn"] + c["fn"], "id_precision", flags)
    id_r = _safe_div(c["tn"], c["tn"] + c["fp"], "id_recall", flags)
    return ClassificationReport(
        threshold=float(threshold),
        id_precision=id_p,
        id_recall=id_r,
        ood_precision=ood_p,
        ood_recall=ood_r,
        macro_precision=0.5 * (id_p + ood_p),
        macro_recall=0.5 * (id_r + ood_r),
        support_id=c["tn"] + c["fp"],
        support_ood=c["tp"] + c["fn"],
        flags=tuple(flags),
    )
