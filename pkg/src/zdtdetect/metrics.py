"""Precision, recall and ROC/AUC for binary scores (higher score = more positive)."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import LengthMismatch, SingleClass


class BinaryOutcome(NamedTuple):
    score: float
    label: int


def _scores_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    if labels is None:
        # a sequence of BinaryOutcome
        pairs = list(scores)
        scores = [o[0] for o in pairs]
        labels = [o[1] for o in pairs]
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise LengthMismatch(f"{s.size} scores vs {y.size} labels")
    if not np.isfinite(s).all():
        raise ValueError("scores must be finite")
    y = y.astype(bool)
    if y.all() or not y.any():
        raise SingleClass("both positive and negative labels are required")
    return s, y


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the mean of their positions."""
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    starts = np.flatnonzero(np.r_[True, sorted_vals[1:] != sorted_vals[:-1]])
    ends = np.r_[starts[1:], values.size]
    group_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(values.size)
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks


def roc_auc(scores, labels=None) -> float:
    """Mann-Whitney AUC; tied positive/negative pairs count one half."""
    s, y = _scores_labels(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    u = average_ranks(s)[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, labels=None) -> list[tuple[float, float]]:
    """ROC staircase from (0, 0) to (1, 1), one point per distinct score threshold."""
    s, y = _scores_labels(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    uniq, inverse = np.unique(s, return_inverse=True)
    pos = np.bincount(inverse, weights=y, minlength=uniq.size)[::-1]
    neg = np.bincount(inverse, weights=~y, minlength=uniq.size)[::-1]
    tpr = np.r_[0.0, np.cumsum(pos) / n_pos]
    fpr = np.r_[0.0, np.cumsum(neg) / n_neg]
    return list(zip(fpr.tolist(), tpr.tolist()))


def trapezoid_auc(curve) -> float:
    pts = np.asarray(curve, dtype=np.float64)
    return float(np.sum(np.diff(pts[:, 0]) * (pts[1:, 1] + pts[:-1, 1]) / 2.0))


class PrecisionRecall(NamedTuple):
    precision: float
    recall: float
    degenerate: tuple[str, ...] = ()


def confusion(predictions, labels) -> dict:
    p = np.asarray(predictions).astype(bool).ravel()
    y = np.asarray(labels).astype(bool).ravel()
    if p.shape != y.shape:
        raise LengthMismatch(f"{p.size} predictions vs {y.size} labels")
    return {
        "tp": int(np.sum(p & y)),
        "fp": int(np.sum(p & ~y)),
        "fn": int(np.sum(~p & y)),
        "tn": int(np.sum(~p & ~y)),
    }


def precision_recall(predictions, labels) -> PrecisionRecall:
    """Zero denominators give 0.0 and name the affected metric in ``degenerate``."""
    c = confusion(predictions, labels)
    flags = []
    if c["tp"] + c["fp"] == 0:
        precision = 0.0
        flags.append("precision")
    else:
        precision = c["tp"] / (c["tp"] + c["fp"])
    if c["tp"] + c["fn"] == 0:
        recall = 0.0
        flags.append("recall")
    else:
        recall = c["tp"] / (c["tp"] + c["fn"])
    return PrecisionRecall(precision, recall, tuple(flags))


def histogram(losses, classes, bins: int = 50) -> list[dict]:
    """Loss histogram rows (bin_low, bin_high, class, count) over shared bin edges."""
    losses = np.asarray(losses, dtype=np.float64)
    classes = np.asarray(classes).astype(str)
    edges = np.histogram_bin_edges(losses, bins=bins)
    rows = []
    for cls in sorted(set(classes.tolist())):
        counts, _ = np.histogram(losses[classes == cls], bins=edges)
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            rows.append({"loss_low": float(lo), "loss_high": float(hi), "class": cls, "count": int(c)})
    return rows
