import numpy as np
import pytest

from oracles import auc_pair_count
from zdtdetect.errors import LengthMismatch, SingleClass
from zdtdetect.metrics import BinaryOutcome, histogram, precision_recall, roc_auc, roc_curve, trapezoid_auc


def test_auc_examples():
    assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert roc_auc([0.5] * 6, [0, 1, 0, 1, 1, 0]) == 0.5
    assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    outcomes = [BinaryOutcome(0.1, 0), BinaryOutcome(0.4, 0), BinaryOutcome(0.35, 1), BinaryOutcome(0.8, 1)]
    assert roc_auc(outcomes) == 0.75


def test_auc_errors():
    with pytest.raises(SingleClass):
        roc_auc([0.1, 0.2], [1, 1])
    with pytest.raises(LengthMismatch):
        roc_auc([0.1, 0.2], [1])
    with pytest.raises(ValueError):
        roc_auc([0.1, float("nan")], [0, 1])


def test_auc_matches_pair_count_and_trapezoid():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 60))
        s = np.round(rng.normal(size=n), int(rng.integers(0, 3)))
        y = rng.integers(0, 2, n)
        y[0], y[1] = 0, 1
        auc = roc_auc(s, y)
        assert auc == auc_pair_count(s.tolist(), y.tolist())
        assert abs(trapezoid_auc(roc_curve(s, y)) - auc) <= 1e-12


def test_auc_monotone_transform_invariance():
    rng = np.random.default_rng(1)
    s = rng.normal(size=300)
    y = rng.integers(0, 2, 300)
    auc = roc_auc(s, y)
    assert roc_auc(np.exp(s), y) == auc
    assert roc_auc(3 * s + 7, y) == auc


def test_roc_curve_shape():
    curve = roc_curve([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
    assert curve[0] == (0.0, 0.0) and curve[-1] == (1.0, 1.0)
    assert (0.0, 1.0) in curve
    rng = np.random.default_rng(2)
    s = np.round(rng.uniform(size=100), 1)
    y = rng.integers(0, 2, 100)
    curve = roc_curve(s, y)
    assert len(curve) == len(set(s.tolist())) + 1
    fpr, tpr = zip(*curve)
    assert list(fpr) == sorted(fpr) and list(tpr) == sorted(tpr)


def test_precision_recall_examples():
    pred = [1, 1, 1, 1, 0, 0, 0]
    lab = [1, 1, 1, 0, 1, 1, 0]
    assert precision_recall(pred, lab)[:2] == (0.75, 0.6)
    pr = precision_recall([0, 0, 0], [1, 0, 1])
    assert (pr.precision, pr.recall) == (0.0, 0.0) and pr.degenerate == ("precision",)
    assert precision_recall([1, 0, 1], [1, 0, 1])[:2] == (1.0, 1.0)
    pr = precision_recall([0, 0], [0, 0])
    assert pr.degenerate == ("precision", "recall")
    with pytest.raises(LengthMismatch):
        precision_recall([1], [1, 0])


def test_histogram_rows():
    rows = histogram([0.1, 0.2, 0.3, 0.9], ["a", "a", "b", "b"], bins=4)
    assert len(rows) == 8
    assert sum(r["count"] for r in rows if r["class"] == "a") == 2
    assert {r["loss_low"] for r in rows if r["class"] == "a"} == {r["loss_low"] for r in rows if r["class"] == "b"}
