"""PR curves, AUPR, and fixed-threshold classification reports."""

import numpy as np
import pytest

from surroguard.clsmetrics import (aupr, classification_report,
                                   confusion_counts, pr_curve)


def _brute_force_aupr(scores, labels):
    """Exhaustive threshold enumeration with direct confusion counting."""
    scores = np.asarray(scores, float)
    labels = np.asarray(labels, bool)
    thresholds = np.unique(scores)[::-1]
    n_pos = labels.sum()
    area = 0.0
    prev_recall = 0.0
    for t in thresholds:
        pred = scores >= t
        tp = np.sum(pred & labels)
        fp = np.sum(pred & ~labels)
        precision = tp / (tp + fp)
        recall = tp / n_pos
        area += precision * (recall - prev_recall)
        prev_recall = recall
    return area


def test_pr_curve_hand_example():
    scores = np.array([0.9, 0.8, 0.7, 0.6])
    labels = np.array([True, False, True, False])
    curve = pr_curve(scores, labels)
    np.testing.assert_allclose(curve.thresholds, [0.9, 0.8, 0.7, 0.6])
    np.testing.assert_allclose(curve.precision, [1.0, 0.5, 2 / 3, 0.5])
    np.testing.assert_allclose(curve.recall, [0.5, 0.5, 1.0, 1.0])
    # step integral: 1.0 * 0.5 + 2/3 * 0.5
    assert aupr(curve) == pytest.approx(0.5 + 1 / 3)


def test_tied_scores_collapse_to_one_threshold():
    scores = np.array([0.5, 0.5, 0.5, 0.5])
    labels = np.array([True, False, True, False])
    curve = pr_curve(scores, labels)
    assert curve.thresholds.tolist() == [0.5]
    assert curve.precision.tolist() == [0.5]
    assert curve.recall.tolist() == [1.0]
    assert aupr(curve) == pytest.approx(0.5)  # = positive prevalence


def test_perfect_ranking_gives_unit_area():
    scores = np.array([0.9, 0.8, 0.3, 0.2, 0.1])
    labels = np.array([True, True, False, False, False])
    assert aupr(pr_curve(scores, labels)) == pytest.approx(1.0)


def test_constant_scores_give_prevalence():
    scores = np.full(10, 0.4)
    labels = np.arange(10) < 3
    assert aupr(pr_curve(scores, labels)) == pytest.approx(0.3)


def test_aupr_matches_brute_force_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(4, 21))
        labels = rng.random(n) < 0.4
        if labels.all() or not labels.any():
            continue
        # duplicate scores included deliberately
        scores = np.round(rng.random(n), 1)
        got = aupr(pr_curve(scores, labels))
        want = _brute_force_aupr(scores, labels)
        assert got == pytest.approx(want, abs=1e-12)


def test_aupr_invariant_under_monotone_transform():
    rng = np.random.default_rng(2)
    scores = rng.random(40)
    labels = rng.random(40) < 0.3
    if not labels.any() or labels.all():
        labels[0] = True
        labels[1] = False
    a = aupr(pr_curve(scores, labels))
    b = aupr(pr_curve(np.exp(3 * scores) + 7, labels))
    assert a == pytest.approx(b, rel=1e-12)


def test_pr_needs_both_classes():
    with pytest.raises(ValueError):
        pr_curve(np.array([0.1, 0.2]), np.array([True, True]))


def test_confusion_counts_cross_tab():
    rng = np.random.default_rng(3)
    labels = rng.random(100) < 0.5
    pred = rng.random(100) < 0.5
    c = confusion_counts(labels, pred)
    assert c["tp"] == int(np.sum(pred & labels))
    assert c["fp"] == int(np.sum(pred & ~labels))
    assert c["fn"] == int(np.sum(~pred & labels))
    assert c["tn"] == int(np.sum(~pred & ~labels))
    assert sum(c.values()) == 100


def test_report_hand_example():
    # OOD: TP=9, FP=1, FN=1 -> precision 0.9, recall 0.9
    scores = np.concatenate([np.full(9, 0.9), [0.9], [0.1], np.full(9, 0.1)])
    labels = np.concatenate([np.ones(9, bool), [False], [True], np.zeros(9, bool)])
    rep = classification_report(scores, labels, threshold=0.5)
    assert rep.ood_precision == pytest.approx(0.9)
    assert rep.ood_recall == pytest.approx(0.9)
    assert rep.id_precision == pytest.approx(0.9)
    assert rep.id_recall == pytest.approx(0.9)
    assert rep.macro_recall == pytest.approx(0.9)
    assert rep.support_ood == 10 and rep.support_id == 10
    assert rep.flags == ()


def test_report_flags_division_by_zero():
    # everything predicted ID while OOD points exist
    scores = np.full(6, 0.1)
    labels = np.array([True, True, False, False, False, False])
    rep = classification_report(scores, labels, threshold=0.5)
    assert rep.ood_precision == 0.0 and "ood_precision" in rep.flags
    assert rep.ood_recall == 0.0
    assert rep.id_recall == 1.0
    d = rep.to_dict()
    assert d["ood"]["precision"] == 0.0
    assert "flags" in d


def test_report_threshold_is_inclusive():
    scores = np.array([0.5, 0.49])
    labels = np.array([True, False])
    rep = classification_report(scores, labels, threshold=0.5)
    assert rep.ood_recall == 1.0  # score exactly at threshold is positive
