"""Confusion matrix and metric report tests."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mek import evaluation as ev
from mek.errors import EmptyMatrix, LabelOutOfRange, LengthMismatch


def test_perfect_predictions_diagonal():
    truth = np.array([0, 1, 2, 1, 0])
    cm = ev.confusion(truth, truth, 3)
    np.testing.assert_array_equal(cm.counts, np.diag([2, 2, 1]))
    rep = ev.report(cm)
    assert rep.accuracy == 1.0
    np.testing.assert_array_equal(rep.precision, 1.0)
    np.testing.assert_array_equal(rep.recall, 1.0)
    np.testing.assert_array_equal(rep.f1, 1.0)


def test_total_disagreement_anti_diagonal():
    cm = ev.confusion([0, 1], [1, 0], 2)
    np.testing.assert_array_equal(cm.counts, [[0, 1], [1, 0]])
    assert ev.report(cm).accuracy == 0.0


def tally_oracle(truth, predicted, c):
    counts = {}
    for t, p in zip(truth, predicted):
        counts[(t, p)] = counts.get((t, p), 0) + 1
    out = [[counts.get((t, p), 0) for p in range(c)] for t in range(c)]
    return out


def test_confusion_matches_tally_oracle():
    rng = np.random.default_rng(0)
    truth = rng.integers(0, 4, 500)
    predicted = rng.integers(0, 4, 500)
    cm = ev.confusion(truth, predicted, 4)
    np.testing.assert_array_equal(cm.counts, tally_oracle(truth.tolist(), predicted.tolist(), 4))
    assert cm.total == 500


def test_confusion_validation():
    with pytest.raises(LengthMismatch):
        ev.confusion([0, 1], [0], 2)
    with pytest.raises(LabelOutOfRange):
        ev.confusion([0, 2], [0, 1], 2)
    with pytest.raises(LabelOutOfRange):
        ev.confusion([0, 1], [0, -1], 2)


def test_zero_prediction_class_precision_zero_with_warning():
    # nothing ever predicted as class 1
    cm = ev.confusion([0, 1, 1], [0, 0, 0], 2)
    rep = ev.report(cm)
    assert rep.precision[1] == 0.0
    assert any("no predictions" in w for w in rep.warnings)


def test_empty_matrix_rejected():
    cm = ev.ConfusionMatrix(counts=np.zeros((2, 2), dtype=np.int64), class_names=["a", "b"])
    with pytest.raises(EmptyMatrix):
        ev.report(cm)


def random_confusions(max_classes=5, max_count=50):
    return st.integers(2, max_classes).flatmap(
        lambda c: st.lists(
            st.lists(st.integers(0, max_count), min_size=c, max_size=c),
            min_size=c,
            max_size=c,
        ).filter(lambda rows: sum(map(sum, rows)) > 0)
    )


@settings(max_examples=80, deadline=None)
@given(random_confusions())
def test_f1_is_harmonic_mean_and_accuracy_is_trace(rows):
    counts = np.array(rows, dtype=np.int64)
    cm = ev.ConfusionMatrix(counts=counts, class_names=[f"c{i}" for i in range(len(rows))])
    rep = ev.report(cm)
    assert rep.accuracy == counts.trace() / counts.sum()
    for c in range(len(rows)):
        p, r = rep.precision[c], rep.recall[c]
        expected = 0.0 if p + r == 0 else 2.0 * p * r / (p + r)
        assert rep.f1[c] == pytest.approx(expected, abs=1e-12)
    # micro-averaged recall equals accuracy for single-label data
    assert np.sum(np.diag(counts)) / np.sum(rep.support) == rep.accuracy
    np.testing.assert_array_equal(rep.support, counts.sum(axis=1))


def test_class_permutation_permutes_report():
    rng = np.random.default_rng(1)
    truth = rng.integers(0, 3, 200)
    predicted = rng.integers(0, 3, 200)
    base = ev.report(ev.confusion(truth, predicted, 3, ["a", "b", "c"]))
    perm = np.array([2, 0, 1])  # new label = perm[old label]
    permuted = ev.report(
        ev.confusion(perm[truth], perm[predicted], 3, ["c", "a", "b"])
    )
    assert permuted.accuracy == base.accuracy
    for old, new in enumerate(perm):
        assert permuted.precision[new] == base.precision[old]
        assert permuted.recall[new] == base.recall[old]
        assert permuted.f1[new] == base.f1[old]
        assert permuted.support[new] == base.support[old]


def test_report_serialization_round_trip():
    rng = np.random.default_rng(2)
    truth = rng.integers(0, 3, 60)
    predicted = rng.integers(0, 3, 60)
    rep = ev.report(ev.confusion(truth, predicted, 3, ["x", "y", "z"]))
    payload = ev.report_to_dict(rep)
    assert payload["accuracy"] == rep.accuracy
    assert [c["name"] for c in payload["classes"]] == ["x", "y", "z"]
    assert payload["confusion"] == rep.confusion.counts.tolist()
    text = ev.format_report_text(rep)
    assert "Accuracy" in text and "x" in text
    assert len(text.splitlines()) == 5
