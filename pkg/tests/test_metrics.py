import math

import numpy as np
import pytest

from qkl.core.errors import UnknownLabelError
from qkl.services.metrics import (
    ConfusionMatrix,
    binary_metrics,
    confusion,
    macro_f1,
    multiclass_metrics,
    per_class_f1,
    to_percent,
)


def binary_cm(tp, fn, tn, fp):
    return ConfusionMatrix((-1, 1), np.array([[tn, fp], [fn, tp]]))


def test_confusion_counts():
    cm = confusion(["A", "A", "B"], ["A", "B", "B"], ["A", "B"])
    assert cm.counts.tolist() == [[1, 1], [0, 1]]
    diag = confusion([1, -1, 1], [1, -1, 1], [-1, 1])
    assert diag.counts.tolist() == [[1, 0], [0, 2]]
    assert diag.total == 3


def test_confusion_unknown_label():
    with pytest.raises(UnknownLabelError):
        confusion(["A", "C"], ["A", "A"], ["A", "B"])
    with pytest.raises(UnknownLabelError):
        confusion(["A"], ["Z"], ["A", "B"])


def test_to_percent():
    pct, empty = to_percent(confusion(["A", "A", "B"], ["A", "B", "B"], ["A", "B"]))
    assert pct.tolist() == [[50.0, 50.0], [0.0, 100.0]]
    assert empty == []
    pct, empty = to_percent(confusion(["A", "A"], ["A", "B"], ["A", "B", "K"]))
    assert pct[2].tolist() == [0.0, 0.0, 0.0]
    assert empty == ["K"]


def test_percent_rows_sum_to_hundred(rng):
    classes = list("OBAFGKM")
    cm = confusion(rng.choice(classes, 300), rng.choice(classes, 300), classes)
    pct, empty = to_percent(cm)
    full = [i for i, c in enumerate(classes) if c not in empty]
    assert np.allclose(pct[full].sum(axis=1), 100.0, atol=1e-9)


def test_binary_metrics_perfect():
    m = binary_metrics(binary_cm(tp=50, fn=0, tn=50, fp=0))
    assert (m.accuracy, m.f1, m.specificity, m.sensitivity) == (1.0, 1.0, 1.0, 1.0)
    assert m.undefined == []


def test_binary_metrics_hand_checked():
    m = binary_metrics(binary_cm(tp=40, fn=10, tn=45, fp=5))
    assert m.accuracy == pytest.approx(0.85)
    assert m.sensitivity == pytest.approx(0.8)
    assert m.specificity == pytest.approx(0.9)
    assert m.f1 == pytest.approx(80 / 95)


def test_binary_metrics_without_positives():
    m = binary_metrics(binary_cm(tp=0, fn=0, tn=8, fp=2))
    assert math.isnan(m.sensitivity)
    assert "sensitivity" in m.undefined
    assert m.f1 == 0.0
    assert '"sensitivity":null' in m.model_dump_json()


def test_macro_f1():
    perfect = confusion(list("AFK"), list("AFK"), list("AFK"))
    assert macro_f1(perfect) == (1.0, [])
    wrong = confusion(["A", "A", "F", "K"], ["F", "F", "F", "K"], list("AFK"))
    scores = per_class_f1(wrong)
    assert scores["A"] == 0.0
    assert scores["F"] == pytest.approx(2 / 4)
    assert macro_f1(wrong)[0] == pytest.approx((0.0 + 0.5 + 1.0) / 3)


def test_macro_f1_excludes_absent_class():
    cm = confusion(["A", "F"], ["A", "F"], ["A", "F", "M"])
    value, undefined = macro_f1(cm)
    assert value == 1.0 and undefined == ["M"]
    report = multiclass_metrics(cm)
    assert report.per_class_f1["M"] is None
    assert report.undefined == ["f1[M]"]


def test_macro_f1_matches_recomputation(rng):
    classes = ["A", "F", "G", "K"]
    y_true, y_pred = rng.choice(classes, 200), rng.choice(classes, 200)
    expected = []
    for c in classes:
        tp = np.sum((y_true == c) & (y_pred == c))
        fp = np.sum((y_true != c) & (y_pred == c))
        fn = np.sum((y_true == c) & (y_pred != c))
        expected.append(2 * tp / (2 * tp + fp + fn))
    assert macro_f1(confusion(y_true, y_pred, classes))[0] == pytest.approx(np.mean(expected), abs=1e-12)


def test_class_order_permutation(rng):
    classes = ["A", "F", "G", "K"]
    y_true, y_pred = rng.choice(classes, 100), rng.choice(classes, 100)
    a = confusion(y_true, y_pred, classes)
    b = confusion(y_true, y_pred, classes[::-1])
    assert np.array_equal(a.counts, b.counts[::-1, ::-1])
    assert multiclass_metrics(a).accuracy == multiclass_metrics(b).accuracy
    assert macro_f1(a)[0] == pytest.approx(macro_f1(b)[0], abs=1e-15)
    assert multiclass_metrics(a).accuracy == np.trace(a.counts) / 100
