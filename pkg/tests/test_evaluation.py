import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfd.errors import LengthMismatch
from tfd.evaluation import (
    COLUMNS,
    ConfusionMatrix,
    DegenerateMetricWarning,
    EvalResult,
    Metrics,
    RunResult,
    confusion,
    mean_metrics,
    metrics,
    report,
    results_from_json,
)


def brute_metrics(tp, fn, fp, tn):
    def div(a, b):
        return a / b if b else 0.0

    p, r = div(tp, tp + fp), div(tp, tp + fn)
    return div(tp + tn, tp + fn + fp + tn), p, r, div(fp, fp + tn), div(2 * p * r, p + r)


def test_confusion_examples():
    labels = ["attack"] * 10 + ["normal"] * 10
    assert confusion(labels, labels) == ConfusionMatrix(10, 0, 0, 10)
    cm = confusion(["normal"] * 8, ["attack"] * 5 + ["normal"] * 3)
    assert cm.fn == 5 and cm.tp == 0
    with pytest.raises(LengthMismatch):
        confusion(["attack"], [])


@given(st.lists(st.tuples(st.booleans(), st.booleans()), max_size=200))
@settings(max_examples=200, deadline=None)
def test_confusion_brute_force(pairs):
    preds = ["attack" if p else "normal" for p, _ in pairs]
    labels = ["attack" if y else "normal" for _, y in pairs]
    cm = confusion(preds, labels)
    assert cm.tp == sum(p and y for p, y in pairs)
    assert cm.fn == sum((not p) and y for p, y in pairs)
    assert cm.fp == sum(p and not y for p, y in pairs)
    assert cm.tn == sum((not p) and (not y) for p, y in pairs)
    assert cm.positives == sum(y for _, y in pairs)


def test_metrics_hand_arithmetic():
    m = metrics(ConfusionMatrix(tp=90, fn=10, fp=5, tn=95))
    assert m.accuracy == pytest.approx(0.925)
    assert m.precision == pytest.approx(0.9474, abs=1e-4)
    assert m.recall == pytest.approx(0.9)
    assert m.fpr == pytest.approx(0.05)
    assert m.f1 == pytest.approx(0.9231, abs=1e-4)
    assert m.degenerate == ()


def test_metrics_all_zero_is_degenerate():
    with pytest.warns(DegenerateMetricWarning):
        m = metrics(ConfusionMatrix(0, 0, 0, 0))
    assert m.as_dict() == dict.fromkeys(m.as_dict(), 0.0)
    assert set(m.degenerate) == {"accuracy", "precision", "recall", "fpr", "f1"}


@given(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500), st.integers(0, 500))
@settings(max_examples=300, deadline=None)
def test_metric_identities(tp, fn, fp, tn):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateMetricWarning)
        m = metrics(ConfusionMatrix(tp, fn, fp, tn))
    for v in m.as_dict().values():
        assert 0.0 <= v <= 1.0
    if m.precision + m.recall > 0:
        assert abs(m.f1 - 2 * m.precision * m.recall / (m.precision + m.recall)) <= 1e-12
    if tp + fn:
        assert m.recall + fn / (tp + fn) == pytest.approx(1.0, abs=1e-12)
    if fp + tn:
        assert m.fpr + tn / (fp + tn) == pytest.approx(1.0, abs=1e-12)


def _run(seed, cm):
    return RunResult(seed, cm, metrics(cm, warn=False))


def test_mean_is_permutation_invariant():
    runs = [_run(i, ConfusionMatrix(50 + i, 10 - i, 3 * i, 90)) for i in range(5)]
    a = EvalResult("d", runs).mean
    b = EvalResult("d", runs[::-1]).mean
    assert all(getattr(a, k) == pytest.approx(getattr(b, k), rel=1e-14) for k in a.as_dict())
    single = EvalResult("d", runs[:1]).mean
    assert single.as_dict() == runs[0].metrics.as_dict()


def test_report_single_dataset_two_equal_rows():
    res = EvalResult("hping-like", [_run(1, ConfusionMatrix(40, 10, 5, 245))])
    table, doc = report([res])
    rows = table.strip().splitlines()
    assert len(rows) == 4  # header, rule, dataset, Average
    assert rows[2].split()[1:] == rows[3].split()[1:]
    assert rows[0].split()[1:] == list(COLUMNS)
    assert doc["datasets"][0]["dataset"] == "hping-like"
    assert set(doc["datasets"][0]["runs"][0]) >= {"seed", "tp", "fn", "fp", "tn", "metrics"}


def test_report_json_round_trip():
    results = [EvalResult(n, [_run(i, ConfusionMatrix(30 + i, 5, 7, 100 - i)) for i in range(3)]) for n in "ab"]
    _, doc = report(results)
    back = results_from_json(json.loads(json.dumps(doc)))
    assert report(back)[1] == doc


def test_report_needs_results():
    with pytest.raises(ValueError):
        report([])


def test_mean_metrics_average():
    ms = [Metrics(1.0, 1.0, 1.0, 0.0, 1.0), Metrics(0.0, 0.0, 0.0, 1.0, 0.0)]
    assert mean_metrics(ms).as_dict() == {"accuracy": 0.5, "recall": 0.5, "precision": 0.5, "fpr": 0.5, "f1": 0.5}
