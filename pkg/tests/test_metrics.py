import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sauna.errors import InputError
from sauna.grid import BinaryMask, ScalarField
from sauna.metrics import (
    ConfusionCounts,
    aggregate,
    binarize,
    confusion,
    evaluate,
    metrics_from_confusion,
    report_csv,
)
from sauna.transforms import sauna_transform

from conftest import GOLDEN_ROW


def test_binarize_recovers_row_mask():
    sauna = ScalarField(np.array([[-1, -0.5, 0.5, 1, 0.5, -0.5, -1]]), "sauna")
    assert binarize(sauna).data.tolist() == [GOLDEN_ROW]


def test_binarize_ties_to_background():
    assert binarize(np.full((2, 2), -1.0)).n_foreground == 0
    assert binarize(np.array([[0.0, 1e-300]])).data.tolist() == [[0, 1]]


def test_confusion_examples():
    c = confusion(np.array([1, 0, 1, 0]), np.array([1, 1, 0, 0]))
    assert (c.tp, c.fn, c.fp, c.tn) == (1, 1, 1, 1)
    c = confusion(np.zeros(4), np.ones(4))
    assert (c.tp, c.fn, c.fp, c.tn) == (0, 4, 0, 0)
    gt = BinaryMask(np.array([[0, 1], [1, 1]]))
    c = confusion(gt, gt)
    assert c.fp == c.fn == 0 and c.total == 4
    with pytest.raises(InputError):
        confusion(np.zeros(3), np.zeros(4))


def test_metrics_golden():
    m = metrics_from_confusion(ConfusionCounts(tp=1, fp=1, fn=1, tn=1))
    assert m.iou == pytest.approx(1 / 3)
    assert (m.dice, m.sens, m.spec, m.ba) == (0.5, 0.5, 0.5, 0.5)


def test_metrics_perfect_and_empty():
    m = metrics_from_confusion(ConfusionCounts(tp=5, fp=0, fn=0, tn=7))
    assert m.values() == {"iou": 1, "dice": 1, "sens": 1, "spec": 1, "ba": 1}
    assert m.conventions == ()
    empty = metrics_from_confusion(ConfusionCounts(tp=0, fp=0, fn=0, tn=9))
    assert (empty.iou, empty.dice, empty.sens, empty.spec) == (1, 1, 1, 1)
    assert set(empty.conventions) == {"iou", "dice", "sens"}


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000), st.integers(0, 10_000), st.integers(0, 10_000))
def test_metric_identities(tp, fp, fn, tn):
    m = metrics_from_confusion(ConfusionCounts(tp, fp, fn, tn))
    for v in m.values().values():
        assert 0 <= v <= 1
    assert m.ba == pytest.approx((m.sens + m.spec) / 2, abs=1e-12)
    if tp + fp + fn:
        assert m.dice == pytest.approx(2 * m.iou / (1 + m.iou), abs=1e-12)


def test_aggregate_examples():
    one = metrics_from_confusion(ConfusionCounts(1, 1, 1, 1))
    rep = aggregate([one])
    assert rep.mean["iou"] == one.iou and rep.se["iou"] == 0
    a = metrics_from_confusion(ConfusionCounts(2, 3, 0, 5))  # iou 0.4
    b = metrics_from_confusion(ConfusionCounts(3, 2, 0, 5))  # iou 0.6
    rep = aggregate([a, b])
    assert rep.mean["iou"] == pytest.approx(0.5)
    assert rep.se["iou"] == pytest.approx(0.1)
    rep = aggregate([a] * 5)
    assert rep.se["iou"] == 0
    with pytest.raises(InputError):
        aggregate([])


def test_se_uses_sample_std():
    vals = [0.1, 0.5, 0.6, 0.9]
    items = [metrics_from_confusion(ConfusionCounts(int(v * 10), 10 - int(v * 10), 0, 10)) for v in vals]
    ious = [it.iou for it in items]
    mean = sum(ious) / 4
    s = math.sqrt(sum((x - mean) ** 2 for x in ious) / 3)
    assert aggregate(items).se["iou"] == pytest.approx(s / 2, rel=1e-12)


def test_sauna_binarize_round_trip():
    rng = np.random.default_rng(21)
    done = 0
    while done < 200:
        arr = (rng.random(tuple(rng.integers(1, 33, 2))) < rng.uniform(0.05, 0.6)).astype(np.uint8)
        if not 0 < arr.sum() < arr.size:
            continue
        assert np.array_equal(binarize(sauna_transform(BinaryMask(arr))).data, arr)
        done += 1


def test_report_csv_layout():
    rep = evaluate(
        [np.array([[0.5, -0.5]]), np.array([[-0.5, -0.5]])],
        [BinaryMask(np.array([[1, 0]])), BinaryMask(np.array([[0, 0]]))],
        ids=["a", "b"],
    )
    lines = report_csv(rep).splitlines()
    assert lines[0] == "id,iou,dice,sens,spec,ba,iou_se,dice_se,sens_se,spec_se,ba_se,zero_division"
    assert lines[1] == "a,1.000000,1.000000,1.000000,1.000000,1.000000,,,,,,"
    assert lines[2] == "b,1.000000,1.000000,1.000000,1.000000,1.000000,,,,,,iou;dice;sens"
    assert lines[3].startswith("aggregate,1.000000,")
    assert lines[3].count(",") == 11
