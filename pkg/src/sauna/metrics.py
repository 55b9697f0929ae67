"""Binarization and overlap metrics with image-wise aggregation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .grid import BinaryMask, ScalarField

__all__ = [
    "METRIC_NAMES",
    "ConfusionCounts",
    "ImageMetrics",
    "MetricsReport",
    "binarize",
    "confusion",
    "metrics_from_confusion",
    "aggregate",
    "evaluate",
    "report_csv",
]

METRIC_NAMES = ("iou", "dice", "sens", "spec", "ba")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise InputError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ImageMetrics:
    id: str
    iou: float
    dice: float
    sens: float
    spec: float
    ba: float
    # metrics that hit the 0/0 -> 1 convention
    conventions: tuple[str, ...] = ()

    def values(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in METRIC_NAMES}


@dataclass(frozen=True)
class MetricsReport:
    per_image: list[ImageMetrics]
    mean: dict[str, float] = field(default_factory=dict)
    se: dict[str, float] = field(default_factory=dict)


def binarize(pred, threshold: float = 0.0) -> BinaryMask:
    """Foreground iff value > threshold; exact ties go to background."""
    arr = np.asarray(getattr(pred, "data", pred), dtype=np.float64)
    return BinaryMask((arr > threshold).astype(np.uint8))


def confusion(pred_mask, gt_mask) -> ConfusionCounts:
    p = np.asarray(getattr(pred_mask, "data", pred_mask)).astype(bool)
    g = np.asarray(getattr(gt_mask, "data", gt_mask)).astype(bool)
    if p.shape != g.shape:
        raise InputError(f"shape mismatch: pred {p.shape} vs gt {g.shape}")
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=p.size - tp - fp - fn)


def _ratio(num: int, den: int, name: str, hits: list[str]) -> float:
    if den == 0:
        hits.append(name)
        return 1.0
    return num / den


def metrics_from_confusion(c: ConfusionCounts, id: str = "") -> ImageMetrics:
    """IoU, Dice, sensitivity, specificity and balanced accuracy.

    Any 0/0 ratio counts as 1: predicting an absent class as absent is a
    success. The affected metric names are recorded in ``conventions``.
    """
    hits: list[str] = []
    iou = _ratio(c.tp, c.tp + c.fp + c.fn, "iou", hits)
    dice = _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, "dice", hits)
    sens = _ratio(c.tp, c.tp + c.fn, "sens", hits)
    spec = _ratio(c.tn, c.tn + c.fp, "spec", hits)
    return ImageMetrics(id, iou, dice, sens, spec, (sens + spec) / 2.0, tuple(hits))


def aggregate(items: list[ImageMetrics]) -> MetricsReport:
    """Per-metric mean and standard error ``s / sqrt(n)`` (``s`` with n-1)."""
    if not items:
        raise InputError("cannot aggregate an empty list of images")
    n = len(items)
    mean, se = {}, {}
    for name in METRIC_NAMES:
        vals = np.array([getattr(it, name) for it in items], dtype=np.float64)
        mean[name] = float(np.mean(vals))
        se[name] = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MetricsReport(list(items), mean, se)


def evaluate(preds, gts, ids=None, threshold: float = 0.0) -> MetricsReport:
    """Binarize each prediction and score it against its ground-truth mask."""
    preds, gts = list(preds), list(gts)
    if len(preds) != len(gts):
        raise InputError(f"{len(preds)} predictions vs {len(gts)} ground-truth masks")
    ids = list(ids) if ids is not None else [f"{k:04d}" for k in range(len(preds))]
    items = [
        metrics_from_confusion(confusion(binarize(p, threshold), g), id=i)
        for p, g, i in zip(preds, gts, ids)
    ]
    return aggregate(items)


def report_csv(report: MetricsReport) -> str:
    """One row per image plus a final ``aggregate`` row carrying SE columns."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    se_cols = [f"{k}_se" for k in METRIC_NAMES]
    writer.writerow(["id", *METRIC_NAMES, *se_cols, "zero_division"])
    for it in report.per_image:
        writer.writerow(
            [it.id, *(f"{getattr(it, k):.6f}" for k in METRIC_NAMES), *([""] * len(se_cols)),
             ";".join(it.conventions)]
        )
    writer.writerow(
        ["aggregate", *(f"{report.mean[k]:.6f}" for k in METRIC_NAMES),
         *(f"{report.se[k]:.6f}" for k in METRIC_NAMES), ""]
    )
    return buf.getvalue()
