"""Evaluation: binary contact detection plus TP-gated contact-geometry metrics."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import distance_transform_edt

from .audiobank import LABELS, ContactLabel
from .errors import EmptyEvaluation, EmptyMask, ShapeMismatch
from .model import bce_with_logits, manifest_batch, predict_logits, threshold_logits

# column layout of the result tables
CSV_COLUMNS = ("Prsn", "Rcll", "F1", "Acc", "BCE", "IOU", "CD")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def add(self, predicted: bool, actual: bool) -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + (predicted and actual), self.tn + (not predicted and not actual),
            self.fp + (predicted and not actual), self.fn + (not predicted and actual))


@dataclass(frozen=True)
class BinaryScores:
    precision: float
    recall: float
    f1: float
    accuracy: float
    degenerate: bool


def _ratio(num, den):
    return (num / den, False) if den else (0.0, True)


def binary_metrics(counts: ConfusionCounts) -> BinaryScores:
    """Precision, recall, F1, accuracy; zero denominators give 0 and set ``degenerate``."""
    if counts.total <= 0:
        raise EmptyEvaluation("no samples were evaluated")
    precision, d1 = _ratio(counts.tp, counts.tp + counts.fp)
    recall, d2 = _ratio(counts.tp, counts.tp + counts.fn)
    f1, d3 = _ratio(2 * precision * recall, precision + recall)
    accuracy = (counts.tp + counts.tn) / counts.total
    return BinaryScores(precision, recall, f1, accuracy, d1 or d2 or d3)


def _same_shape(a, b):
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ShapeMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    return a, b


def iou(pred, gt) -> float:
    pred, gt = _same_shape(pred, gt)
    union = np.count_nonzero(pred | gt)
    if union == 0:
        return 1.0
    return np.count_nonzero(pred & gt) / union


def _directed_mean(src: np.ndarray, dst: np.ndarray) -> float:
    """Mean over ``src`` pixels of the Euclidean distance to the nearest ``dst`` pixel."""
    dist = distance_transform_edt(~dst)
    return float(np.mean(dist[src]))


def chamfer(pred, gt) -> float:
    """Bidirectional Chamfer distance in pixels: half the sum of both directed means."""
    pred, gt = _same_shape(pred, gt)
    if not pred.any() or not gt.any():
        raise EmptyMask("chamfer distance needs two nonempty masks")
    return 0.5 * (_directed_mean(pred, gt) + _directed_mean(gt, pred))


def area_error(pred, gt) -> int:
    pred, gt = _same_shape(pred, gt)
    return abs(int(np.count_nonzero(pred)) - int(np.count_nonzero(gt)))


def bce_metric(logits, gt) -> float:
    return bce_with_logits(logits, gt)


@dataclass
class LabelBreakdown:
    n: int = 0
    correct: int = 0
    tp: int = 0
    iou_sum: float = 0.0
    cd_sum: float = 0.0
    area_sum: float = 0.0

    def summary(self) -> dict:
        out = {"n": self.n, "detection_accuracy": self.correct / self.n if self.n else None,
               "tp": self.tp}
        out.update(self._geometry())
        return out

    def _geometry(self) -> dict:
        if not self.tp:
            return {}
        return {"mean_iou": self.iou_sum / self.tp, "mean_cd_px": self.cd_sum / self.tp,
                "mean_area_error_px": self.area_sum / self.tp}


@dataclass
class MetricsReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    degenerate: bool
    mean_bce: float
    mean_iou: float | None
    mean_cd_px: float | None
    mean_area_error_px: float | None
    counts: ConfusionCounts
    n_samples: int
    threshold: float
    per_label: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("mean_iou", "mean_cd_px", "mean_area_error_px"):
            if d[key] is None:
                del d[key]
        return d

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path, model_name: str = "model") -> None:
        def cell(v):
            return "" if v is None else f"{v:.6g}"

        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("Model",) + CSV_COLUMNS)
            w.writerow((model_name, cell(self.precision), cell(self.recall), cell(self.f1),
                        cell(self.accuracy), cell(self.mean_bce), cell(self.mean_iou),
                        cell(self.mean_cd_px)))


def evaluate_predictions(items, threshold: float) -> MetricsReport:
    """``items`` yields (logits, gt_mask, gt_label) triples in record order.

    IoU, Chamfer and area error are averaged over true positives only; BCE over all.
    """
    counts = ConfusionCounts()
    bce_sum = 0.0
    n = 0
    geo = LabelBreakdown()
    per = {lab: LabelBreakdown() for lab in LABELS}
    for logits, gt, label in items:
        label = ContactLabel.parse(label)
        gt = np.asarray(gt) > 0
        _, pred, pred_contact = threshold_logits(logits, threshold)
        actual = bool(gt.any())
        counts = counts.add(pred_contact, actual)
        bce_sum += bce_metric(logits, gt)
        n += 1
        b = per[label]
        b.n += 1
        b.correct += pred_contact == actual
        if pred_contact and actual:
            i, c, a = iou(pred, gt), chamfer(pred, gt), area_error(pred, gt)
            for acc in (geo, b):
                acc.tp += 1
                acc.iou_sum += i
                acc.cd_sum += c
                acc.area_sum += a
    if n == 0:
        raise EmptyEvaluation("no samples were evaluated")
    s = binary_metrics(counts)
    g = geo._geometry()
    return MetricsReport(
        s.precision, s.recall, s.f1, s.accuracy, s.degenerate, bce_sum / n,
        g.get("mean_iou"), g.get("mean_cd_px"), g.get("mean_area_error_px"), counts, n,
        float(threshold), {lab.value: per[lab].summary() for lab in LABELS})


def _chunk_logits(args):
    params, batch = args
    return predict_logits(params, batch, len(batch))


def evaluate(params, manifest, threshold: float = 0.5, chunk: int = 64, jobs: int = 1) -> MetricsReport:
    """Run the model over every record of ``manifest`` and score it.

    Records are cut into fixed ``chunk``-sized pieces before being farmed out, so the
    result does not depend on ``jobs``.
    """
    if not len(manifest):
        raise EmptyEvaluation("test split is empty")
    batch = manifest_batch(manifest, params.arch)
    if jobs <= 1:
        logits = predict_logits(params, batch, chunk)
    else:
        pieces = [(params, batch.take(slice(i, i + chunk))) for i in range(0, len(batch), chunk)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            logits = np.concatenate(list(pool.map(_chunk_logits, pieces)))
    labels = [r.label for r in manifest.records]
    return evaluate_predictions(zip(logits, batch.mask, labels), threshold)
