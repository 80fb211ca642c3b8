"""Confusion-matrix metrics and the (window, epsilon) results table."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import LengthMismatch

REPORT_COLUMNS = ("w", "epsilon", "accuracy", "precision", "recall", "f1")


@dataclass(frozen=True)
class Metrics:
    """Scores derived from a binary confusion matrix.

    A ratio whose denominator is zero is reported as 0 and its name is
    listed in ``undefined``.
    """

    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    undefined: tuple = field(default=())

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def metrics_from_counts(tp: int, fp: int, tn: int, fn: int) -> Metrics:
    undefined = []

    def ratio(num, den, name):
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    total = tp + fp + tn + fn
    accuracy = ratio(tp + tn, total, "accuracy")
    precision = ratio(tp, tp + fp, "precision")
    recall = ratio(tp, tp + fn, "recall")
    f1 = ratio(2 * precision * recall, precision + recall, "f1")
    return Metrics(tp, fp, tn, fn, accuracy, precision, recall, f1, tuple(undefined))


def confusion(predictions, targets) -> Metrics:
    p = np.asarray(predictions).astype(bool).ravel()
    t = np.asarray(targets).astype(bool).ravel()
    if p.size != t.size:
        raise LengthMismatch(f"{p.size} predictions for {t.size} targets")
    if p.size == 0:
        raise LengthMismatch("cannot score an empty sample")
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = int(p.size - tp - fp - fn)
    return metrics_from_counts(tp, fp, tn, fn)


def baseline_f1(targets) -> dict:
    """F1 of the constant all-positive and all-negative predictors."""
    t = np.asarray(targets)
    return {
        "all_positive": confusion(np.ones_like(t), t).f1,
        "all_negative": confusion(np.zeros_like(t), t).f1,
    }


def _rows(results: Mapping) -> list:
    rows = []
    for (w, eps) in sorted(results, key=lambda key: (key[0], key[1])):
        m = results[(w, eps)]
        if m is None:
            rows.append((w, eps, None, None, None, None))
        else:
            rows.append((w, eps, m.accuracy, m.precision, m.recall, m.f1))
    return rows


def grid_report(results: Mapping) -> str:
    """Aligned text table, one row per (w, epsilon), sorted by w then epsilon.

    Cells mapped to ``None`` print as blanks.
    """
    lines = ["{:>4} {:>8} {:>9} {:>10} {:>7} {:>9}".format(
        "w", "epsilon", "Accuracy", "Precision", "Recall", "f1-score")]
    for w, eps, *vals in _rows(results):
        cells = ["" if v is None else f"{v:.3f}" for v in vals]
        lines.append("{:>4} {:>8} {:>9} {:>10} {:>7} {:>9}".format(w, f"{eps:.2f}", *cells))
    return "\n".join(lines)


def grid_csv(results: Mapping, digits: int | None = 3) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for w, eps, *vals in _rows(results):
        if digits is None:
            cells = ["" if v is None else repr(float(v)) for v in vals]
        else:
            cells = ["" if v is None else f"{v:.{digits}f}" for v in vals]
        writer.writerow([w, repr(float(eps))] + cells)
    return buf.getvalue()


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".full" + path.suffix)


def write_grid_report(results: Mapping, path) -> Path:
    """CSV rounded to 3 decimals, plus ``<name>.full.csv`` at full precision."""
    path = Path(path)
    path.write_text(grid_csv(results, 3), encoding="utf-8")
    sidecar_path(path).write_text(grid_csv(results, None), encoding="utf-8")
    return path


def read_grid_report(path) -> dict:
    """Load a full-precision sidecar (or rounded CSV) back into ``{(w, eps): Metrics-like}``.

    Only the ratio columns are stored, so values come back as dicts.
    """
    path = Path(path)
    source = sidecar_path(path) if sidecar_path(path).exists() else path
    out = {}
    with open(source, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["w"]), float(row["epsilon"]))
            if row["f1"] == "":
                out[key] = None
            else:
                out[key] = {c: float(row[c]) for c in REPORT_COLUMNS[2:]}
    return out


@dataclass(frozen=True)
class _Scores:
    accuracy: float
    precision: float
    recall: float
    f1: float


def merge_into_report(path, w: int, epsilon: float, metrics: Metrics) -> dict:
    """Add or replace one cell of an on-disk grid report and rewrite it."""
    path = Path(path)
    results = {}
    if path.exists():
        for key, vals in read_grid_report(path).items():
            results[key] = None if vals is None else _Scores(**vals)
    results[(int(w), float(epsilon))] = metrics
    write_grid_report(results, path)
    return results
