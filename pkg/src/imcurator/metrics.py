"""Confusion-matrix metrics for skewed keyword/non-keyword evaluation.

Keyword searches return mostly-positive data, so the plain F1 score
saturates regardless of classifier error rate. The complementary score
``f1_n`` rates the same classifier on the swapped task (harmonic mean of
negative predictive value and specificity), and ``average_f1`` averages
the two into a balanced headline number. Scores that would divide by
zero are reported as ``None`` rather than silently as 0, with two
standard exceptions: TP=0 makes f1 exactly 0 and TN=0 makes f1_n
exactly 0 whenever any error cell is populated.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ContractError, ValidationError

METRIC_NAMES = ("precision", "recall", "npv", "specificity",
                "f1", "f1_n", "average_f1", "skew")


@dataclass(frozen=True)
class ConfusionCounts:
    """Binary confusion-matrix cell counts."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            value = getattr(self, name)
            if value < 0 or value != int(value):
                raise ValidationError(f"{name} must be a non-negative integer, got {value!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionCounts":
        """Swap the positive and negative roles (TP<->TN, FP<->FN)."""
        return ConfusionCounts(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


def confusion_from_pairs(predicted: Sequence[bool], actual: Sequence[bool]) -> ConfusionCounts:
    """Count confusion cells from parallel predicted/actual label sequences."""
    if len(predicted) != len(actual):
        raise ContractError(
            f"predicted and actual must align, got {len(predicted)} vs {len(actual)}")
    tp = fp = fn = tn = 0
    for p, a in zip(predicted, actual):
        if p and a:
            tp += 1
        elif p and not a:
            fp += 1
        elif not p and a:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def precision(c: ConfusionCounts) -> Optional[float]:
    denom = c.tp + c.fp
    return c.tp / denom if denom else None


def recall(c: ConfusionCounts) -> Optional[float]:
    denom = c.tp + c.fn
    return c.tp / denom if denom else None


def npv(c: ConfusionCounts) -> Optional[float]:
    denom = c.tn + c.fn
    return c.tn / denom if denom else None


def specificity(c: ConfusionCounts) -> Optional[float]:
    denom = c.tn + c.fp
    return c.tn / denom if denom else None


def f1(c: ConfusionCounts) -> Optional[float]:
    """Harmonic mean of precision and recall.

    Returns 0.0 when TP=0 but errors exist, and None when no cell
    involving the positive class is populated at all.
    """
    if c.tp + c.fp + c.fn == 0:
        return None
    if c.tp == 0:
        return 0.0
    p = precision(c)
    r = recall(c)
    return 2.0 * p * r / (p + r)


def f1_n(c: ConfusionCounts) -> Optional[float]:
    """Harmonic mean of NPV and specificity (f1 of the swapped table)."""
    if c.tn + c.fn + c.fp == 0:
        return None
    if c.tn == 0:
        return 0.0
    n = npv(c)
    s = specificity(c)
    return 2.0 * n * s / (n + s)


def average_f1(c: ConfusionCounts) -> Optional[float]:
    """Arithmetic mean of f1 and f1_n; None if either is undefined."""
    a = f1(c)
    b = f1_n(c)
    if a is None or b is None:
        return None
    return (a + b) / 2.0


def skew(c: ConfusionCounts) -> Optional[float]:
    """Ratio of ground-truth negatives to ground-truth positives."""
    positives = c.tp + c.fn
    if positives == 0:
        return None
    return (c.fp + c.tn) / positives


def class_scores(c: ConfusionCounts) -> dict[str, Optional[float]]:
    """All report metrics for one confusion table, keyed by METRIC_NAMES."""
    return {
        "precision": precision(c),
        "recall": recall(c),
        "npv": npv(c),
        "specificity": specificity(c),
        "f1": f1(c),
        "f1_n": f1_n(c),
        "average_f1": average_f1(c),
        "skew": skew(c),
    }


@dataclass
class DensityHistogram:
    """Per-label distance histogram over shared bin edges."""

    bin_edges: list[float]
    keyword_counts: list[int]
    other_counts: list[int]
    markers: dict[str, float]

    @property
    def empty(self) -> bool:
        return not self.bin_edges

    def to_json_dict(self) -> dict:
        return {
            "bin_edges": self.bin_edges,
            "keyword_counts": self.keyword_counts,
            "other_counts": self.other_counts,
            "markers": self.markers,
        }


def density(scores, bins: int = 20, markers: Optional[Mapping[str, float]] = None) -> DensityHistogram:
    """Histogram labeled distances over [min, max] with equal-width bins.

    ``scores`` is any iterable of objects with ``distance`` and
    ``is_keyword`` attributes. Marker positions (e.g. calibrated fp0/fn0
    thresholds) pass through untouched for plotting.
    """
    if bins < 1:
        raise ValidationError(f"bins must be >= 1, got {bins}")
    scores = list(scores)
    marker_dict = dict(markers) if markers else {}
    if not scores:
        return DensityHistogram([], [], [], marker_dict)
    values = np.array([s.distance for s in scores], dtype=float)
    labels = np.array([bool(s.is_keyword) for s in scores])
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    kw_counts, _ = np.histogram(values[labels], bins=edges)
    other_counts, _ = np.histogram(values[~labels], bins=edges)
    return DensityHistogram(
        bin_edges=edges.tolist(),
        keyword_counts=kw_counts.tolist(),
        other_counts=other_counts.tolist(),
        markers=marker_dict,
    )


@dataclass
class ScoreReport:
    """Per-class metric table for one decision set, plus overall means."""

    per_class: dict[str, dict[str, Optional[float]]]
    means: dict[str, Optional[float]]


def _mean_defined(values: Sequence[Optional[float]]) -> Optional[float]:
    defined = [v for v in values if v is not None]
    return sum(defined) / len(defined) if defined else None


def score_report(predicted: Mapping[str, bool], actual: Mapping[str, bool],
                 class_of: Mapping[str, str],
                 classes: Optional[Sequence[str]] = None) -> ScoreReport:
    """Score one decision set per class.

    All three mappings are keyed by crop id. Classes with no crops get
    a row of None cells and are excluded from the means.
    """
    if set(predicted) != set(actual):
        raise ContractError("predicted and actual must cover the same crops")
    missing = set(actual) - set(class_of)
    if missing:
        raise ContractError(f"class_of is missing {len(missing)} crop ids")
    class_list = list(classes) if classes is not None else sorted(set(class_of[k] for k in actual))
    per_class: dict[str, dict[str, Optional[float]]] = {}
    for cls in class_list:
        ids = [k for k in actual if class_of[k] == cls]
        if not ids:
            per_class[cls] = {name: None for name in METRIC_NAMES}
            continue
        counts = confusion_from_pairs([predicted[k] for k in ids], [actual[k] for k in ids])
        per_class[cls] = class_scores(counts)
    means = {name: _mean_defined([per_class[cls][name] for cls in class_list])
             for name in METRIC_NAMES}
    return ScoreReport(per_class=per_class, means=means)


@dataclass
class ComparisonReport:
    """Side-by-side per-class scores for several decision methods."""

    classes: list[str]
    methods: list[str]
    reports: dict[str, ScoreReport]

    def cell(self, class_name: str, method: str, metric: str = "average_f1") -> Optional[float]:
        return self.reports[method].per_class[class_name][metric]

    def mean(self, method: str, metric: str = "average_f1") -> Optional[float]:
        return self.reports[method].means[metric]

    def heatmap(self, metric: str = "average_f1") -> dict:
        """Grid of per-class values (rows=classes, cols=methods) for plotting."""
        return {
            "metric": metric,
            "classes": self.classes,
            "methods": self.methods,
            "values": [[self.cell(cls, m, metric) for m in self.methods]
                       for cls in self.classes],
            "means": {m: self.mean(m, metric) for m in self.methods},
        }

    def to_csv(self, path) -> Path:
        """Emit rows=classes, columns=method/metric, 4-decimal rounding."""
        path = Path(path)
        header = ["class"] + [f"{m}/{name}" for m in self.methods for name in METRIC_NAMES]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for cls in self.classes:
                row = [cls]
                for m in self.methods:
                    for name in METRIC_NAMES:
                        value = self.cell(cls, m, name)
                        row.append("" if value is None else f"{value:.4f}")
                writer.writerow(row)
            mean_row = ["mean"]
            for m in self.methods:
                for name in METRIC_NAMES:
                    value = self.reports[m].means[name]
                    mean_row.append("" if value is None else f"{value:.4f}")
            writer.writerow(mean_row)
        return path

    def to_heatmap_json(self, path, metric: str = "average_f1") -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.heatmap(metric), indent=2))
        return path


def compare_methods(method_predictions: Mapping[str, Mapping[str, bool]],
                    actual: Mapping[str, bool],
                    class_of: Mapping[str, str],
                    classes: Optional[Sequence[str]] = None) -> ComparisonReport:
    """Score several decision methods over one shared crop universe."""
    if not method_predictions:
        raise ContractError("at least one method is required")
    universe = set(actual)
    for method, preds in method_predictions.items():
        if set(preds) != universe:
            raise ContractError(f"method {method!r} does not cover the shared crop universe")
    class_list = list(classes) if classes is not None else sorted(set(class_of[k] for k in actual))
    reports = {method: score_report(preds, actual, class_of, class_list)
               for method, preds in method_predictions.items()}
    return ComparisonReport(classes=class_list,
                            methods=list(method_predictions),
                            reports=reports)
