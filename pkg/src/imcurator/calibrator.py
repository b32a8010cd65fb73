"""Distance-threshold calibration from labeled validation scores.

A crop is classified keyword when its anchor distance is <= the active
threshold. Calibration finds two anchor thresholds on validation data:
``fp0`` (strictest useful value, below which no non-keyword crop is
accepted) and ``fn0`` (loosest useful value, above which no keyword crop
is rejected), then spaces the user-facing strictness levels 1..5
linearly between them. Level 1 maps to fn0, level 5 to fp0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from sklearn.base import BaseEstimator

from .errors import CalibrationError, ValidationError
from .metrics import ConfusionCounts
from .validation import as_bool_array, as_distance_array, check_finite_nonnegative

DEGENERATE_EPSILON = 1e-6
LEVELS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class LabeledDistance:
    """One validation score: anchor distance plus ground-truth label."""

    distance: float
    is_keyword: bool

    def __post_init__(self):
        check_finite_nonnegative(self.distance, "distance")


@dataclass
class ThresholdProfile:
    """Calibrated fp0/fn0 anchors and the level 1..5 threshold ladder for one class."""

    class_name: str
    fp0: float
    fn0: float
    ladder: dict[int, float]
    degenerate: bool
    sample_count: int

    def threshold_for(self, level: int) -> float:
        if level not in self.ladder:
            raise ValidationError(f"level must be one of {sorted(self.ladder)}, got {level!r}")
        return self.ladder[level]

    def to_json_dict(self) -> dict:
        return {
            "class": self.class_name,
            "fp0": self.fp0,
            "fn0": self.fn0,
            "ladder": {str(level): t for level, t in sorted(self.ladder.items())},
            "degenerate": self.degenerate,
            "sample_count": self.sample_count,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ThresholdProfile":
        return cls(
            class_name=data["class"],
            fp0=float(data["fp0"]),
            fn0=float(data["fn0"]),
            ladder={int(level): float(t) for level, t in data["ladder"].items()},
            degenerate=bool(data["degenerate"]),
            sample_count=int(data["sample_count"]),
        )


def _split(samples: Sequence[LabeledDistance]) -> tuple[list[float], list[float]]:
    pos = [s.distance for s in samples if s.is_keyword]
    neg = [s.distance for s in samples if not s.is_keyword]
    return pos, neg


def confusion_at(samples: Sequence[LabeledDistance], t: float) -> ConfusionCounts:
    """Count the confusion table of the distance <= t classification."""
    if not samples:
        raise CalibrationError("samples must be non-empty")
    tp = fp = fn = tn = 0
    for s in samples:
        if s.distance <= t:
            if s.is_keyword:
                tp += 1
            else:
                fp += 1
        elif s.is_keyword:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def fp0_threshold(samples: Sequence[LabeledDistance]) -> float:
    """Largest keyword distance that accepts no non-keyword sample.

    When the label distributions overlap completely (no keyword distance
    lies below every non-keyword distance) there is no useful value, so
    the fallback min(keyword) - epsilon is returned and the profile is
    flagged degenerate by the caller.
    """
    pos, neg = _split(samples)
    if not pos:
        raise CalibrationError("at least one keyword sample is required")
    if not neg:
        return max(pos)
    floor = min(neg)
    below = [d for d in pos if d < floor]
    if below:
        return max(below)
    return min(pos) - DEGENERATE_EPSILON


def fn0_threshold(samples: Sequence[LabeledDistance]) -> float:
    """Smallest threshold that rejects no keyword sample: max keyword distance."""
    pos, _ = _split(samples)
    if not pos:
        raise CalibrationError("at least one keyword sample is required")
    return max(pos)


def build_ladder(fp0: float, fn0: float) -> dict[int, float]:
    """Linear level->threshold map from fn0 (level 1) down to fp0 (level 5).

    An inverted pair (fp0 > fn0) collapses to fn0 at every level; the
    caller flags such profiles degenerate.
    """
    if fp0 > fn0:
        return {level: fn0 for level in LEVELS}
    # Endpoints are pinned so ladder(1)/ladder(5) equal fn0/fp0 exactly.
    ladder = {level: fn0 + (fp0 - fn0) * (level - 1) / 4 for level in LEVELS}
    ladder[1] = fn0
    ladder[5] = fp0
    return ladder


def best_f1_threshold(samples: Sequence[LabeledDistance]) -> float:
    """Observed distance maximizing F1 of the <= classification, ties toward smaller.

    F1 values are compared as exact integer ratios 2tp/(2tp+fp+fn) so
    float rounding cannot break the tie rule.
    """
    samples = list(samples)
    pos, neg = _split(samples)
    if not pos or not neg:
        raise CalibrationError("samples with both labels are required")
    best_t: Optional[float] = None
    best_num, best_den = -1, 1
    for t in sorted(set(pos + neg)):
        c = confusion_at(samples, t)
        num, den = 2 * c.tp, 2 * c.tp + c.fp + c.fn
        if num * best_den > best_num * den:
            best_num, best_den, best_t = num, den, t
    return best_t


def is_degenerate(samples: Sequence[LabeledDistance]) -> bool:
    """True when no keyword distance lies strictly below every non-keyword one."""
    pos, neg = _split(samples)
    if not pos:
        raise CalibrationError("at least one keyword sample is required")
    return bool(neg) and min(pos) >= min(neg)


def build_profile(class_name: str, samples: Iterable[LabeledDistance]) -> ThresholdProfile:
    """Calibrate one class: fp0/fn0 anchors, ladder, and degeneracy flag."""
    samples = list(samples)
    fp0 = fp0_threshold(samples)
    fn0 = fn0_threshold(samples)
    return ThresholdProfile(
        class_name=class_name,
        fp0=fp0,
        fn0=fn0,
        ladder=build_ladder(fp0, fn0),
        degenerate=is_degenerate(samples) or fp0 > fn0,
        sample_count=len(samples),
    )


def mean_profile(profiles: Sequence[ThresholdProfile], class_name: str = "global") -> ThresholdProfile:
    """Average per-class profiles into one fallback profile."""
    if not profiles:
        raise CalibrationError("at least one profile is required")
    fp0 = sum(p.fp0 for p in profiles) / len(profiles)
    fn0 = sum(p.fn0 for p in profiles) / len(profiles)
    return ThresholdProfile(
        class_name=class_name,
        fp0=fp0,
        fn0=fn0,
        ladder=build_ladder(fp0, fn0),
        degenerate=any(p.degenerate for p in profiles) or fp0 > fn0,
        sample_count=sum(p.sample_count for p in profiles),
    )


class ThresholdCalibrator(BaseEstimator):
    """Estimator facade over profile calibration.

    fit(X, y) takes anchor distances and boolean keyword labels;
    predict(X) classifies distances at the configured strictness level.
    """

    def __init__(self, class_name: str = "", level: int = 3):
        self.class_name = class_name
        self.level = level

    def fit(self, X, y) -> "ThresholdCalibrator":
        distances = as_distance_array(X, "X")
        labels = as_bool_array(y, "y")
        if distances.shape != labels.shape:
            raise ValidationError(
                f"X and y must align, got {distances.shape} vs {labels.shape}")
        samples = [LabeledDistance(float(d), bool(k)) for d, k in zip(distances, labels)]
        profile = build_profile(self.class_name, samples)
        self.profile_ = profile
        self.fp0_ = profile.fp0
        self.fn0_ = profile.fn0
        self.ladder_ = dict(profile.ladder)
        self.degenerate_ = profile.degenerate
        return self

    def predict(self, X, level: Optional[int] = None):
        if not hasattr(self, "profile_"):
            raise CalibrationError("fit must be called before predict")
        distances = as_distance_array(X, "X")
        t = self.profile_.threshold_for(self.level if level is None else level)
        return distances <= t
