"""Reclassify staged crops by comparing anchor distance to a threshold.

Two rules move crops between the keyword and non-keyword spaces of a
class: a keyword-staged crop whose distance A exceeds the threshold B is
demoted, and a non-keyword-staged crop whose distance falls below B is
promoted. A tie (A = B) keeps the detector's prior label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .catalog import Catalog, DistanceScore
from .errors import ContractError
from .validation import check_finite_nonnegative

LABELS = ("keyword", "non-keyword")


@dataclass(frozen=True)
class Decision:
    """One crop's reclassification outcome."""

    crop_id: str
    prior: str
    distance: float
    threshold: float
    final: str

    @property
    def changed(self) -> bool:
        return self.final != self.prior


def decide(prior: str, distance: float, threshold: float) -> str:
    """Final label from (prior, distance A, threshold B) alone."""
    if prior not in LABELS:
        raise ContractError(f"prior must be one of {LABELS}, got {prior!r}")
    check_finite_nonnegative(distance, "distance")
    if prior == "keyword" and distance > threshold:
        return "non-keyword"
    if prior == "non-keyword" and distance < threshold:
        return "keyword"
    return prior


def decision(crop_id: str, prior: str, distance: float, threshold: float) -> Decision:
    return Decision(crop_id=crop_id, prior=prior, distance=distance,
                    threshold=threshold, final=decide(prior, distance, threshold))


@dataclass
class ReclassificationReport:
    """Audit record of one apply pass over a class space."""

    class_name: str
    threshold: float
    level: Optional[int]
    moved_in: list[str]
    moved_out: list[str]
    unchanged_count: int
    decisions: list[Decision]

    def to_json_dict(self) -> dict:
        return {"class": self.class_name, "threshold": self.threshold,
                "level": self.level, "moved_in": list(self.moved_in),
                "moved_out": list(self.moved_out),
                "unchanged_count": self.unchanged_count}


def apply(catalog: Catalog, class_name: str, scores: Sequence[DistanceScore],
          threshold: float, level: Optional[int] = None) -> ReclassificationReport:
    """Apply both rules to one class space and move crops in the catalog.

    Every score must reference a current member of the class space;
    an unknown crop aborts before any membership changes.
    """
    space = catalog.class_space(class_name)
    members = space.keyword_members | space.non_keyword_members
    for score in scores:
        if score.crop_id not in members:
            raise ContractError(
                f"crop {score.crop_id} is not a member of class space {class_name!r}")
    moved_in: list[str] = []
    moved_out: list[str] = []
    unchanged = 0
    decisions: list[Decision] = []
    with catalog.bulk():
        for score in scores:
            prior = "keyword" if score.crop_id in space.keyword_members else "non-keyword"
            d = decision(score.crop_id, prior, score.distance, threshold)
            decisions.append(d)
            if d.changed:
                catalog.assign_space(score.crop_id, d.final)
                (moved_in if d.final == "keyword" else moved_out).append(score.crop_id)
            else:
                unchanged += 1
    return ReclassificationReport(class_name=class_name, threshold=threshold,
                                  level=level, moved_in=moved_in, moved_out=moved_out,
                                  unchanged_count=unchanged, decisions=decisions)
