"""Placement on the reliability x stability matrix.

Crossing high/low between-annotator agreement with high/low within-annotator
consistency yields four diagnoses:

====================  =====================  ============================
                      high stability         low stability
====================  =====================  ============================
high reliability      Straightforward        SystematicErrorOrValueChange
low reliability       SubjectivePerspectives AmbiguousDifficultOrPoor
====================  =====================  ============================

Scores equal to a cut count as high. Dataset-level scores use configurable,
chance-corrected metrics; item-level scores are raw proportions because
chance correction is undefined for a single item.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum

from .core import AnnotationSet
from .errors import DegenerateError, InvalidConfigError, NonFiniteError, NoQualifyingItemsError
from .reliability import fleiss_kappa, icc, krippendorff_alpha, percent_agreement
from .stability import dataset_stability

RELIABILITY_METRICS = (
    "krippendorff_alpha",
    "fleiss_kappa",
    "percent_agreement",
    "icc_oneway_random",
    "icc_twoway_random_single",
)
STABILITY_METRICS = ("self_kappa", "exact_rate")

#: raw (not chance-corrected) scores get the stricter default cut
_RAW_METRICS = ("percent_agreement", "exact_rate")


class Quadrant(str, Enum):
    STRAIGHTFORWARD = "Straightforward"
    SYSTEMATIC_ERROR_OR_VALUE_CHANGE = "SystematicErrorOrValueChange"
    SUBJECTIVE_PERSPECTIVES = "SubjectivePerspectives"
    AMBIGUOUS_DIFFICULT_OR_POOR = "AmbiguousDifficultOrPoor"


def default_cut(metric: str) -> float:
    return 0.8 if metric in _RAW_METRICS else 0.6


@dataclass(frozen=True)
class QuadrantThresholds:
    """Cut points and metric choices for the two axes.

    Omitted cuts default per metric kind: 0.6 for chance-corrected metrics,
    0.8 for raw agreement/consistency rates.
    """

    reliability_cut: float | None = None
    stability_cut: float | None = None
    reliability_metric: str = "krippendorff_alpha"
    stability_metric: str = "self_kappa"

    def __post_init__(self):
        if self.reliability_metric not in RELIABILITY_METRICS:
            raise InvalidConfigError(
                f"reliability_metric must be one of {RELIABILITY_METRICS}"
            )
        if self.stability_metric not in STABILITY_METRICS:
            raise InvalidConfigError(f"stability_metric must be one of {STABILITY_METRICS}")
        if self.reliability_cut is None:
            object.__setattr__(self, "reliability_cut", default_cut(self.reliability_metric))
        if self.stability_cut is None:
            object.__setattr__(self, "stability_cut", default_cut(self.stability_metric))
        for name, cut in (("reliability_cut", self.reliability_cut),
                          ("stability_cut", self.stability_cut)):
            if not 0.0 < cut < 1.0:
                raise InvalidConfigError(f"{name} must lie strictly in (0, 1), got {cut}")

    def to_report(self) -> dict:
        return {
            "reliability_cut": self.reliability_cut,
            "stability_cut": self.stability_cut,
            "reliability_metric": self.reliability_metric,
            "stability_metric": self.stability_metric,
        }


@dataclass(frozen=True)
class QuadrantAssignment:
    scope: str
    subject_id: str | None
    reliability_score: float
    stability_score: float
    quadrant: Quadrant
    thresholds: QuadrantThresholds

    def to_report(self) -> dict:
        return {
            "scope": self.scope,
            "subject_id": self.subject_id,
            "reliability": self.reliability_score,
            "stability": self.stability_score,
            "quadrant": self.quadrant.value,
            "thresholds": self.thresholds.to_report(),
        }


def classify(
    reliability_score: float,
    stability_score: float,
    thresholds: QuadrantThresholds | None = None,
) -> Quadrant:
    """Assign the unique quadrant for a finite (reliability, stability) pair."""
    thresholds = thresholds or QuadrantThresholds()
    if not (math.isfinite(reliability_score) and math.isfinite(stability_score)):
        raise NonFiniteError(
            f"scores must be finite, got ({reliability_score}, {stability_score})"
        )
    high_rel = reliability_score >= thresholds.reliability_cut
    high_stab = stability_score >= thresholds.stability_cut
    if high_rel:
        return Quadrant.STRAIGHTFORWARD if high_stab else Quadrant.SYSTEMATIC_ERROR_OR_VALUE_CHANGE
    return Quadrant.SUBJECTIVE_PERSPECTIVES if high_stab else Quadrant.AMBIGUOUS_DIFFICULT_OR_POOR


def _dataset_reliability(aset: AnnotationSet, metric: str, rnd: int) -> float:
    if metric == "krippendorff_alpha":
        return krippendorff_alpha(aset, rounds=rnd).value
    if metric == "fleiss_kappa":
        return fleiss_kappa(aset, rounds=rnd).value
    if metric == "percent_agreement":
        return percent_agreement(aset, rounds=rnd).value
    if metric == "icc_oneway_random":
        return icc(aset, rounds=rnd, model="oneway_random").value
    return icc(aset, rounds=rnd, model="twoway_random_single").value


def classify_dataset(
    aset: AnnotationSet, thresholds: QuadrantThresholds | None = None
) -> QuadrantAssignment:
    """Whole-dataset placement: reliability on the first present round,
    stability across all rounds."""
    thresholds = thresholds or QuadrantThresholds()
    first_round = min(aset.rounds())
    reliability_score = _dataset_reliability(aset, thresholds.reliability_metric, first_round)
    stab = dataset_stability(aset)
    if thresholds.stability_metric == "self_kappa":
        if stab.self_kappa is None:
            raise DegenerateError("dataset self_kappa is undefined for every annotator")
        stability_score = stab.self_kappa
    else:
        stability_score = stab.exact_rate
    return QuadrantAssignment(
        scope="dataset",
        subject_id=None,
        reliability_score=reliability_score,
        stability_score=stability_score,
        quadrant=classify(reliability_score, stability_score, thresholds),
        thresholds=thresholds,
    )


def classify_items(
    aset: AnnotationSet, thresholds: QuadrantThresholds | None = None
) -> tuple[list[QuadrantAssignment], tuple[str, ...]]:
    """Per-item placement from raw scores.

    Reliability = fraction of agreeing first-round annotator pairs;
    stability = fraction of repeating annotators who never changed their
    label. Items lacking either two first-round labels or a repeat pair are
    excluded and reported in the second return value.
    """
    thresholds = thresholds or QuadrantThresholds()
    first_round = min(aset.rounds())
    consistent_votes: dict[str, list[bool]] = {}
    for (item, _annotator), history in aset.cells().items():
        if len(history) < 2:
            continue
        labels = {lbl for _, lbl, _ in history}
        consistent_votes.setdefault(item, []).append(len(labels) == 1)
    first_round_labels = {
        item: [lbl for _, lbl in entries]
        for (item, _rnd), entries in aset.round_units([first_round]).items()
    }
    assignments = []
    exclusions = []
    for item in aset.items():
        first_labels = first_round_labels.get(item, [])
        m = len(first_labels)
        if m < 2:
            exclusions.append(f"item {item!r}: fewer than 2 round-{first_round} labels")
            continue
        votes = consistent_votes.get(item)
        if not votes:
            exclusions.append(f"item {item!r}: no repeat pair")
            continue
        counts = Counter(first_labels)
        agreeing = sum(c * (c - 1) for c in counts.values()) / 2
        reliability_score = agreeing / (m * (m - 1) / 2)
        stability_score = sum(votes) / len(votes)
        assignments.append(
            QuadrantAssignment(
                scope="item",
                subject_id=item,
                reliability_score=reliability_score,
                stability_score=stability_score,
                quadrant=classify(reliability_score, stability_score, thresholds),
                thresholds=thresholds,
            )
        )
    if not assignments:
        raise NoQualifyingItemsError(
            "no item has both >= 2 first-round labels and a repeat pair"
        )
    return assignments, tuple(exclusions)
