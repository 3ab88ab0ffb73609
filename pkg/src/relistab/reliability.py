"""Between-annotator agreement coefficients.

All operations are pure functions of an :class:`AnnotationSet` and default to
round 1, the primary labelling pass. Each returns an
:class:`AgreementResult` carrying the value, the population it was computed
on, and a list of exclusions (units that failed the metric's precondition).

Conventions
-----------
* Units are ``(item, round)`` cells; selecting several rounds treats each
  round's labels for an item as a separate unit, except Krippendorff's
  alpha, which pools labels per item across the selected rounds (its
  coincidence construction handles unbalanced data natively).
* Chance-degenerate cases (expected agreement 1, zero expected disagreement)
  resolve to 1.0 when observed agreement is also perfect and raise
  :class:`ChanceDegenerateError` otherwise.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .core import AnnotationRecord, AnnotationSet, coincidence_counts, resolve_rounds
from .errors import (
    ChanceDegenerateError,
    DegenerateError,
    InsufficientVarianceError,
    InvalidConfigError,
    NoOverlapError,
    NotIntervalError,
    RelistabError,
    TooManyDegenerateError,
)

DISTANCES = ("nominal", "ordinal", "interval")
ICC_MODELS = ("oneway_random", "twoway_random_single")

#: closed value range per metric name, used as a result invariant
_RANGES: dict[str, tuple[float, float]] = {
    "percent_agreement": (0.0, 1.0),
    "cohens_kappa": (-1.0, 1.0),
    "fleiss_kappa": (-1.0, 1.0),
    "krippendorff_alpha": (-1.0, 1.0),
    "icc_oneway_random": (-math.inf, 1.0),
    "icc_twoway_random_single": (-math.inf, 1.0),
}

_RANGE_TOL = 1e-9


def _snap(metric_name: str, value: float) -> float:
    """Clamp float noise back into the metric's documented range."""
    low, high = _RANGES[metric_name]
    if value < low - _RANGE_TOL or value > high + _RANGE_TOL:
        raise RelistabError(f"{metric_name} produced out-of-range value {value!r}")
    return min(max(value, low), high)


@dataclass(frozen=True)
class AgreementResult:
    """One agreement coefficient with its computation context."""

    metric_name: str
    value: float
    n_items: int
    n_annotators: int
    rounds: tuple[int, ...]
    ci: tuple[float, float] | None = None
    exclusions: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "value", _snap(self.metric_name, float(self.value)))
        if self.ci is not None:
            low, high = (float(self.ci[0]), float(self.ci[1]))
            if not (low <= self.value <= high):
                raise RelistabError(
                    f"ci {self.ci} does not bracket value {self.value}"
                )
            object.__setattr__(self, "ci", (low, high))

    def with_ci(self, ci: tuple[float, float]) -> "AgreementResult":
        return replace(self, ci=ci)

    def to_report(self) -> dict:
        return {
            "metric": self.metric_name,
            "value": self.value,
            "n_items": self.n_items,
            "n_annotators": self.n_annotators,
            "round": self.rounds[0] if len(self.rounds) == 1 else list(self.rounds),
            "ci": None if self.ci is None else list(self.ci),
            "exclusions": list(self.exclusions),
        }


def _contributing_units(aset: AnnotationSet, rounds: Sequence[int]):
    """Split (item, round) units into ≥2-label units and exclusion notes."""
    units = {}
    exclusions = []
    for (item, rnd), entries in sorted(aset.round_units(rounds).items()):
        if len(entries) >= 2:
            units[(item, rnd)] = entries
        else:
            exclusions.append(f"item {item!r} round {rnd}: fewer than 2 labels")
    return units, exclusions


def _population(units) -> tuple[int, int]:
    items = {item for item, _ in units}
    annotators = set()
    for entries in units.values():
        annotators.update(ann for ann, _ in entries)
    return len(items), len(annotators)


def percent_agreement(aset: AnnotationSet, rounds: int | Sequence[int] | None = 1) -> AgreementResult:
    """Mean over units of (agreeing unordered annotator pairs / total pairs).

    Not chance-corrected; reported as the uncorrected baseline alongside the
    kappa/alpha family.
    """
    resolved = resolve_rounds(aset, rounds)
    units, exclusions = _contributing_units(aset, resolved)
    if not units:
        raise DegenerateError("no unit with >= 2 labels in the selected rounds")
    per_unit = []
    for entries in units.values():
        counts = Counter(lbl for _, lbl in entries)
        m = len(entries)
        agreeing = sum(c * (c - 1) for c in counts.values()) / 2
        per_unit.append(agreeing / (m * (m - 1) / 2))
    n_items, n_annotators = _population(units)
    return AgreementResult(
        metric_name="percent_agreement",
        value=float(np.mean(per_unit)),
        n_items=n_items,
        n_annotators=n_annotators,
        rounds=resolved,
        exclusions=tuple(exclusions),
    )


def cohens_kappa(
    aset: AnnotationSet,
    annotator_a: str,
    annotator_b: str,
    rounds: int | Sequence[int] | None = 1,
) -> AgreementResult:
    """Cohen's kappa between two annotators over co-labelled units.

    kappa = (Po - Pe) / (1 - Pe) with Pe from the two annotators' own label
    marginals. Pe = 1 with perfect observed agreement returns 1.0; Pe = 1
    otherwise is a contradiction and raises ChanceDegenerateError.
    """
    if annotator_a == annotator_b:
        raise InvalidConfigError("cohens_kappa needs two distinct annotators")
    resolved = resolve_rounds(aset, rounds)
    pairs: list[tuple[str, str]] = []
    items = set()
    exclusions = []
    for rnd in resolved:
        for item in aset.items():
            la = aset.label(item, annotator_a, rnd)
            lb = aset.label(item, annotator_b, rnd)
            if la is not None and lb is not None:
                pairs.append((la, lb))
                items.add(item)
            elif la is not None or lb is not None:
                exclusions.append(f"item {item!r} round {rnd}: labelled by one annotator only")
    if not pairs:
        raise NoOverlapError(
            f"annotators {annotator_a!r} and {annotator_b!r} share no labelled unit"
        )
    n = len(pairs)
    po = sum(1 for la, lb in pairs if la == lb) / n
    marg_a = Counter(la for la, _ in pairs)
    marg_b = Counter(lb for _, lb in pairs)
    pe = sum(marg_a[c] * marg_b[c] for c in marg_a) / (n * n)
    if pe >= 1.0 - 1e-15:
        if po >= 1.0 - 1e-15:
            value = 1.0
        else:
            raise ChanceDegenerateError(
                "expected agreement is 1 but observed agreement is not"
            )
    else:
        value = (po - pe) / (1.0 - pe)
    return AgreementResult(
        metric_name="cohens_kappa",
        value=value,
        n_items=len(items),
        n_annotators=2,
        rounds=resolved,
        exclusions=tuple(exclusions),
    )


def fleiss_kappa(aset: AnnotationSet, rounds: int | Sequence[int] | None = 1) -> AgreementResult:
    """Fleiss' kappa over units sharing the modal label count.

    The metric requires a constant number of labels per unit; units whose
    count differs from the modal count (ties resolved toward the larger
    count) are excluded and reported.
    """
    resolved = resolve_rounds(aset, rounds)
    units, exclusions = _contributing_units(aset, resolved)
    if not units:
        raise DegenerateError("no unit with >= 2 labels in the selected rounds")
    size_freq = Counter(len(entries) for entries in units.values())
    n_raters = max(size_freq, key=lambda size: (size_freq[size], size))
    kept = {}
    for key, entries in sorted(units.items()):
        if len(entries) == n_raters:
            kept[key] = entries
        else:
            item, rnd = key
            exclusions.append(
                f"item {item!r} round {rnd}: {len(entries)} labels != modal count {n_raters}"
            )
    if not kept:
        raise DegenerateError("no unit matches the modal label count")
    counts = np.zeros((len(kept), len(aset.schema.categories)), dtype=float)
    cat_index = aset.schema.category_index()
    for row, entries in enumerate(kept.values()):
        for _, lbl in entries:
            counts[row, cat_index[lbl]] += 1
    n = float(n_raters)
    p_i = (np.sum(counts * (counts - 1), axis=1)) / (n * (n - 1))
    p_bar = float(np.mean(p_i))
    p_j = np.sum(counts, axis=0) / counts.sum()
    pe_bar = float(np.sum(p_j**2))
    if pe_bar >= 1.0 - 1e-15:
        if p_bar >= 1.0 - 1e-15:
            value = 1.0
        else:
            raise ChanceDegenerateError(
                "expected agreement is 1 but observed agreement is not"
            )
    else:
        value = (p_bar - pe_bar) / (1.0 - pe_bar)
    n_items, n_annotators = _population(kept)
    return AgreementResult(
        metric_name="fleiss_kappa",
        value=value,
        n_items=n_items,
        n_annotators=n_annotators,
        rounds=resolved,
        exclusions=tuple(exclusions),
    )


def _distance_matrix(aset: AnnotationSet, distance: str, coincidence: np.ndarray) -> np.ndarray:
    k = len(aset.schema.categories)
    if distance == "nominal":
        return 1.0 - np.eye(k)
    if distance == "ordinal":
        # squared difference of cumulative coincidence-marginal mass between
        # the two categories, counting each endpoint at half weight
        marginals = coincidence.sum(axis=1)
        delta2 = np.zeros((k, k))
        for c in range(k):
            for kk in range(c + 1, k):
                span = marginals[c : kk + 1].sum() - (marginals[c] + marginals[kk]) / 2.0
                delta2[c, kk] = delta2[kk, c] = span**2
        return delta2
    if distance == "interval":
        if aset.schema.numeric_values is None:
            raise NotIntervalError("interval distance needs schema numeric_values")
        values = np.array([aset.schema.numeric_value(c) for c in aset.schema.categories])
        diff = values[:, None] - values[None, :]
        return diff**2
    raise InvalidConfigError(f"distance must be one of {DISTANCES}, got {distance!r}")


def krippendorff_alpha(
    aset: AnnotationSet,
    rounds: int | Sequence[int] | None = 1,
    distance: str | None = None,
) -> AgreementResult:
    """Krippendorff's alpha: 1 - observed/expected disagreement.

    Works directly on the coincidence matrix, so unbalanced units (any item
    with >= 2 labels) contribute without imputation. ``distance`` defaults to
    the schema's scale_kind. Zero expected disagreement means every pairable
    value is identical and yields 1.0.
    """
    resolved = resolve_rounds(aset, rounds)
    if distance is None:
        distance = aset.schema.scale_kind
    pooled = aset.unit_labels(resolved)
    exclusions = tuple(
        f"item {item!r}: fewer than 2 labels in selected rounds"
        for item in sorted(pooled)
        if len(pooled[item]) < 2
    )
    coincidence = coincidence_counts(aset, resolved)
    delta2 = _distance_matrix(aset, distance, coincidence)
    n_total = coincidence.sum()
    marginals = coincidence.sum(axis=1)
    d_observed = float((coincidence * delta2).sum()) / n_total
    d_expected = float((np.outer(marginals, marginals) * delta2).sum()) / (
        n_total * (n_total - 1.0)
    )
    value = 1.0 if d_expected == 0.0 else 1.0 - d_observed / d_expected
    contributing = {item for item, labels in pooled.items() if len(labels) >= 2}
    annotators = {
        rec.annotator_id
        for rec in aset.records
        if rec.round in resolved and rec.item_id in contributing
    }
    return AgreementResult(
        metric_name="krippendorff_alpha",
        value=value,
        n_items=len(contributing),
        n_annotators=len(annotators),
        rounds=resolved,
        exclusions=exclusions,
    )


def icc(
    aset: AnnotationSet,
    rounds: int | Sequence[int] | None = 1,
    model: str = "oneway_random",
) -> AgreementResult:
    """Intraclass correlation for interval-scaled labels, single rating.

    ``oneway_random`` is ICC(1,1); ``twoway_random_single`` is ICC(2,1).
    Requires a complete item x annotator grid in one round; incomplete items
    are excluded and reported.
    """
    if model not in ICC_MODELS:
        raise InvalidConfigError(f"model must be one of {ICC_MODELS}, got {model!r}")
    if aset.schema.scale_kind != "interval":
        raise NotIntervalError(
            f"icc needs an interval schema, got scale_kind {aset.schema.scale_kind!r}"
        )
    resolved = resolve_rounds(aset, rounds)
    if len(resolved) != 1:
        raise InvalidConfigError("icc operates on exactly one round")
    (rnd,) = resolved
    annotators = sorted(
        {rec.annotator_id for rec in aset.records if rec.round == rnd}
    )
    if len(annotators) < 2:
        raise DegenerateError("icc needs >= 2 annotators in the round")
    rows = []
    exclusions = []
    items_used = []
    for item in aset.items():
        labels = [aset.label(item, ann, rnd) for ann in annotators]
        if any(lbl is None for lbl in labels):
            if any(lbl is not None for lbl in labels):
                exclusions.append(f"item {item!r}: incomplete annotator coverage")
            continue
        rows.append([aset.schema.numeric_value(lbl) for lbl in labels])
        items_used.append(item)
    if len(rows) < 2:
        raise DegenerateError("icc needs >= 2 completely labelled items")
    matrix = np.array(rows, dtype=float)
    n, k = matrix.shape
    grand = matrix.mean()
    row_means = matrix.mean(axis=1)
    col_means = matrix.mean(axis=0)
    ss_rows = k * float(((row_means - grand) ** 2).sum())
    ms_rows = ss_rows / (n - 1)
    if model == "oneway_random":
        ss_within = float(((matrix - row_means[:, None]) ** 2).sum())
        ms_within = ss_within / (n * (k - 1))
        denom = ms_rows + (k - 1) * ms_within
        if denom == 0.0:
            raise InsufficientVarianceError("zero between-item and residual variance")
        value = (ms_rows - ms_within) / denom
    else:
        ss_cols = n * float(((col_means - grand) ** 2).sum())
        ms_cols = ss_cols / (k - 1)
        ss_err = float(
            ((matrix - row_means[:, None] - col_means[None, :] + grand) ** 2).sum()
        )
        ms_err = ss_err / ((n - 1) * (k - 1))
        denom = ms_rows + (k - 1) * ms_err + k * (ms_cols - ms_err) / n
        if denom == 0.0:
            raise InsufficientVarianceError("zero variance in every ANOVA component")
        value = (ms_rows - ms_err) / denom
    return AgreementResult(
        metric_name=f"icc_{model}",
        value=value,
        n_items=n,
        n_annotators=k,
        rounds=resolved,
        exclusions=tuple(exclusions),
    )


def resample_items(aset: AnnotationSet, item_ids: Sequence[str]) -> AnnotationSet:
    """Dataset restricted to ``item_ids`` with replacement.

    Repeated draws of an item are kept distinct by suffixing ``~k`` to the
    k-th duplicate, so resampled sets stay valid AnnotationSets.
    """
    by_item: dict[str, list[AnnotationRecord]] = {}
    for rec in aset.records:
        by_item.setdefault(rec.item_id, []).append(rec)
    seen: Counter = Counter()
    records: list[AnnotationRecord] = []
    for item in item_ids:
        occurrence = seen[item]
        seen[item] += 1
        new_id = item if occurrence == 0 else f"{item}~{occurrence}"
        for rec in by_item[item]:
            records.append(
                AnnotationRecord(
                    rec.task_id, new_id, rec.annotator_id, rec.round, rec.label, rec.timestamp
                )
            )
    return AnnotationSet(schema=aset.schema, records=tuple(records))


def bootstrap_ci(
    metric: Callable[[AnnotationSet], "AgreementResult | float"],
    aset: AnnotationSet,
    replicates: int = 1000,
    confidence: float = 0.95,
    seed: int | None = None,
) -> tuple[float, float]:
    """Percentile bootstrap interval for ``metric`` by item resampling.

    Each replicate draws items with replacement and derives its RNG substream
    from (seed, replicate), so results are reproducible and order-independent.
    Replicates where the metric degenerates are dropped; more than 50%
    dropped raises TooManyDegenerateError. The interval is widened, when
    needed, to bracket the full-set point estimate so that reported
    (value, ci) pairs always nest.
    """
    if seed is None:
        raise InvalidConfigError("bootstrap_ci requires an explicit seed")
    if replicates < 1:
        raise InvalidConfigError("replicates must be >= 1")
    if not 0.0 < confidence < 1.0:
        raise InvalidConfigError("confidence must lie in (0, 1)")
    point = metric(aset)
    point_value = point.value if isinstance(point, AgreementResult) else float(point)
    items = aset.items()
    values = []
    degenerate = 0
    for replicate in range(replicates):
        rng = np.random.default_rng([int(seed), replicate])
        chosen = [items[i] for i in rng.integers(0, len(items), size=len(items))]
        resampled = resample_items(aset, chosen)
        try:
            result = metric(resampled)
        except DegenerateError:
            degenerate += 1
            continue
        values.append(result.value if isinstance(result, AgreementResult) else float(result))
    if degenerate > replicates / 2:
        raise TooManyDegenerateError(
            f"{degenerate}/{replicates} bootstrap replicates were degenerate"
        )
    tail = (1.0 - confidence) / 2.0 * 100.0
    low, high = np.percentile(values, [tail, 100.0 - tail])
    return (min(float(low), point_value), max(float(high), point_value))
