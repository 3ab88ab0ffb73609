"""Validated data model for round-tagged annotations.

The central object is :class:`AnnotationSet`: an immutable, indexed
collection of ``(item, annotator, round) -> label`` records against a
:class:`LabelSchema`. Stability analyses consume :class:`RepeatPair` objects
built from it; Krippendorff-style reliability consumes the coincidence
matrix.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateError,
    DuplicateCellError,
    InvalidConfigError,
    NoRepeatsError,
    SchemaMismatchError,
    UnknownLabelError,
    ValidationError,
)

SCALE_KINDS = ("nominal", "ordinal", "interval")
PAIRING_POLICIES = ("consecutive", "first_last", "all_pairs")


def normalize_label(label: str) -> str:
    """Canonical label form: Unicode NFC, surrounding whitespace trimmed."""
    return unicodedata.normalize("NFC", str(label)).strip()


@dataclass(frozen=True)
class LabelSchema:
    """Label space for one annotation task.

    ``categories`` is an ordered sequence of distinct names; for ordinal
    scales the sequence order is the rank order. Interval scales must map
    every category to a number via ``numeric_values``.
    """

    task_id: str
    categories: tuple[str, ...]
    scale_kind: str = "nominal"
    numeric_values: Mapping[str, float] | None = None

    def __post_init__(self):
        cats = tuple(normalize_label(c) for c in self.categories)
        object.__setattr__(self, "categories", cats)
        if len(cats) < 2:
            raise InvalidConfigError("schema needs at least 2 categories")
        if any(not c for c in cats):
            raise InvalidConfigError("categories must be non-empty strings")
        if len(set(cats)) != len(cats):
            raise InvalidConfigError("categories must be unique")
        if self.scale_kind not in SCALE_KINDS:
            raise InvalidConfigError(
                f"scale_kind must be one of {SCALE_KINDS}, got {self.scale_kind!r}"
            )
        if self.scale_kind == "interval":
            values = self.numeric_values or {}
            missing = [c for c in cats if c not in values]
            if missing:
                raise InvalidConfigError(
                    f"interval schema lacks numeric_values for {missing}"
                )
            object.__setattr__(
                self,
                "numeric_values",
                {normalize_label(k): float(v) for k, v in values.items()},
            )
        elif self.numeric_values is not None:
            object.__setattr__(
                self,
                "numeric_values",
                {normalize_label(k): float(v) for k, v in self.numeric_values.items()},
            )

    def category_index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.categories)}

    def numeric_value(self, label: str) -> float:
        if self.numeric_values is None or label not in self.numeric_values:
            raise InvalidConfigError(f"no numeric value for category {label!r}")
        return self.numeric_values[label]


@dataclass(frozen=True)
class AnnotationRecord:
    """One label given by one annotator to one item in one round."""

    task_id: str
    item_id: str
    annotator_id: str
    round: int
    label: str
    timestamp: float | None = None


@dataclass(frozen=True)
class RepeatPair:
    """One annotator's labels for the same item from two rounds."""

    item_id: str
    annotator_id: str
    first_label: str
    second_label: str
    first_round: int
    second_round: int
    interval_seconds: float | None = None

    @property
    def consistent(self) -> bool:
        return self.first_label == self.second_label


@dataclass(frozen=True)
class AnnotationSet:
    """Immutable, validated collection of annotation records.

    Construct through :func:`validate_dataset`; the constructor assumes the
    invariants already hold and only builds the lookup structures.
    """

    schema: LabelSchema
    records: tuple[AnnotationRecord, ...]
    _index: dict = field(repr=False, compare=False, default_factory=dict)
    _by_item_round: dict = field(repr=False, compare=False, default_factory=dict)
    _by_cell: dict = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        index = {}
        by_item_round = {}
        by_cell = {}
        for rec in self.records:
            key = (rec.item_id, rec.annotator_id, rec.round)
            index[key] = rec
            by_item_round.setdefault((rec.item_id, rec.round), []).append(
                (rec.annotator_id, rec.label)
            )
            by_cell.setdefault((rec.item_id, rec.annotator_id), []).append(
                (rec.round, rec.label, rec.timestamp)
            )
        for entries in by_item_round.values():
            entries.sort()
        for entries in by_cell.values():
            entries.sort()
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_by_item_round", by_item_round)
        object.__setattr__(self, "_by_cell", by_cell)

    def __len__(self) -> int:
        return len(self.records)

    def items(self) -> tuple[str, ...]:
        return tuple(sorted({r.item_id for r in self.records}))

    def annotators(self) -> tuple[str, ...]:
        return tuple(sorted({r.annotator_id for r in self.records}))

    def rounds(self) -> tuple[int, ...]:
        return tuple(sorted({r.round for r in self.records}))

    def label(self, item_id: str, annotator_id: str, round: int) -> str | None:
        rec = self._index.get((item_id, annotator_id, round))
        return None if rec is None else rec.label

    def unit_labels(self, rounds: Sequence[int]) -> dict[str, list[str]]:
        """Labels pooled per item over the given rounds (annotator-sorted)."""
        pooled: dict[str, list[str]] = {}
        for rnd in rounds:
            for (item, r), entries in self._by_item_round.items():
                if r == rnd:
                    pooled.setdefault(item, []).extend(lbl for _, lbl in entries)
        return pooled

    def round_units(self, rounds: Sequence[int]) -> dict[tuple[str, int], list[tuple[str, str]]]:
        """(item, round) -> [(annotator, label)] for the given rounds."""
        wanted = set(rounds)
        return {
            key: list(entries)
            for key, entries in self._by_item_round.items()
            if key[1] in wanted
        }

    def cell_history(self, item_id: str, annotator_id: str) -> list[tuple[int, str, float | None]]:
        return list(self._by_cell.get((item_id, annotator_id), ()))

    def cells(self) -> dict[tuple[str, str], list[tuple[int, str, float | None]]]:
        return {key: list(v) for key, v in self._by_cell.items()}


def _coerce_record(raw, schema: LabelSchema) -> AnnotationRecord:
    if isinstance(raw, AnnotationRecord):
        rec = raw
    elif isinstance(raw, Mapping):
        try:
            rec = AnnotationRecord(
                task_id=str(raw["task_id"]),
                item_id=str(raw["item_id"]),
                annotator_id=str(raw["annotator_id"]),
                round=int(raw["round"]),
                label=str(raw["label"]),
                timestamp=None if raw.get("timestamp") in (None, "") else float(raw["timestamp"]),
            )
        except KeyError as exc:
            raise ValidationError(f"record missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"unparseable record {raw!r}: {exc}") from exc
    else:
        raise ValidationError(f"unsupported record type {type(raw).__name__}")
    label = normalize_label(rec.label)
    if label != rec.label:
        rec = AnnotationRecord(
            rec.task_id, rec.item_id, rec.annotator_id, rec.round, label, rec.timestamp
        )
    return rec


def validate_dataset(records: Iterable, schema: LabelSchema) -> AnnotationSet:
    """Check all invariants and build an :class:`AnnotationSet`.

    Raises :class:`DuplicateCellError`, :class:`UnknownLabelError` or
    :class:`SchemaMismatchError` on the first violating record; the record
    count is preserved on success.
    """
    categories = set(schema.categories)
    seen: set[tuple[str, str, int]] = set()
    validated: list[AnnotationRecord] = []
    for raw in records:
        rec = _coerce_record(raw, schema)
        if rec.task_id != schema.task_id:
            raise SchemaMismatchError(
                f"record task_id {rec.task_id!r} != schema task_id {schema.task_id!r}"
            )
        if rec.label not in categories:
            raise UnknownLabelError(
                f"label {rec.label!r} not in schema categories for item {rec.item_id!r}"
            )
        if rec.round < 1:
            raise ValidationError(f"round must be >= 1, got {rec.round}")
        key = (rec.item_id, rec.annotator_id, rec.round)
        if key in seen:
            raise DuplicateCellError(f"duplicate record for (item, annotator, round) {key}")
        seen.add(key)
        validated.append(rec)
    return AnnotationSet(schema=schema, records=tuple(validated))


def resolve_rounds(aset: AnnotationSet, rounds: int | Sequence[int] | None) -> tuple[int, ...]:
    """Normalise a round selector: None means every round in the set."""
    if rounds is None:
        resolved = aset.rounds()
    elif isinstance(rounds, int):
        resolved = (rounds,)
    else:
        resolved = tuple(sorted(set(int(r) for r in rounds)))
    if not resolved:
        raise DegenerateError("round selector resolves to no rounds")
    return resolved


def build_repeat_pairs(aset: AnnotationSet, pairing: str = "consecutive") -> list[RepeatPair]:
    """One RepeatPair per (item, annotator, qualifying round pair).

    With exactly two rounds all pairing policies coincide. Intervals come
    from timestamps when both ends carry one.
    """
    if pairing not in PAIRING_POLICIES:
        raise InvalidConfigError(f"pairing must be one of {PAIRING_POLICIES}, got {pairing!r}")
    pairs: list[RepeatPair] = []
    for (item, annotator), history in sorted(aset.cells().items()):
        if len(history) < 2:
            continue
        if pairing == "consecutive":
            combos = list(zip(history, history[1:]))
        elif pairing == "first_last":
            combos = [(history[0], history[-1])]
        else:
            combos = [
                (history[i], history[j])
                for i in range(len(history))
                for j in range(i + 1, len(history))
            ]
        for (r1, l1, t1), (r2, l2, t2) in combos:
            interval = None
            if t1 is not None and t2 is not None:
                interval = t2 - t1
                if interval < 0:
                    raise ValidationError(
                        f"round {r2} predates round {r1} for ({item!r}, {annotator!r})"
                    )
            pairs.append(
                RepeatPair(
                    item_id=item,
                    annotator_id=annotator,
                    first_label=l1,
                    second_label=l2,
                    first_round=r1,
                    second_round=r2,
                    interval_seconds=interval,
                )
            )
    if not pairs:
        raise NoRepeatsError("no annotator labelled any item in >= 2 rounds")
    return pairs


def coincidence_counts(
    aset: AnnotationSet, rounds: int | Sequence[int] | None = 1
) -> np.ndarray:
    """Krippendorff coincidence matrix over the selected rounds.

    Each item with m >= 2 labels contributes 1/(m-1) per ordered label pair;
    rows/columns follow ``schema.categories``.
    """
    resolved = resolve_rounds(aset, rounds)
    cat_index = aset.schema.category_index()
    k = len(aset.schema.categories)
    matrix = np.zeros((k, k), dtype=float)
    contributed = False
    for labels in aset.unit_labels(resolved).values():
        m = len(labels)
        if m < 2:
            continue
        contributed = True
        counts = np.zeros(k, dtype=float)
        for lbl in labels:
            counts[cat_index[lbl]] += 1
        pair_counts = np.outer(counts, counts)
        np.fill_diagonal(pair_counts, counts * (counts - 1))
        matrix += pair_counts / (m - 1)
    if not contributed:
        raise DegenerateError("no item has >= 2 labels in the selected rounds")
    return matrix
