"""Reading and writing annotation data.

Two interchangeable container formats are supported for records — CSV with a
fixed header and JSON Lines — plus a small JSON document for the label
schema. Timestamps travel as RFC 3339 text and live in memory as POSIX epoch
seconds (UTC).
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .core import AnnotationRecord, AnnotationSet, LabelSchema, validate_dataset
from .errors import InvalidConfigError, ValidationError

CSV_FIELDS = ("task_id", "item_id", "annotator_id", "round", "label", "timestamp")


def parse_rfc3339(text: str) -> float:
    """RFC 3339 timestamp text -> POSIX epoch seconds."""
    cleaned = text.strip()
    # Python 3.10's fromisoformat rejects the Z suffix.
    if cleaned.endswith(("Z", "z")):
        cleaned = cleaned[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(cleaned)
    except ValueError as exc:
        raise ValidationError(f"bad RFC 3339 timestamp {text!r}") from exc
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.timestamp()


def format_rfc3339(epoch_seconds: float) -> str:
    """POSIX epoch seconds -> RFC 3339 text in UTC (Z suffix)."""
    moment = datetime.fromtimestamp(float(epoch_seconds), tz=timezone.utc)
    text = moment.isoformat()
    if text.endswith("+00:00"):
        text = text[:-6] + "Z"
    return text


def _parse_timestamp_field(raw: str | None) -> float | None:
    if raw is None:
        return None
    raw = raw.strip()
    if not raw:
        return None
    try:
        return float(raw)
    except ValueError:
        return parse_rfc3339(raw)


def _record_from_row(row: dict, where: str) -> AnnotationRecord:
    missing = [f for f in CSV_FIELDS[:5] if row.get(f) in (None, "")]
    if missing:
        raise ValidationError(f"{where}: missing field(s) {missing}")
    try:
        rnd = int(row["round"])
    except ValueError as exc:
        raise ValidationError(f"{where}: round {row['round']!r} is not an integer") from exc
    return AnnotationRecord(
        task_id=row["task_id"],
        item_id=row["item_id"],
        annotator_id=row["annotator_id"],
        round=rnd,
        label=row["label"],
        timestamp=_parse_timestamp_field(row.get("timestamp")),
    )


def read_annotation_records_csv(path: str | Path) -> list[AnnotationRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        required = set(CSV_FIELDS[:5])
        if not required.issubset(header):
            raise ValidationError(
                f"{path}: CSV header must contain {sorted(required)}, got {header}"
            )
        unknown = set(header) - set(CSV_FIELDS)
        if unknown:
            raise ValidationError(f"{path}: unknown CSV column(s) {sorted(unknown)}")
        for lineno, row in enumerate(reader, start=2):
            records.append(_record_from_row(row, f"{path}:{lineno}"))
    return records


def read_annotations_csv(path: str | Path, schema: LabelSchema) -> AnnotationSet:
    return validate_dataset(read_annotation_records_csv(path), schema)


def write_annotations_csv(records: Iterable[AnnotationRecord] | AnnotationSet, path: str | Path) -> None:
    if isinstance(records, AnnotationSet):
        records = records.records
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_FIELDS)
        for rec in records:
            stamp = "" if rec.timestamp is None else format_rfc3339(rec.timestamp)
            writer.writerow(
                [rec.task_id, rec.item_id, rec.annotator_id, rec.round, rec.label, stamp]
            )


def read_annotation_records_jsonl(path: str | Path) -> list[AnnotationRecord]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON") from exc
            if not isinstance(obj, dict):
                raise ValidationError(f"{path}:{lineno}: expected an object per line")
            ts = obj.get("timestamp")
            if isinstance(ts, str):
                obj = dict(obj, timestamp=parse_rfc3339(ts))
            try:
                records.append(
                    AnnotationRecord(
                        task_id=str(obj["task_id"]),
                        item_id=str(obj["item_id"]),
                        annotator_id=str(obj["annotator_id"]),
                        round=int(obj["round"]),
                        label=str(obj["label"]),
                        timestamp=None if obj.get("timestamp") is None else float(obj["timestamp"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad record: {exc}") from exc
    return records


def read_annotations_jsonl(path: str | Path, schema: LabelSchema) -> AnnotationSet:
    return validate_dataset(read_annotation_records_jsonl(path), schema)


def write_annotations_jsonl(records: Iterable[AnnotationRecord] | AnnotationSet, path: str | Path) -> None:
    if isinstance(records, AnnotationSet):
        records = records.records
    with open(path, "w", encoding="utf-8") as handle:
        for rec in records:
            obj = {
                "task_id": rec.task_id,
                "item_id": rec.item_id,
                "annotator_id": rec.annotator_id,
                "round": rec.round,
                "label": rec.label,
            }
            if rec.timestamp is not None:
                obj["timestamp"] = format_rfc3339(rec.timestamp)
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_annotation_records(path: str | Path) -> list[AnnotationRecord]:
    """Dispatch on file extension: .jsonl/.ndjson -> JSON Lines, else CSV."""
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".ndjson"):
        return read_annotation_records_jsonl(path)
    return read_annotation_records_csv(path)


RATIONALISATION_FIELDS = ("item_id", "rater_id", "label")


def read_rationalisations_csv(path: str | Path):
    """CSV with header item_id,rater_id,label -> RationalisationRecords."""
    from .association import RationalisationRecord

    records = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = tuple(reader.fieldnames or ())
        if set(header) != set(RATIONALISATION_FIELDS):
            raise ValidationError(
                f"{path}: header must be {','.join(RATIONALISATION_FIELDS)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if any(row.get(f) in (None, "") for f in RATIONALISATION_FIELDS):
                raise ValidationError(f"{path}:{lineno}: missing field(s)")
            records.append(
                RationalisationRecord(
                    item_id=row["item_id"], rater_id=row["rater_id"], label=row["label"]
                )
            )
    return records


def write_rationalisations_csv(records, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(RATIONALISATION_FIELDS)
        for rec in records:
            writer.writerow([rec.item_id, rec.rater_id, rec.label])


def load_schema(path: str | Path) -> LabelSchema:
    with open(path, encoding="utf-8") as handle:
        try:
            obj = json.load(handle)
        except json.JSONDecodeError as exc:
            raise InvalidConfigError(f"{path}: invalid JSON") from exc
    if not isinstance(obj, dict):
        raise InvalidConfigError(f"{path}: schema document must be an object")
    try:
        return LabelSchema(
            task_id=str(obj["task_id"]),
            categories=tuple(str(c) for c in obj["categories"]),
            scale_kind=str(obj.get("scale_kind", "nominal")),
            numeric_values=obj.get("numeric_values"),
        )
    except KeyError as exc:
        raise InvalidConfigError(f"{path}: schema missing key {exc.args[0]!r}") from exc


def save_schema(schema: LabelSchema, path: str | Path) -> None:
    obj: dict = {
        "task_id": schema.task_id,
        "categories": list(schema.categories),
        "scale_kind": schema.scale_kind,
    }
    if schema.numeric_values is not None:
        obj["numeric_values"] = {k: schema.numeric_values[k] for k in schema.categories
                                 if k in schema.numeric_values}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(obj, handle, indent=2, sort_keys=True)
        handle.write("\n")
