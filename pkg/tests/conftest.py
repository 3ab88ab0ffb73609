"""Shared builders for the test suite."""

from hypothesis import settings

from relistab import AnnotationRecord, LabelSchema, validate_dataset

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")


def make_set(labels_by_ann, cats=("x", "y"), scale="nominal", numeric_values=None,
             task="t", round=1):
    """Single-round dataset from ``{annotator: [label-or-None per item]}``.

    Items are named i0..iN in list order; ``None`` entries are missing cells.
    """
    records = []
    for ann, labels in labels_by_ann.items():
        for i, lbl in enumerate(labels):
            if lbl is None:
                continue
            records.append(AnnotationRecord(task, f"i{i}", ann, round, lbl))
    schema = LabelSchema(task, tuple(cats), scale, numeric_values)
    return validate_dataset(records, schema)


def make_rounds(rounds_by_ann, cats=("x", "y"), scale="nominal", numeric_values=None,
                task="t", timestamps=None):
    """Multi-round dataset from ``{annotator: {round: [label-or-None per item]}}``.

    ``timestamps`` optionally maps round -> epoch seconds (same stamp for
    every record of that round).
    """
    records = []
    for ann, by_round in rounds_by_ann.items():
        for rnd, labels in by_round.items():
            ts = None if timestamps is None else timestamps.get(rnd)
            for i, lbl in enumerate(labels):
                if lbl is None:
                    continue
                records.append(AnnotationRecord(task, f"i{i}", ann, rnd, lbl, ts))
    schema = LabelSchema(task, tuple(cats), scale, numeric_values)
    return validate_dataset(records, schema)
