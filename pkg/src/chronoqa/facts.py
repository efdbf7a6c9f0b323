"""Temporal fact ingestion, grouping, filtering, and splitting.

Facts arrive as JSONL quintuplet rows (subject, relation, object plus a
validity range) and are validated against the closed relation set of the
template table. Groups share (subject_id, relation), are chronologically
sorted, and only survive with three or more facts; each relation keeps at
most a fixed number of subjects, subsampled by seeded shuffle.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .templates import load_templates
from .timeline import TimeInterval, TimePoint, month_index, parse_time

DEFAULT_SNAPSHOT = TimePoint(2022, 11)  # KB dump month used to close ongoing facts
MAX_SUBJECTS_PER_RELATION = 2000
MIN_FACTS_PER_GROUP = 3

_REQUIRED_FIELDS = ("subject", "subject_id", "relation", "object", "object_id", "start")


class FactValidationError(ValueError):
    """A fact row failed validation while ingesting in strict mode."""


@dataclass(frozen=True, slots=True)
class Diagnostic:
    """One rejected input row."""

    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass(frozen=True, slots=True)
class Fact:
    """One time-scoped KB statement: subject held `object` over `interval`."""

    subject: str
    subject_id: str
    relation: str
    object: str
    object_id: str
    interval: TimeInterval

    def sort_key(self) -> tuple[int, int, str]:
        end = self.interval.end
        return (month_index(self.interval.start), month_index(end) if end else 1 << 30, self.object)


@dataclass(frozen=True, slots=True)
class FactGroup:
    """All facts sharing (subject_id, relation), chronologically sorted."""

    subject: str
    subject_id: str
    relation: str
    facts: tuple[Fact, ...]

    @property
    def key(self) -> tuple[str, str]:
        return (self.subject_id, self.relation)


@dataclass(frozen=True, slots=True)
class FactStore:
    """Validated facts plus the diagnostics produced while ingesting."""

    facts: tuple[Fact, ...]
    diagnostics: tuple[Diagnostic, ...]
    snapshot: TimePoint
    duplicates_dropped: int = 0


def _validate_row(row: object, relation_codes: frozenset[str], snapshot: TimePoint) -> Fact:
    if not isinstance(row, dict):
        raise ValueError(f"expected a JSON object, got {type(row).__name__}")
    for field in _REQUIRED_FIELDS:
        value = row.get(field)
        if not isinstance(value, str) or not value.strip():
            raise ValueError(f"missing or empty field {field!r}")
    relation = row["relation"]
    if relation not in relation_codes:
        raise ValueError(f"unsupported relation {relation!r}")
    start = parse_time(row["start"], bare_year_month=1)
    raw_end = row.get("end")
    if raw_end is None:
        end = snapshot
        if end < start:
            raise ValueError(f"ongoing fact starts {row['start']!r}, after the snapshot month")
    elif isinstance(raw_end, str) and raw_end.strip():
        end = parse_time(raw_end, bare_year_month=12)
        if end < start:
            raise ValueError(f"start {row['start']!r} is after end {raw_end!r}")
    else:
        raise ValueError("field 'end' must be a time string or null")
    return Fact(
        subject=row["subject"],
        subject_id=row["subject_id"],
        relation=relation,
        object=row["object"],
        object_id=row["object_id"],
        interval=TimeInterval(start, end),
    )


def ingest(rows: Iterable, *, snapshot: TimePoint = DEFAULT_SNAPSHOT,
           relation_codes: frozenset[str] | None = None, strict: bool = False) -> FactStore:
    """Validate quintuplet rows into a store.

    ``rows`` yields dicts, or (line_number, dict) pairs when the caller knows
    file positions. Bad rows raise in strict mode, otherwise they are skipped
    and reported. Rows identical in (subject_id, relation, object, interval)
    are deduplicated.
    """
    if relation_codes is None:
        relation_codes = load_templates().relation_codes
    facts: list[Fact] = []
    diagnostics: list[Diagnostic] = []
    seen: set[tuple] = set()
    duplicates = 0
    for position, item in enumerate(rows, start=1):
        if isinstance(item, tuple):
            line, row = item
        else:
            line, row = position, item
        try:
            fact = _validate_row(row, relation_codes, snapshot)
        except ValueError as exc:
            if strict:
                raise FactValidationError(f"line {line}: {exc}") from exc
            diagnostics.append(Diagnostic(line, str(exc)))
            continue
        key = (fact.subject_id, fact.relation, fact.object, fact.interval.start, fact.interval.end)
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        facts.append(fact)
    return FactStore(tuple(facts), tuple(diagnostics), snapshot, duplicates)


def _iter_file_rows(path: str) -> Iterator[tuple[int, object]]:
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                yield line_no, exc
                continue
            if isinstance(obj, dict) and "_meta" in obj and len(obj) == 1:
                continue
            yield line_no, obj


def load_fact_file(path: str, *, snapshot: TimePoint = DEFAULT_SNAPSHOT,
                   relation_codes: frozenset[str] | None = None, strict: bool = False) -> FactStore:
    """Ingest a JSONL fact file, reporting malformed lines by number."""
    rows: list[tuple[int, object]] = []
    json_diagnostics: list[Diagnostic] = []
    for line_no, obj in _iter_file_rows(path):
        if isinstance(obj, json.JSONDecodeError):
            if strict:
                raise FactValidationError(f"line {line_no}: invalid JSON: {obj.msg}")
            json_diagnostics.append(Diagnostic(line_no, f"invalid JSON: {obj.msg}"))
            continue
        rows.append((line_no, obj))
    store = ingest(rows, snapshot=snapshot, relation_codes=relation_codes, strict=strict)
    diagnostics = tuple(sorted((*json_diagnostics, *store.diagnostics), key=lambda d: d.line))
    return FactStore(store.facts, diagnostics, store.snapshot, store.duplicates_dropped)


def build_groups(store: FactStore, seed: int = 0, *,
                 max_subjects_per_relation: int = MAX_SUBJECTS_PER_RELATION,
                 min_facts: int = MIN_FACTS_PER_GROUP) -> list[FactGroup]:
    """Group, sort, filter small groups, and cap subjects per relation.

    Deterministic under ``seed`` and insensitive to input row order.
    """
    by_key: dict[tuple[str, str], list[Fact]] = {}
    for fact in store.facts:
        by_key.setdefault((fact.subject_id, fact.relation), []).append(fact)

    surviving: dict[tuple[str, str], FactGroup] = {}
    for (subject_id, relation), group_facts in by_key.items():
        if len(group_facts) < min_facts:
            continue
        ordered = tuple(sorted(group_facts, key=Fact.sort_key))
        surviving[(subject_id, relation)] = FactGroup(
            subject=ordered[0].subject,
            subject_id=subject_id,
            relation=relation,
            facts=ordered,
        )

    kept_subjects: dict[str, set[str]] = {}
    relations = sorted({relation for _, relation in surviving})
    for relation in relations:
        subjects = sorted({sid for (sid, rel) in surviving if rel == relation})
        if len(subjects) > max_subjects_per_relation:
            rng = random.Random(f"{seed}|cap|{relation}")
            rng.shuffle(subjects)
            subjects = subjects[:max_subjects_per_relation]
        kept_subjects[relation] = set(subjects)

    groups = [
        group for (subject_id, relation), group in surviving.items()
        if subject_id in kept_subjects[relation]
    ]
    groups.sort(key=lambda g: (g.relation, g.subject_id))
    return groups


def split_subjects(groups: Iterable[FactGroup], *, counts: Mapping[str, int] | None = None,
                   ratios: Mapping[str, float] | None = None, seed: int = 0) -> dict[str, list[FactGroup]]:
    """Partition groups into subject-disjoint splits.

    Exactly one of ``counts`` (absolute subjects per split) or ``ratios``
    (fractions of the available subjects; leftovers go to the first split)
    must be given. A subject lands in exactly one split; with ``counts``,
    subjects beyond the requested totals are dropped.
    """
    if (counts is None) == (ratios is None):
        raise ValueError("give exactly one of counts or ratios")
    groups = list(groups)
    subjects = sorted({g.subject_id for g in groups})
    rng = random.Random(f"{seed}|split")
    rng.shuffle(subjects)

    if counts is not None:
        sizes = dict(counts)
        total = sum(sizes.values())
        if total > len(subjects):
            raise ValueError(f"requested {total} subjects but only {len(subjects)} available")
    else:
        assert ratios is not None
        if any(r < 0 for r in ratios.values()) or sum(ratios.values()) > 1.0 + 1e-9:
            raise ValueError("ratios must be non-negative and sum to at most 1")
        sizes = {name: int(len(subjects) * r) for name, r in ratios.items()}
        first = next(iter(sizes))
        sizes[first] += len(subjects) - sum(sizes.values())

    assignment: dict[str, str] = {}
    cursor = 0
    for name, size in sizes.items():
        for subject_id in subjects[cursor:cursor + size]:
            assignment[subject_id] = name
        cursor += size

    partitions: dict[str, list[FactGroup]] = {name: [] for name in sizes}
    for group in groups:
        name = assignment.get(group.subject_id)
        if name is not None:
            partitions[name].append(group)
    for part in partitions.values():
        part.sort(key=lambda g: (g.relation, g.subject_id))
    return partitions


def group_stats(groups: Iterable[FactGroup]) -> dict:
    """Table-style structural counts for a set of groups."""
    groups = list(groups)
    subjects = {g.subject_id for g in groups}
    facts = sum(len(g.facts) for g in groups)
    per_relation: dict[str, dict[str, int]] = {}
    for group in groups:
        entry = per_relation.setdefault(group.relation, {"groups": 0, "facts": 0})
        entry["groups"] += 1
        entry["facts"] += len(group.facts)
    return {
        "groups": len(groups),
        "subjects": len(subjects),
        "facts": facts,
        "facts_per_subject": round(facts / len(subjects), 2) if subjects else None,
        "per_relation": dict(sorted(per_relation.items())),
    }
