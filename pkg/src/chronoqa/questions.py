"""Question generation for the three reasoning levels.

L1 questions relate two times (shift a reference time by a year/month
offset), L2 questions ask which object was valid at a sampled reference
month, and L3 questions ask for the chronological neighbor of a pivot object
inside a fact group. Gold answers are computed symbolically from the facts;
the temporally wrong objects of the same group become the negative answer
set.

All generation is deterministic: L1 draws from a seeded stream, while L2
derives a per-group RNG from (seed, group key) so results do not depend on
worker scheduling or group order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Mapping

from .facts import FactGroup
from .scoring import normalized_key
from .templates import DIRECTIONS, TemplateTable, load_templates
from .timeline import (
    SAME,
    Offset,
    TimePoint,
    TimeRangeError,
    compare,
    format_time,
    month_index,
    parse_time,
    shift,
    time_from_month_index,
)

LEVELS = ("L1", "L2", "L3")
FUTURE_RANGE = (TimePoint(2022, 1), TimePoint(2040, 12))
MAX_YEAR_OFFSET = 10
MAX_MONTH_OFFSET = 11


class CapacityError(ValueError):
    """More unique questions were requested than the range can yield."""


@dataclass(frozen=True, slots=True)
class Question:
    """One generated QA record.

    ``answers`` holds every currently correct object (the primary gold
    first); ``negatives`` holds the temporally wrong objects of the same
    group. The two sets are disjoint under scoring normalization.
    """

    id: str
    level: str
    relation: str | None
    subject: str | None
    subject_id: str | None
    template_id: str
    question: str
    answers: tuple[str, ...]
    negatives: tuple[str, ...]
    t_ref: TimePoint | None
    neighbor_object: str | None
    split: str

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "level": self.level,
            "relation": self.relation,
            "subject": self.subject,
            "subject_id": self.subject_id,
            "template_id": self.template_id,
            "question": self.question,
            "answers": list(self.answers),
            "negatives": list(self.negatives),
            "t_ref": format_time(self.t_ref) if self.t_ref else None,
            "neighbor_object": self.neighbor_object,
            "split": self.split,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "Question":
        t_ref = record.get("t_ref")
        level = str(record["level"])
        if level not in LEVELS:
            raise ValueError(f"unknown question level {level!r}")
        return cls(
            id=str(record["id"]),
            level=level,
            relation=record.get("relation"),
            subject=record.get("subject"),
            subject_id=record.get("subject_id"),
            template_id=str(record.get("template_id", "")),
            question=str(record["question"]),
            answers=tuple(record["answers"]),
            negatives=tuple(record.get("negatives", ())),
            t_ref=parse_time(t_ref) if t_ref else None,
            neighbor_object=record.get("neighbor_object"),
            split=str(record.get("split", "train")),
        )


def _l1_combination_space(templates: TemplateTable, months: int, years: int) -> int:
    space = 0
    for template in templates.l1:
        per_direction = (MAX_YEAR_OFFSET if template.uses_years() else 1) \
            * (MAX_MONTH_OFFSET if template.uses_months() else 1)
        slots = years if template.granularity == "year" else months
        space += len(DIRECTIONS) * per_direction * slots
    return space


def _render_l1(templates: TemplateTable, template, direction: str, t: TimePoint,
               x: int, y: int, split: str, sequence: int) -> Question:
    offset = Offset(x, y, direction)
    result = shift(t, offset)
    if template.granularity == "year":
        t_text, answer = str(t.year), str(result.year)
    else:
        t_text, answer = format_time(t), format_time(result)
    return Question(
        id=f"l1-{split}-{sequence:06d}",
        level="L1",
        relation=None,
        subject=None,
        subject_id=None,
        template_id=f"{template.id}_{direction}",
        question=templates.render_l1(template, direction, x, y, t_text),
        answers=(answer,),
        negatives=(),
        t_ref=t,
        neighbor_object=None,
        split=split,
    )


def gen_l1(time_range: tuple[TimePoint, TimePoint], count: int, seed: int, *,
           split: str = "train", templates: TemplateTable | None = None) -> list[Question]:
    """Generate ``count`` unique relative-time questions.

    Uniqueness is over (template, direction, reference time, offset). Year
    templates draw a bare reference year from the range's years; the other
    templates draw a reference month. Offsets whose result would fall before
    year 1 are never emitted.
    """
    templates = templates or load_templates()
    start, end = time_range
    if end < start:
        raise ValueError(f"empty time range: {format_time(start)}..{format_time(end)}")
    index_lo, index_hi = month_index(start), month_index(end)
    months = index_hi - index_lo + 1
    years = end.year - start.year + 1
    space = _l1_combination_space(templates, months, years)
    if count > space:
        raise CapacityError(f"requested {count} questions but the range holds only {space} unique combinations")

    rng = random.Random(f"{seed}|l1|{split}")
    if count > space // 2:
        return _gen_l1_enumerated(templates, rng, index_lo, index_hi, start.year, end.year, count, split)

    seen: set[tuple] = set()
    out: list[Question] = []
    attempts = 0
    budget = max(200_000, 50 * count)
    while len(out) < count:
        attempts += 1
        if attempts > budget:
            raise CapacityError("unique-question sampling stalled; too few valid combinations in range")
        template = rng.choice(templates.l1)
        direction = rng.choice(DIRECTIONS)
        if template.granularity == "year":
            t = TimePoint(rng.randint(start.year, end.year), 1)
        else:
            t = time_from_month_index(rng.randint(index_lo, index_hi))
        x = rng.randint(1, MAX_YEAR_OFFSET) if template.uses_years() else 0
        y = rng.randint(1, MAX_MONTH_OFFSET) if template.uses_months() else 0
        key = (template.id, direction, month_index(t), x, y)
        if key in seen:
            continue
        seen.add(key)
        try:
            out.append(_render_l1(templates, template, direction, t, x, y, split, len(out)))
        except TimeRangeError:
            continue  # result fell before year 1; the key stays burned
    return out


def _gen_l1_enumerated(templates: TemplateTable, rng: random.Random, index_lo: int, index_hi: int,
                       year_lo: int, year_hi: int, count: int, split: str) -> list[Question]:
    # Dense requests enumerate the whole space instead of rejection sampling.
    combos = []
    for template in templates.l1:
        xs = range(1, MAX_YEAR_OFFSET + 1) if template.uses_years() else (0,)
        ys = range(1, MAX_MONTH_OFFSET + 1) if template.uses_months() else (0,)
        if template.granularity == "year":
            slots = [TimePoint(year, 1) for year in range(year_lo, year_hi + 1)]
        else:
            slots = [time_from_month_index(i) for i in range(index_lo, index_hi + 1)]
        for direction in DIRECTIONS:
            for t in slots:
                for x in xs:
                    for y in ys:
                        combos.append((template, direction, t, x, y))
    rng.shuffle(combos)
    out: list[Question] = []
    for template, direction, t, x, y in combos:
        if len(out) == count:
            break
        try:
            out.append(_render_l1(templates, template, direction, t, x, y, split, len(out)))
        except TimeRangeError:
            continue
    if len(out) < count:
        raise CapacityError(f"only {len(out)} of {count} requested questions are representable in range")
    return out


def gen_l1_future(count: int, seed: int, *, templates: TemplateTable | None = None) -> list[Question]:
    """The out-of-domain set: reference times drawn from 2022 to 2040."""
    return gen_l1(FUTURE_RANGE, count, seed, split="future", templates=templates)


def partition_l1(questions: list[Question], counts: Mapping[str, int], seed: int) -> dict[str, list[Question]]:
    """Randomly assign a unique question pool to splits and renumber ids."""
    total = sum(counts.values())
    if total != len(questions):
        raise ValueError(f"split counts sum to {total} but the pool has {len(questions)} questions")
    pool = list(questions)
    random.Random(f"{seed}|l1-partition").shuffle(pool)
    partitions: dict[str, list[Question]] = {}
    cursor = 0
    for name, size in counts.items():
        chunk = pool[cursor:cursor + size]
        cursor += size
        partitions[name] = [
            replace(question, split=name, id=f"l1-{name}-{i:06d}")
            for i, question in enumerate(chunk)
        ]
    return partitions


def _objects_at(group: FactGroup, t_r: TimePoint) -> tuple[list[str], list[str]]:
    """(valid objects in chronological order, invalid objects), deduplicated
    under scoring normalization. An object text valid anywhere at ``t_r`` is
    never listed as invalid."""
    valid_keys: set[str] = set()
    valid_objects: list[str] = []
    for fact in group.facts:
        if fact.interval.contains(t_r):
            key = normalized_key(fact.object)
            if key not in valid_keys:
                valid_keys.add(key)
                valid_objects.append(fact.object)
    negatives: list[str] = []
    negative_keys: set[str] = set()
    for fact in group.facts:
        key = normalized_key(fact.object)
        if key in valid_keys or key in negative_keys:
            continue
        negative_keys.add(key)
        negatives.append(fact.object)
    return valid_objects, negatives


def _l2_question(group: FactGroup, t_r: TimePoint, primary: str, question_id: str,
                 split: str, templates: TemplateTable) -> Question:
    valid_objects, negatives = _objects_at(group, t_r)
    primary_key = normalized_key(primary)
    answers = [primary] + [o for o in valid_objects if normalized_key(o) != primary_key]
    return Question(
        id=question_id,
        level="L2",
        relation=group.relation,
        subject=group.subject,
        subject_id=group.subject_id,
        template_id=f"{group.relation}_l2",
        question=templates.render_l2(group.relation, group.subject, format_time(t_r)),
        answers=tuple(answers),
        negatives=tuple(negatives),
        t_ref=t_r,
        neighbor_object=None,
        split=split,
    )


def gen_l2(group: FactGroup, seed: int, *, split: str = "train",
           templates: TemplateTable | None = None) -> list[Question]:
    """One question per fact: sample a reference month inside the fact's
    validity range and ask which object held then.

    Answers list every object valid at the sampled month (the sampled fact's
    object first); negatives are the group's objects not valid then.
    """
    templates = templates or load_templates()
    rng = random.Random(f"{seed}|l2|{group.subject_id}|{group.relation}")
    questions = []
    for j, fact in enumerate(group.facts):
        if fact.interval.end is None:
            raise ValueError("ongoing facts must be closed at a snapshot before generation")
        t_r = time_from_month_index(
            rng.randint(month_index(fact.interval.start), month_index(fact.interval.end)))
        questions.append(_l2_question(
            group, t_r, fact.object,
            f"l2-{split}-{group.subject_id}-{group.relation}-{j}", split, templates))
    return questions


def l2_question_at(group: FactGroup, t_r: TimePoint, *, split: str = "train",
                   templates: TemplateTable | None = None) -> Question:
    """Build the question asking for the group's object at an explicit month.

    The primary gold is the earliest-starting object valid at ``t_r``; there
    must be at least one.
    """
    templates = templates or load_templates()
    valid_objects, _ = _objects_at(group, t_r)
    if not valid_objects:
        raise ValueError(f"no object in the group is valid at {format_time(t_r)}")
    question_id = f"l2-{split}-{group.subject_id}-{group.relation}-at-{month_index(t_r)}"
    return _l2_question(group, t_r, valid_objects[0], question_id, split, templates)


def gen_l3(group: FactGroup, seed: int | None = None, *, split: str = "train",
           templates: TemplateTable | None = None) -> list[Question]:
    """Before/after questions for chronologically adjacent fact pairs.

    Extraction is deterministic (``seed`` is accepted for generator API
    symmetry). A pair is skipped when its two objects normalize to the same
    string or start in the same month, and a direction is skipped when its
    pivot text also occurs earlier in the group, so every emitted question
    has exactly one defensible answer.
    """
    templates = templates or load_templates()
    facts = group.facts
    keys = [normalized_key(fact.object) for fact in facts]
    first_occurrence: dict[str, int] = {}
    for i, key in enumerate(keys):
        first_occurrence.setdefault(key, i)

    def build(i: int, direction: str, pivot: str, gold_index: int) -> Question:
        gold_key = keys[gold_index]
        negatives: list[str] = []
        seen: set[str] = set()
        for fact, key in zip(facts, keys):
            if key == gold_key or key in seen:
                continue
            seen.add(key)
            negatives.append(fact.object)
        return Question(
            id=f"l3-{split}-{group.subject_id}-{group.relation}-{i}-{direction}",
            level="L3",
            relation=group.relation,
            subject=group.subject,
            subject_id=group.subject_id,
            template_id=f"{group.relation}_l3_{direction}",
            question=templates.render_l3(group.relation, direction, group.subject, pivot),
            answers=(facts[gold_index].object,),
            negatives=tuple(negatives),
            t_ref=None,
            neighbor_object=pivot,
            split=split,
        )

    questions = []
    for i in range(len(facts) - 1):
        if keys[i] == keys[i + 1]:
            continue
        if compare(facts[i].interval.start, facts[i + 1].interval.start) == SAME:
            continue
        if first_occurrence[keys[i]] == i:
            questions.append(build(i, "after", facts[i].object, i + 1))
        if first_occurrence[keys[i + 1]] == i + 1:
            questions.append(build(i, "before", facts[i + 1].object, i))
    return questions
