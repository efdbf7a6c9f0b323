"""Symbolic solver for generated questions.

The solver works from structured facts only: L1 questions are parsed back
into (reference time, offset) and answered by calendar arithmetic, L2 by an
interval containment scan, and L3 by chronological adjacency. Every answer
carries a machine-readable rationale that :func:`replay` re-executes, so a
trace can be audited independently of the solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .facts import FactGroup
from .questions import Question
from .scoring import normalized_key
from .templates import TemplateTable, load_templates
from .timeline import (
    AFTER,
    BEFORE,
    Offset,
    TimePoint,
    TimeParseError,
    TimeRangeError,
    format_time,
    parse_time,
    shift,
)


class OracleError(ValueError):
    """The solver could not interpret a question or locate its facts."""


@dataclass(frozen=True)
class OracleAnswer:
    """Ranked answer texts plus the trace that produced them.

    ``answers`` is empty when no fact satisfies the question ("no valid
    answer" is an explicit result, never a crash).
    """

    answers: tuple[str, ...]
    rationale: dict = field(default_factory=dict)

    @property
    def no_valid_answer(self) -> bool:
        return not self.answers


def solve_l1(question: Question, templates: TemplateTable | None = None) -> OracleAnswer:
    """Answer a relative-time question from its surface form."""
    templates = templates or load_templates()
    matchers = templates.l1_matchers()
    candidates = [m for m in matchers if m.template_id == question.template_id] or matchers
    for matcher in candidates:
        match = matcher.pattern.match(question.question)
        if match is None:
            continue
        groups = match.groupdict()
        years = int(groups["x"]) if "x" in groups else (matcher.fixed_x or 0)
        months = int(groups["y"]) if "y" in groups else 0
        t_text = groups["t"]
        try:
            if matcher.granularity == "year":
                if not t_text.isdigit():
                    raise OracleError(f"expected a bare year, got {t_text!r}")
                t = TimePoint(int(t_text), 1)
            else:
                if len(t_text.split()) != 2:
                    raise OracleError(f"expected 'Mon YYYY', got {t_text!r}")
                t = parse_time(t_text)
            result = shift(t, Offset(years, months, matcher.direction))
        except (TimeParseError, TimeRangeError, ValueError) as exc:
            raise OracleError(f"malformed question {question.id!r}: {exc}") from exc
        answer = str(result.year) if matcher.granularity == "year" else format_time(result)
        rationale = {
            "op": "shift",
            "template_id": matcher.template_id,
            "granularity": matcher.granularity,
            "t": t_text,
            "years": years,
            "months": months,
            "direction": matcher.direction,
        }
        return OracleAnswer((answer,), rationale)
    raise OracleError(f"question {question.id!r} matches no relative-time template: {question.question!r}")


def _chronological_indices(group: FactGroup) -> list[int]:
    # Groups from build_groups are already sorted; sorting again makes the
    # solver insensitive to the fact order it is handed.
    return sorted(range(len(group.facts)), key=lambda i: group.facts[i].sort_key())


def solve_l2(group: FactGroup, t_r: TimePoint) -> OracleAnswer:
    """All objects valid at the reference month, ordered by interval start.

    The result does not depend on the order the group's facts arrive in.
    """
    checks = []
    matched = []
    answers: list[str] = []
    seen: set[str] = set()
    for i in _chronological_indices(group):
        fact = group.facts[i]
        inside = fact.interval.contains(t_r)
        checks.append({
            "fact": i,
            "object": fact.object,
            "start": format_time(fact.interval.start),
            "end": format_time(fact.interval.end) if fact.interval.end else None,
            "contains": inside,
        })
        if inside:
            matched.append(i)
            key = normalized_key(fact.object)
            if key not in seen:
                seen.add(key)
                answers.append(fact.object)
    rationale = {"op": "interval_scan", "t_r": format_time(t_r), "checks": checks, "matched": matched}
    if not matched:
        rationale["no_valid_answer"] = True
    return OracleAnswer(tuple(answers), rationale)


def solve_l3(group: FactGroup, neighbor_object: str, direction: str) -> OracleAnswer:
    """The chronologically adjacent object next to the pivot.

    When the pivot text occurs more than once, its earliest occurrence is
    used. A pivot at the group boundary yields "no valid answer".
    """
    if direction not in (BEFORE, AFTER):
        raise OracleError(f"direction must be 'before' or 'after', got {direction!r}")
    target_key = normalized_key(neighbor_object)
    order = _chronological_indices(group)
    position = next((p for p, i in enumerate(order)
                     if normalized_key(group.facts[i].object) == target_key), None)
    if position is None:
        raise OracleError(f"pivot object {neighbor_object!r} does not occur in the group")
    answer_position = position + 1 if direction == AFTER else position - 1
    rationale = {"op": "adjacent_fact", "pivot_index": order[position], "direction": direction}
    if 0 <= answer_position < len(order):
        answer_index = order[answer_position]
        rationale["answer_index"] = answer_index
        return OracleAnswer((group.facts[answer_index].object,), rationale)
    rationale["answer_index"] = None
    rationale["no_valid_answer"] = True
    return OracleAnswer((), rationale)


def index_groups(groups: Iterable[FactGroup]) -> dict[tuple[str, str], FactGroup]:
    """Index groups by (subject_id, relation) with a (subject name, relation)
    fallback for question files that lack subject ids."""
    index: dict[tuple[str, str], FactGroup] = {}
    for group in groups:
        index[(group.subject_id, group.relation)] = group
        index.setdefault((group.subject, group.relation), group)
    return index


def _resolve_group(question: Question, index: Mapping[tuple[str, str], FactGroup] | None) -> FactGroup:
    if index is None:
        raise OracleError("structured facts are required to solve L2/L3 questions")
    if question.relation is None:
        raise OracleError(f"question {question.id!r} names no relation")
    for subject_key in (question.subject_id, question.subject):
        if subject_key and (subject_key, question.relation) in index:
            return index[(subject_key, question.relation)]
    raise OracleError(f"no fact group for subject {question.subject!r} relation {question.relation!r}")


def _l3_direction(question: Question) -> str:
    if question.template_id.endswith("_before"):
        return BEFORE
    if question.template_id.endswith("_after"):
        return AFTER
    raise OracleError(f"cannot determine before/after direction of question {question.id!r}")


def solve(question: Question, groups: Mapping[tuple[str, str], FactGroup] | None = None,
          templates: TemplateTable | None = None) -> OracleAnswer:
    """Dispatch a question of any level to its solver."""
    if question.level == "L1":
        return solve_l1(question, templates)
    if question.level == "L2":
        if question.t_ref is None:
            raise OracleError(f"L2 question {question.id!r} has no reference time")
        return solve_l2(_resolve_group(question, groups), question.t_ref)
    if question.level == "L3":
        if not question.neighbor_object:
            raise OracleError(f"L3 question {question.id!r} has no pivot object")
        return solve_l3(_resolve_group(question, groups), question.neighbor_object, _l3_direction(question))
    raise OracleError(f"unknown question level {question.level!r}")


def replay(answer: OracleAnswer, group: FactGroup | None = None) -> tuple[str, ...]:
    """Re-execute a rationale trace and return the answers it implies."""
    trace = answer.rationale
    op = trace.get("op")
    if op == "shift":
        if trace["granularity"] == "year":
            t = TimePoint(int(trace["t"]), 1)
        else:
            t = parse_time(trace["t"])
        result = shift(t, Offset(trace["years"], trace["months"], trace["direction"]))
        return (str(result.year) if trace["granularity"] == "year" else format_time(result),)
    if group is None:
        raise OracleError(f"replaying a {op!r} trace requires the fact group")
    if op == "interval_scan":
        answers: list[str] = []
        seen: set[str] = set()
        for i in trace["matched"]:
            key = normalized_key(group.facts[i].object)
            if key not in seen:
                seen.add(key)
                answers.append(group.facts[i].object)
        return tuple(answers)
    if op == "adjacent_fact":
        index = trace.get("answer_index")
        return () if index is None else (group.facts[index].object,)
    raise OracleError(f"unknown rationale op {op!r}")
