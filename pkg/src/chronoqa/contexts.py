"""Context rendering for the three evaluation settings, and span masking.

A rendered example pairs a prompt with its gold target. The closed-book
prompt is the bare question; the open-book prompt appends a supplied
article; the structured-facts prompt appends the subject's fact group, one
line per fact, in a seeded random order so consumers cannot learn positional
shortcuts.

Span masking turns an annotated document into an (input, target) pair:
a sampled share of its entity/temporal spans is replaced with sequential
sentinels, and the target lists each sentinel with the original span so the
document is exactly reconstructable.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .facts import DEFAULT_SNAPSHOT, FactGroup
from .questions import Question
from .templates import TemplateTable, load_templates
from .timeline import TimePoint, format_time

SETTINGS = ("CBQA", "OBQA", "ReasonQA")
SPAN_KINDS = ("entity", "temporal")
DEFAULT_SENTINEL_PATTERN = "<mask_{k}>"

# Bump when the prompt wording below changes; artifacts record it so mixed
# datasets are detectable at evaluation time.
RENDER_FORMAT = 1


class RenderError(ValueError):
    """A required context (facts or article) was missing or malformed."""


@dataclass(frozen=True, slots=True)
class RenderedExample:
    id: str
    setting: str
    prompt: str
    target: str

    def to_record(self) -> dict:
        return {"id": self.id, "setting": self.setting, "prompt": self.prompt, "target": self.target}


@dataclass(frozen=True, slots=True)
class AnnotatedDocument:
    """Text with character-offset entity/temporal spans.

    Spans must be in bounds, non-overlapping, and sorted by start offset.
    """

    doc_id: str
    text: str
    spans: tuple[tuple[int, int, str], ...]

    def __post_init__(self) -> None:
        previous_end = 0
        for start, end, kind in self.spans:
            if kind not in SPAN_KINDS:
                raise ValueError(f"document {self.doc_id!r}: unknown span kind {kind!r}")
            if not 0 <= start < end <= len(self.text):
                raise ValueError(f"document {self.doc_id!r}: span ({start}, {end}) out of bounds")
            if start < previous_end:
                raise ValueError(f"document {self.doc_id!r}: spans overlap or are unsorted at offset {start}")
            previous_end = end

    @classmethod
    def from_record(cls, record: Mapping) -> "AnnotatedDocument":
        return cls(
            doc_id=str(record["doc_id"]),
            text=str(record["text"]),
            spans=tuple((int(s), int(e), str(k)) for s, e, k in record["spans"]),
        )


def canonical_setting(name: str) -> str:
    for setting in SETTINGS:
        if name.lower() == setting.lower():
            return setting
    raise RenderError(f"unknown setting {name!r}; expected one of {', '.join(SETTINGS)}")


def render(question: Question, group: FactGroup | None = None, article: str | None = None, *,
           setting: str, seed: int = 0, templates: TemplateTable | None = None,
           snapshot: TimePoint = DEFAULT_SNAPSHOT) -> RenderedExample:
    """Build the prompt/target pair for one question in one setting."""
    setting = canonical_setting(setting)
    if setting == "CBQA":
        prompt = question.question
    elif setting == "OBQA":
        if article is None:
            raise RenderError(f"question {question.id!r}: the open-book setting requires an article")
        prompt = f"{question.question}\n{article}"
    else:
        if group is None:
            raise RenderError(f"question {question.id!r}: the structured-facts setting requires a fact group")
        templates = templates or load_templates()
        lines = []
        for fact in group.facts:
            end = fact.interval.end if fact.interval.end is not None else snapshot
            lines.append(f"{fact.object} from {format_time(fact.interval.start)} to {format_time(end)}.")
        random.Random(f"{seed}|render|{question.id}").shuffle(lines)
        header = f"{group.subject} {templates.relation(group.relation).phrase}:"
        prompt = "\n".join([question.question, header, *lines])
    return RenderedExample(id=question.id, setting=setting, prompt=prompt, target=question.answers[0])


def _sentinel_parts(sentinel_pattern: str) -> tuple[str, str]:
    parts = sentinel_pattern.split("{k}")
    if len(parts) != 2:
        raise ValueError(f"sentinel pattern must contain '{{k}}' exactly once, got {sentinel_pattern!r}")
    return parts[0], parts[1]


def mask_spans(doc: AnnotatedDocument, ratio: float, seed: int = 0,
               sentinel_pattern: str = DEFAULT_SENTINEL_PATTERN) -> tuple[str, str]:
    """Mask ceil(ratio * span_count) spans; returns (masked_text, target).

    Sentinels are numbered in document order; the target is the
    concatenation of each sentinel followed by the span it replaced, so
    :func:`unmask` recovers the original text exactly.
    """
    if not 0 < ratio <= 1:
        raise ValueError(f"mask ratio must be in (0, 1], got {ratio}")
    _sentinel_parts(sentinel_pattern)
    if not doc.spans:
        raise ValueError(f"document {doc.doc_id!r} has no spans to mask")
    span_count = len(doc.spans)
    masked_count = math.ceil(ratio * span_count)
    rng = random.Random(f"{seed}|mask|{doc.doc_id}")
    chosen = sorted(rng.sample(range(span_count), masked_count))

    masked_pieces = []
    target_pieces = []
    cursor = 0
    for rank, span_index in enumerate(chosen):
        start, end, _ = doc.spans[span_index]
        sentinel = sentinel_pattern.format(k=rank)
        masked_pieces.append(doc.text[cursor:start])
        masked_pieces.append(sentinel)
        target_pieces.append(sentinel)
        target_pieces.append(doc.text[start:end])
        cursor = end
    masked_pieces.append(doc.text[cursor:])
    return "".join(masked_pieces), "".join(target_pieces)


def unmask(masked_text: str, target: str, sentinel_pattern: str = DEFAULT_SENTINEL_PATTERN) -> str:
    """Apply a masking target back onto the masked text."""
    prefix, suffix = _sentinel_parts(sentinel_pattern)
    pattern = re.compile(re.escape(prefix) + r"(\d+)" + re.escape(suffix))
    parts = pattern.split(target)
    if parts and parts[0]:
        raise ValueError("target does not start with a sentinel")
    spans = {int(index): text for index, text in zip(parts[1::2], parts[2::2])}
    return pattern.sub(lambda match: spans[int(match.group(1))], masked_text)


def mask_corpus(docs: Iterable[AnnotatedDocument], ratio: float, seed: int = 0,
                sentinel_pattern: str = DEFAULT_SENTINEL_PATTERN) -> tuple[list[dict], list[str]]:
    """Mask a whole corpus; zero-span documents are skipped with a diagnostic."""
    records = []
    diagnostics = []
    for doc in docs:
        if not doc.spans:
            diagnostics.append(f"document {doc.doc_id!r} has no spans; skipped")
            continue
        masked, target = mask_spans(doc, ratio, seed, sentinel_pattern)
        records.append({"doc_id": doc.doc_id, "input": masked, "target": target})
    return records, diagnostics
