"""Question template table.

Templates live in an editable JSON file (``data/templates.json`` ships as the
default). Placeholders: ``<subject>``, ``<t>`` (a time), ``<o_j>`` (the pivot
object of a before/after question), ``<x>`` (years), ``<y>`` (months).
``year(s)``/``month(s)`` in relative-time templates are pluralized against the
substituted count at render time.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

DIRECTIONS = ("before", "after")


class TemplateError(ValueError):
    """The template file is malformed or a lookup failed."""


@dataclass(frozen=True, slots=True)
class RelativeTimeTemplate:
    """One family of relative-time questions (both directions)."""

    id: str
    granularity: str  # "year" answers bare years, "month" answers "Mon YYYY"
    before: str
    after: str
    before_one: str | None = None  # collapsed wording when the offset is 1 year
    after_one: str | None = None

    def uses_years(self) -> bool:
        return "<x>" in self.before

    def uses_months(self) -> bool:
        return "<y>" in self.before


@dataclass(frozen=True, slots=True)
class RelationTemplates:
    """Templates and context phrase for one KB relation code."""

    code: str
    name: str
    l2: str
    l3_before: str
    l3_after: str
    phrase: str


@dataclass(frozen=True, slots=True)
class L1Matcher:
    """Compiled pattern that recovers (x, y, t) from a question surface form."""

    template_id: str  # e.g. "l1_year_after"
    granularity: str
    direction: str
    pattern: re.Pattern
    fixed_x: int | None = None  # set for collapsed one-year wordings


def _pluralize(text: str, unit: str, count: int) -> str:
    return text.replace(f"{unit}(s)", unit if count == 1 else f"{unit}s")


class TemplateTable:
    def __init__(self, version: int, l1: list[RelativeTimeTemplate], relations: dict[str, RelationTemplates]):
        self.version = version
        self.l1 = l1
        self.relations = relations
        self._matchers: list[L1Matcher] | None = None

    @property
    def relation_codes(self) -> frozenset[str]:
        return frozenset(self.relations)

    def relation(self, code: str) -> RelationTemplates:
        try:
            return self.relations[code]
        except KeyError:
            raise TemplateError(f"no templates for relation {code!r}") from None

    def l1_template(self, template_id: str) -> RelativeTimeTemplate:
        for tpl in self.l1:
            if tpl.id == template_id:
                return tpl
        raise TemplateError(f"no relative-time template {template_id!r}")

    def render_l1(self, template: RelativeTimeTemplate, direction: str, x: int, y: int, t_text: str) -> str:
        """Fill one relative-time template; collapses to the bare one-year form."""
        if direction not in DIRECTIONS:
            raise TemplateError(f"bad direction {direction!r}")
        collapsed = template.before_one if direction == "before" else template.after_one
        if collapsed is not None and x == 1 and y == 0:
            text = collapsed
        else:
            text = template.before if direction == "before" else template.after
            text = _pluralize(text.replace("<x>", str(x)), "year", x)
            text = _pluralize(text.replace("<y>", str(y)), "month", y)
        return text.replace("<t>", t_text)

    def render_l2(self, relation: str, subject: str, t_text: str) -> str:
        return self.relation(relation).l2.replace("<subject>", subject).replace("<t>", t_text)

    def render_l3(self, relation: str, direction: str, subject: str, pivot: str) -> str:
        rel = self.relation(relation)
        text = rel.l3_before if direction == "before" else rel.l3_after
        return text.replace("<subject>", subject).replace("<o_j>", pivot)

    def l1_matchers(self) -> list[L1Matcher]:
        """Patterns for every wording variant, used by the symbolic solver."""
        if self._matchers is not None:
            return self._matchers
        matchers = []
        for tpl in self.l1:
            for direction in DIRECTIONS:
                text = tpl.before if direction == "before" else tpl.after
                matchers.append(L1Matcher(
                    template_id=f"{tpl.id}_{direction}",
                    granularity=tpl.granularity,
                    direction=direction,
                    pattern=_compile_l1_pattern(text),
                ))
                collapsed = tpl.before_one if direction == "before" else tpl.after_one
                if collapsed is not None:
                    matchers.append(L1Matcher(
                        template_id=f"{tpl.id}_{direction}",
                        granularity=tpl.granularity,
                        direction=direction,
                        pattern=_compile_l1_pattern(collapsed),
                        fixed_x=1,
                    ))
        self._matchers = matchers
        return matchers


def _compile_l1_pattern(template_text: str) -> re.Pattern:
    escaped = re.escape(template_text)
    escaped = escaped.replace(re.escape("year(s)"), r"years?")
    escaped = escaped.replace(re.escape("month(s)"), r"months?")
    escaped = escaped.replace("<x>", r"(?P<x>\d+)")
    escaped = escaped.replace("<y>", r"(?P<y>\d+)")
    escaped = escaped.replace("<t>", r"(?P<t>.+)")
    return re.compile(rf"^{escaped}$")


def _require(obj: dict, key: str, where: str) -> object:
    if key not in obj:
        raise TemplateError(f"template file: missing {key!r} in {where}")
    return obj[key]


_default_table: TemplateTable | None = None


def load_templates(path: str | None = None) -> TemplateTable:
    """Load a template table; ``None`` loads the packaged defaults (cached)."""
    global _default_table
    if path is None:
        if _default_table is None:
            _default_table = _parse_table(
                resources.files("chronoqa").joinpath("data/templates.json").read_text(encoding="utf-8"))
        return _default_table
    with open(path, encoding="utf-8") as handle:
        return _parse_table(handle.read())


def _parse_table(raw: str) -> TemplateTable:
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise TemplateError(f"template file is not valid JSON: {exc}") from exc

    l1 = []
    for entry in _require(data, "l1", "top level"):
        l1.append(RelativeTimeTemplate(
            id=str(_require(entry, "id", "l1 entry")),
            granularity=str(_require(entry, "granularity", "l1 entry")),
            before=str(_require(entry, "before", "l1 entry")),
            after=str(_require(entry, "after", "l1 entry")),
            before_one=entry.get("before_one"),
            after_one=entry.get("after_one"),
        ))
    relations = {}
    for code, entry in _require(data, "relations", "top level").items():
        relations[code] = RelationTemplates(
            code=code,
            name=str(_require(entry, "name", code)),
            l2=str(_require(entry, "l2", code)),
            l3_before=str(_require(entry, "l3_before", code)),
            l3_after=str(_require(entry, "l3_after", code)),
            phrase=str(_require(entry, "phrase", code)),
        )
    if not relations:
        raise TemplateError("template file defines no relations")
    return TemplateTable(version=int(data.get("version", 1)), l1=l1, relations=relations)
