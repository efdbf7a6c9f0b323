"""Month-granularity calendar arithmetic.

Everything in this toolkit that touches time goes through the three value
types defined here: a calendar month (:class:`TimePoint`), a validity range
(:class:`TimeInterval`), and a relative displacement (:class:`Offset`).
Months are the finest unit; there is no day or timezone handling.

The canonical textual form is ``"Jul 2019"`` (3-letter English month
abbreviation, year without leading zeros). A bare ``"2019"`` is accepted on
input and resolved to a month chosen by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

MONTH_ABBREVS = (
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
)

_MONTH_NUMBERS = {abbrev.lower(): i + 1 for i, abbrev in enumerate(MONTH_ABBREVS)}

MIN_YEAR = 1

BEFORE = "before"
SAME = "same"
AFTER = "after"


class TimeParseError(ValueError):
    """A textual time could not be parsed."""


class TimeRangeError(ValueError):
    """An operation produced a calendar point before year 1."""


@dataclass(frozen=True, order=True, slots=True)
class TimePoint:
    """A calendar month: (year, month) with month in 1..12.

    Ordering is chronological; field order (year, month) makes the derived
    tuple comparison match the calendar order.
    """

    year: int
    month: int

    def __post_init__(self) -> None:
        if self.year < MIN_YEAR:
            raise TimeRangeError(f"year {self.year} is before the minimum supported year {MIN_YEAR}")
        if not 1 <= self.month <= 12:
            raise ValueError(f"month must be in 1..12, got {self.month}")

    def __str__(self) -> str:
        return format_time(self)


@dataclass(frozen=True, slots=True)
class Offset:
    """A displacement of whole years and months in one direction.

    At least one of (years, months) must be nonzero; both are non-negative,
    with the sign carried by ``direction``.
    """

    years: int
    months: int
    direction: str

    def __post_init__(self) -> None:
        if self.years < 0 or self.months < 0:
            raise ValueError("offset years and months must be non-negative")
        if (self.years, self.months) == (0, 0):
            raise ValueError("offset must move by at least one month")
        if self.direction not in (BEFORE, AFTER):
            raise ValueError(f"direction must be 'before' or 'after', got {self.direction!r}")

    @property
    def total_months(self) -> int:
        return self.years * 12 + self.months

    def mirror(self) -> "Offset":
        """The same displacement in the opposite direction."""
        flipped = BEFORE if self.direction == AFTER else AFTER
        return Offset(self.years, self.months, flipped)


@dataclass(frozen=True, slots=True)
class TimeInterval:
    """An inclusive validity range. ``end=None`` marks an ongoing fact."""

    start: TimePoint
    end: TimePoint | None

    def __post_init__(self) -> None:
        if self.end is not None and self.end < self.start:
            raise ValueError(f"interval start {self.start} is after end {self.end}")

    def contains(self, point: TimePoint) -> bool:
        """Inclusive at both bounds; an open end extends indefinitely."""
        if point < self.start:
            return False
        return self.end is None or point <= self.end

    def closed(self, snapshot: TimePoint) -> "TimeInterval":
        """This interval with an open end pinned to the KB snapshot month."""
        if self.end is not None:
            return self
        return TimeInterval(self.start, snapshot)


def month_index(t: TimePoint) -> int:
    """Months elapsed since Jan of year 0 (Jan 0001 has index 12)."""
    return t.year * 12 + (t.month - 1)


def time_from_month_index(index: int) -> TimePoint:
    year, month0 = divmod(index, 12)
    if year < MIN_YEAR:
        raise TimeRangeError(f"month index {index} falls before year {MIN_YEAR}")
    return TimePoint(year, month0 + 1)


def shift(t: TimePoint, offset: Offset) -> TimePoint:
    """The calendar month exactly ``offset`` away from ``t``."""
    delta = offset.total_months
    if offset.direction == BEFORE:
        delta = -delta
    return time_from_month_index(month_index(t) + delta)


def compare(a: TimePoint, b: TimePoint) -> str:
    """Chronological order of two points: 'before', 'same', or 'after'."""
    if a < b:
        return BEFORE
    if a > b:
        return AFTER
    return SAME


def parse_time(text: str, bare_year_month: int = 1) -> TimePoint:
    """Parse ``"Jul 2019"`` or a bare ``"2019"``.

    A bare year resolves to ``bare_year_month`` (callers ingesting validity
    ranges pass 1 for starts and 12 for ends).
    """
    tokens = text.split()
    if len(tokens) == 1:
        (year_token,) = tokens
        month = bare_year_month
    elif len(tokens) == 2:
        month_token, year_token = tokens
        month = _MONTH_NUMBERS.get(month_token.lower())
        if month is None:
            raise TimeParseError(f"unrecognized month token {month_token!r} in {text!r}")
    else:
        raise TimeParseError(f"expected 'Mon YYYY' or 'YYYY', got {text!r}")
    if not year_token.isdigit():
        raise TimeParseError(f"unrecognized year token {year_token!r} in {text!r}")
    year = int(year_token)
    if year < MIN_YEAR:
        raise TimeRangeError(f"year {year} is before the minimum supported year {MIN_YEAR}")
    return TimePoint(year, month)


def format_time(t: TimePoint) -> str:
    """Canonical textual form, e.g. ``"Jul 2019"``."""
    return f"{MONTH_ABBREVS[t.month - 1]} {t.year}"
