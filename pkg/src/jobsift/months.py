"""Calendar-month arithmetic on "YYYY-MM" strings.

All engine dates live at month granularity; day components from input
files are truncated at ingestion. Months convert to a flat integer index
(year * 12 + month - 1) so spans and offsets are plain integer math.
"""

from __future__ import annotations

import re

_MONTH_RE = re.compile(r"^(\d{4})-(0[1-9]|1[0-2])$")
_DATE_RE = re.compile(r"^(\d{4})-(0[1-9]|1[0-2])(-\d{2})?")


class MonthError(ValueError):
    """Raised for strings that do not name a calendar month."""


def parse_month(value: str) -> str:
    """Normalize a date string to "YYYY-MM", truncating any day part."""
    m = _DATE_RE.match(value.strip())
    if not m:
        raise MonthError(f"not a YYYY-MM month: {value!r}")
    return f"{m.group(1)}-{m.group(2)}"


def is_month(value: str) -> bool:
    return bool(_MONTH_RE.match(value))


def month_index(value: str) -> int:
    m = _MONTH_RE.match(value)
    if not m:
        raise MonthError(f"not a YYYY-MM month: {value!r}")
    return int(m.group(1)) * 12 + int(m.group(2)) - 1


def index_month(idx: int) -> str:
    if idx < 0:
        raise MonthError(f"month index underflow: {idx}")
    return f"{idx // 12:04d}-{idx % 12 + 1:02d}"


def shift_month(value: str, offset: int) -> str:
    """Return the month `offset` months after (or before, if negative)."""
    return index_month(month_index(value) + offset)


def month_range(start: str, end: str) -> list[str]:
    """Inclusive list of months from start to end."""
    a, b = month_index(start), month_index(end)
    if a > b:
        raise MonthError(f"month range reversed: {start} > {end}")
    return [index_month(i) for i in range(a, b + 1)]
