"""Job-ad ingestion, sentence segmentation, and readability scoring.

Records arrive as JSONL (one object per line) or CSV (header row). Rows
with malformed or out-of-order dates are reported and skipped rather than
silently dropped; duplicate ids abort the load. All downstream stages
operate on the immutable records produced here.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .months import MonthError, month_index, parse_month

REQUIRED_FIELDS = ("id", "title", "body", "date_compiled")


class IngestError(ValueError):
    """Fatal ingestion problem: unreadable source, duplicate ids, or any
    rejected row when running strict."""


class UnreadableInputError(ValueError):
    """Raised when a readability score is requested for wordless text."""


@dataclass(frozen=True)
class JobAdRecord:
    id: str
    title: str
    body: str
    date_compiled: str
    date_acquired: str | None = None
    state: str | None = None
    zip: str | None = None
    firm_name_meta: str | None = None
    wage_min_meta: float | None = None
    wage_max_meta: float | None = None


@dataclass(frozen=True)
class Sentence:
    ad_id: str
    index: int
    text: str
    start: int
    end: int

    @property
    def char_span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True)
class RejectedRow:
    row_number: int
    ad_id: str
    reason: str


@dataclass
class IngestReport:
    records: list[JobAdRecord] = field(default_factory=list)
    rejected: list[RejectedRow] = field(default_factory=list)


def _clean_optional(value: object) -> str | None:
    if value is None:
        return None
    text = str(value).strip()
    return text or None


def _parse_wage_meta(value: object, row: int, which: str) -> float | None:
    if value is None or str(value).strip() == "":
        return None
    try:
        return float(str(value).replace(",", "").lstrip("$"))
    except ValueError:
        raise _RowReject(f"{which} is not numeric: {value!r}") from None


class _RowReject(Exception):
    pass


def _build_record(raw: dict, row_number: int) -> JobAdRecord:
    missing = [k for k in REQUIRED_FIELDS if not str(raw.get(k) or "").strip()]
    if missing:
        raise _RowReject(f"missing required field(s): {', '.join(missing)}")
    try:
        compiled = parse_month(str(raw["date_compiled"]))
    except MonthError:
        raise _RowReject(f"malformed date_compiled: {raw['date_compiled']!r}") from None
    acquired_raw = _clean_optional(raw.get("date_acquired"))
    acquired = None
    if acquired_raw is not None:
        try:
            acquired = parse_month(acquired_raw)
        except MonthError:
            raise _RowReject(f"malformed date_acquired: {acquired_raw!r}") from None
        if month_index(acquired) > month_index(compiled):
            raise _RowReject(
                f"date_acquired {acquired} after date_compiled {compiled}"
            )
    zip_code = _clean_optional(raw.get("zip"))
    if zip_code is not None and not re.fullmatch(r"\d{5}", zip_code):
        raise _RowReject(f"zip is not a 5-digit code: {zip_code!r}")
    state = _clean_optional(raw.get("state"))
    if state is not None:
        state = state.upper()
        if not re.fullmatch(r"[A-Z]{2}", state):
            raise _RowReject(f"state is not a 2-letter code: {state!r}")
    return JobAdRecord(
        id=str(raw["id"]).strip(),
        title=str(raw["title"]).strip(),
        body=str(raw["body"]),
        date_compiled=compiled,
        date_acquired=acquired,
        state=state,
        zip=zip_code,
        firm_name_meta=_clean_optional(raw.get("firm_name_meta")),
        wage_min_meta=_parse_wage_meta(raw.get("wage_min_meta"), row_number, "wage_min_meta"),
        wage_max_meta=_parse_wage_meta(raw.get("wage_max_meta"), row_number, "wage_max_meta"),
    )


def _iter_jsonl(text: str) -> Iterator[tuple[int, dict]]:
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {n}: invalid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise IngestError(f"line {n}: expected a JSON object")
        yield n, obj


def _iter_csv(text: str) -> Iterator[tuple[int, dict]]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return
    header = [h.strip() for h in reader.fieldnames]
    missing = [k for k in REQUIRED_FIELDS if k not in header]
    if missing:
        raise IngestError(f"CSV header missing column(s): {', '.join(missing)}")
    for n, row in enumerate(reader, start=2):
        yield n, {k.strip(): v for k, v in row.items() if k is not None}


def detect_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".json", ".ndjson"):
        return "jsonl"
    if suffix == ".csv":
        return "csv"
    raise IngestError(f"cannot infer corpus format from suffix: {path}")


def ingest(
    source: str | Path,
    fmt: str | None = None,
    strict: bool = False,
) -> IngestReport:
    """Load job-ad records from a JSONL or CSV file.

    Returns an IngestReport whose `rejected` list names every skipped row
    and why. With strict=True the first bad row raises instead.
    """
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"unreadable source {path}: {exc}") from None
    fmt = fmt or detect_format(path)
    if fmt == "jsonl":
        rows: Iterable[tuple[int, dict]] = _iter_jsonl(text)
    elif fmt == "csv":
        rows = _iter_csv(text)
    else:
        raise IngestError(f"unknown corpus format: {fmt!r}")

    report = IngestReport()
    seen: dict[str, int] = {}
    duplicates: list[str] = []
    for row_number, raw in rows:
        try:
            record = _build_record(raw, row_number)
        except _RowReject as exc:
            rejected = RejectedRow(row_number, str(raw.get("id") or ""), str(exc))
            if strict:
                raise IngestError(f"row {row_number}: {exc}") from None
            report.rejected.append(rejected)
            continue
        if record.id in seen:
            duplicates.append(record.id)
            continue
        seen[record.id] = row_number
        report.records.append(record)
    if duplicates:
        listed = ", ".join(sorted(set(duplicates)))
        raise IngestError(f"duplicate id(s): {listed}")
    return report


def emit(records: Iterable[JobAdRecord], path: str | Path) -> None:
    """Write records back out as JSONL, field-for-field."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            obj = {
                "id": rec.id,
                "title": rec.title,
                "body": rec.body,
                "date_compiled": rec.date_compiled,
            }
            for key in ("date_acquired", "state", "zip", "firm_name_meta",
                        "wage_min_meta", "wage_max_meta"):
                value = getattr(rec, key)
                if value is not None:
                    obj[key] = value
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


# --- sentence segmentation -------------------------------------------------

_BULLETS = "•●▪◦‣∙·*"
_TERMINATORS = ".!?"


def _is_break(body: str, i: int) -> bool:
    ch = body[i]
    if ch in "\n\r" or ch in _BULLETS:
        return True
    if ch in _TERMINATORS:
        # a period between two digits is a decimal point, not a terminator
        if (
            ch == "."
            and 0 < i < len(body) - 1
            and body[i - 1].isdigit()
            and body[i + 1].isdigit()
        ):
            return False
        return True
    return False


def segment(body: str, ad_id: str = "") -> list[Sentence]:
    """Split body text into sentences with character spans.

    Splits on sentence terminators (. ! ?), newline runs, and bullet
    glyphs; fragments are trimmed and empty ones dropped. Deterministic
    and idempotent: re-segmenting any produced sentence text yields that
    sentence back.
    """
    sentences: list[Sentence] = []
    frag_start = 0
    n = len(body)
    for i in range(n + 1):
        if i < n and not _is_break(body, i):
            continue
        start, end = frag_start, i
        while start < end and body[start].isspace():
            start += 1
        while end > start and body[end - 1].isspace():
            end -= 1
        if end > start:
            sentences.append(
                Sentence(ad_id, len(sentences), body[start:end], start, end)
            )
        frag_start = i + 1
    return sentences


# --- readability ------------------------------------------------------------

_WORD_RE = re.compile(r"[A-Za-z0-9']+")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


def count_syllables(word: str) -> int:
    """Vowel-group heuristic: maximal aeiouy runs, minus a terminal silent
    'e', floor of one syllable per word."""
    w = word.lower().strip("'")
    groups = len(_VOWEL_GROUP_RE.findall(w))
    if w.endswith("e"):
        groups -= 1
    return max(groups, 1)


def flesch_reading_ease(body: str) -> float:
    """Reading-ease score: 206.835 - 1.015*(words/sentences) - 84.6*(syllables/words)."""
    words = _WORD_RE.findall(body)
    if not words:
        raise UnreadableInputError("unreadable input: no words")
    n_sentences = max(len(segment(body)), 1)
    n_words = len(words)
    n_syllables = sum(count_syllables(w) for w in words)
    return 206.835 - 1.015 * (n_words / n_sentences) - 84.6 * (n_syllables / n_words)
