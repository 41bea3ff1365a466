"""Wage detection, span parsing, pay-frequency resolution, annualization.

Detection is recall-oriented (over-triggering is fine, parsing rejects);
the parse stage demands a currency symbol on the amount or a pay-period
cue adjacent to it, which keeps phone numbers and "401(k)" out. Parsed
amounts resolve to MIN/MAX values, a pay frequency (hourly, weekly,
monthly, annually), and an annualized figure from the point value or the
midpoint of the range. Outliers are flagged, never deleted; aggregation
decides whether to drop them.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import JobAdRecord, Sentence, segment

HOURS_PER_YEAR = 2080
WEEKS_PER_YEAR = 52
MONTHS_PER_YEAR = 12
ANNUAL_MULTIPLIER = {
    "hourly": HOURS_PER_YEAR,
    "weekly": WEEKS_PER_YEAR,
    "monthly": MONTHS_PER_YEAR,
    "annually": 1,
}
DEFAULT_BOUNDS = (5_000.0, 1_000_000.0)

# magnitude fallback when no cue is present; weekly only ever by cue
MAGNITUDE_HOURLY_BELOW = 200.0
MAGNITUDE_ANNUAL_FROM = 10_000.0

_AMOUNT_RE = re.compile(
    r"(?P<cur>\$)?\s*(?P<num>\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?)"
    r"(?P<k>\s?[kK]\b)?"
)
_RANGE_CONNECTOR_RE = re.compile(r"^\s*(?:-|–|—|to|through|and)\s*$", re.I)
_WORD_RE = re.compile(r"[a-z]+")

_UNIT_WORDS = {
    "hourly": ("hour", "hr", "hrs", "hourly"),
    "weekly": ("week", "wk", "weekly"),
    "monthly": ("month", "mo", "monthly"),
    "annually": ("year", "yr", "annually", "annual", "yearly", "annum"),
}
_FREQ_PRIORITY = ("hourly", "weekly", "monthly", "annually")
_ALL_UNIT_WORDS = {w for words in _UNIT_WORDS.values() for w in words}
_RATE_ADVERBS = {"hourly", "weekly", "monthly", "annually", "yearly"}
_LINKERS = {"per", "an", "a", "each"}
_CURRENCY_WORDS = {"dollars", "dollar", "usd"}

_DETECT_CUES = (
    "salary", "wage", "wages", "pay", "compensation", "stipend", "rate",
    "hourly", "weekly", "monthly", "annually", "annual", "yearly",
    "per hour", "per week", "per month", "per year",
)


@dataclass(frozen=True)
class WageSpan:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class WageParse:
    point_or_range: str  # "point" | "range"
    min_span: WageSpan
    max_span: WageSpan
    min_value: float
    max_value: float


@dataclass(frozen=True)
class ParseOutcome:
    parse: WageParse | None
    reason: str = ""


@dataclass(frozen=True)
class WageObservation:
    ad_id: str
    frequency: str
    annualized: float
    point_or_range: str
    min_value: float
    max_value: float
    outlier: bool
    low_confidence: bool = False
    raw_span_min: str | None = None
    raw_span_max: str | None = None
    provenance: str = "text"  # text | metadata | override
    sentence_index: int | None = None

    def to_json(self) -> dict:
        return {
            "ad_id": self.ad_id,
            "sentence_idx": self.sentence_index,
            "raw_span_min": self.raw_span_min,
            "raw_span_max": self.raw_span_max,
            "min_value": self.min_value,
            "max_value": self.max_value,
            "frequency": self.frequency,
            "low_confidence": self.low_confidence,
            "annualized": round(self.annualized, 2),
            "point_or_range": self.point_or_range,
            "outlier": self.outlier,
            "provenance": self.provenance,
        }


def detect_wage_sentences(sentences: Sequence[Sentence]) -> list[Sentence]:
    """Keep sentences that plausibly carry wage information."""
    out = []
    for sent in sentences:
        lowered = sent.text.lower()
        if "$" in lowered or any(w in _CURRENCY_WORDS for w in _WORD_RE.findall(lowered)):
            out.append(sent)
            continue
        has_number = bool(re.search(r"\d", lowered))
        if has_number and any(_cue_present(lowered, cue) for cue in _DETECT_CUES):
            out.append(sent)
    return out


def _cue_present(lowered: str, cue: str) -> bool:
    return re.search(rf"(?<![a-z]){re.escape(cue)}(?![a-z])", lowered) is not None


def _words_near(text: str, pos: int, before: bool, count: int = 2) -> list[str]:
    if before:
        window = text[max(0, pos - 24) : pos].lower()
        return _WORD_RE.findall(window)[-count:]
    window = text[pos : pos + 24].lower()
    return _WORD_RE.findall(window)[:count]


def _currency_marked(text: str, m: re.Match) -> bool:
    if m.group("cur"):
        return True
    after = _words_near(text, m.end(), before=False, count=1)
    if after and after[0] in _CURRENCY_WORDS:
        return True
    before = _words_near(text, m.start(), before=True, count=1)
    return bool(before and before[0] in _CURRENCY_WORDS)


def _rate_anchored(text: str, m: re.Match) -> bool:
    """A rate expression right after the amount: "per hour", "/hr",
    "hourly". A bare unit noun ("40 hours") stays a duration, not a wage."""
    after = _words_near(text, m.end(), before=False)
    if not after:
        return False
    window = text[m.end() : m.end() + 6]
    if "/" in window.split(" ")[0] and after[0] in _ALL_UNIT_WORDS:
        return True
    if after[0] in _RATE_ADVERBS:
        return True
    return len(after) > 1 and after[0] in _LINKERS and after[1] in _ALL_UNIT_WORDS


def _anchored(text: str, m: re.Match) -> bool:
    """Amount counts only with a currency mark or an adjacent period cue."""
    return _currency_marked(text, m) or _rate_anchored(text, m)


def _amount_value(m: re.Match) -> float:
    value = float(m.group("num").replace(",", ""))
    if m.group("k"):
        value *= 1000.0
    return value


def _span(text: str, m: re.Match) -> WageSpan:
    start, end = m.start(), m.end()
    while start < end and text[start].isspace():
        start += 1
    return WageSpan(text[start:end], start, end)


def parse_wage(sentence: str | Sentence) -> ParseOutcome:
    """Extract MIN/MAX wage spans and values from one sentence.

    Grammar: "A - B", "A to B", "between A and B" make a range; a single
    amount is a point (min = max). Thousands separators and the "k"
    suffix normalize into plain values. Amounts with no currency symbol
    and no adjacent frequency cue never parse.
    """
    text = sentence.text if isinstance(sentence, Sentence) else sentence
    all_matches = list(_AMOUNT_RE.finditer(text))
    if not all_matches:
        return ParseOutcome(None, "no amounts found")
    # currency-marked amounts outrank bare numbers; without any, only
    # rate-anchored numbers count, so durations and phone digits drop out
    matches = [m for m in all_matches if _currency_marked(text, m)]
    if not matches:
        matches = [m for m in all_matches if _rate_anchored(text, m)]
    if not matches:
        return ParseOutcome(None, "no currency or frequency anchor on the amounts")
    if len(matches) == 1:
        m = matches[0]
        value = _amount_value(m)
        span = _span(text, m)
        return ParseOutcome(WageParse("point", span, span, value, value))
    if len(matches) == 2:
        first, second = matches
        connector = text[first.end() : second.start()]
        between_lead = _words_near(text, first.start(), before=True, count=1)
        is_range = bool(_RANGE_CONNECTOR_RE.match(connector)) and (
            not connector.strip().lower() == "and" or between_lead == ["between"]
        )
        if not is_range:
            return ParseOutcome(None, "two amounts without range syntax")
        lo, hi = _amount_value(first), _amount_value(second)
        lo_span, hi_span = _span(text, first), _span(text, second)
        if lo > hi:
            lo, hi = hi, lo
            lo_span, hi_span = hi_span, lo_span
        return ParseOutcome(WageParse("range", lo_span, hi_span, lo, hi))
    return ParseOutcome(None, f"{len(matches)} amounts without range syntax")


def classify_frequency(
    sentence: str | Sentence, parse: WageParse
) -> tuple[str, bool]:
    """Resolve pay frequency; (frequency, low_confidence).

    The cue occurrence nearest to a parsed span decides; without any cue,
    the magnitude of the point value or range midpoint decides and the
    result is flagged low-confidence.
    """
    text = (sentence.text if isinstance(sentence, Sentence) else sentence).lower()
    spans = [(parse.min_span.start, parse.min_span.end),
             (parse.max_span.start, parse.max_span.end)]
    # pay reads "AMOUNT per PERIOD": cues after the amount outrank earlier
    # ones, then proximity, then class priority
    best: tuple[int, int, int] | None = None
    best_freq = ""
    for priority, freq in enumerate(_FREQ_PRIORITY):
        for unit in _UNIT_WORDS[freq]:
            for m in re.finditer(rf"(?<![a-z]){unit}(?![a-z])", text):
                trailing = any(m.start() >= e for _, e in spans)
                distance = min(
                    (m.start() - e) if m.start() >= e else max(s - m.end(), 0)
                    for s, e in spans
                )
                key = (0 if trailing else 1, distance, priority)
                if best is None or key < best:
                    best, best_freq = key, freq
    if best is not None:
        return best_freq, False
    base = (parse.min_value + parse.max_value) / 2.0
    if base < MAGNITUDE_HOURLY_BELOW:
        return "hourly", True
    if base < MAGNITUDE_ANNUAL_FROM:
        return "monthly", True
    return "annually", True


def annualize(
    point_or_range: str,
    min_value: float,
    max_value: float,
    frequency: str,
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
) -> tuple[float, bool]:
    """Annual figure from the point value or range midpoint, flagged as an
    outlier when it falls outside the configured bounds."""
    if frequency not in ANNUAL_MULTIPLIER:
        raise ValueError(f"unknown pay frequency: {frequency!r}")
    base = min_value if point_or_range == "point" else (min_value + max_value) / 2.0
    annual = base * ANNUAL_MULTIPLIER[frequency]
    lo, hi = bounds
    return annual, not (lo <= annual <= hi)


_RENDER_UNIT = {"hourly": "hour", "weekly": "week", "monthly": "month",
                "annually": "year"}


def render(observation: WageObservation) -> str:
    """Canonical text for an observation; parse_wage round-trips it."""
    unit = _RENDER_UNIT[observation.frequency]
    if observation.point_or_range == "point":
        return f"${observation.min_value:,.2f} per {unit}"
    return (
        f"${observation.min_value:,.2f} - ${observation.max_value:,.2f} per {unit}"
    )


def load_override_spans(path: str | Path) -> dict[tuple[str, int], dict]:
    """External span file: JSONL {ad_id, sentence_idx, min_span, max_span, freq}."""
    overrides: dict[tuple[str, int], dict] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        overrides[(str(row["ad_id"]), int(row["sentence_idx"]))] = row
    return overrides


def _value_of(span_text: str) -> float:
    m = _AMOUNT_RE.search(span_text)
    if not m:
        raise ValueError(f"override span has no amount: {span_text!r}")
    return _amount_value(m)


def extract_from_ad(
    ad: JobAdRecord,
    overrides: dict[tuple[str, int], dict] | None = None,
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
) -> tuple[list[WageObservation], list[str]]:
    """All wage observations for one ad, with parse diagnostics.

    Structured metadata, when present, produces its own observation and
    is never overwritten by text extraction; text results are recorded
    separately with their own provenance.
    """
    observations: list[WageObservation] = []
    diagnostics: list[str] = []

    if ad.wage_min_meta is not None or ad.wage_max_meta is not None:
        lo = ad.wage_min_meta if ad.wage_min_meta is not None else ad.wage_max_meta
        hi = ad.wage_max_meta if ad.wage_max_meta is not None else ad.wage_min_meta
        kind = "point" if lo == hi else "range"
        annual, outlier = annualize(kind, lo, hi, "annually", bounds)
        observations.append(
            WageObservation(
                ad_id=ad.id, frequency="annually", annualized=annual,
                point_or_range=kind, min_value=lo, max_value=hi,
                outlier=outlier, provenance="metadata",
            )
        )

    for sent in detect_wage_sentences(segment(ad.body, ad_id=ad.id)):
        key = (ad.id, sent.index)
        if overrides and key in overrides:
            row = overrides[key]
            lo = _value_of(row["min_span"])
            hi = _value_of(row["max_span"]) if row.get("max_span") else lo
            kind = "point" if lo == hi else "range"
            annual, outlier = annualize(kind, lo, hi, row["freq"], bounds)
            observations.append(
                WageObservation(
                    ad_id=ad.id, frequency=row["freq"], annualized=annual,
                    point_or_range=kind, min_value=lo, max_value=hi,
                    outlier=outlier, raw_span_min=row["min_span"],
                    raw_span_max=row.get("max_span") or row["min_span"],
                    provenance="override", sentence_index=sent.index,
                )
            )
            continue
        outcome = parse_wage(sent)
        if outcome.parse is None:
            diagnostics.append(f"{ad.id}:{sent.index}: {outcome.reason}")
            continue
        parse = outcome.parse
        frequency, low_confidence = classify_frequency(sent, parse)
        annual, outlier = annualize(
            parse.point_or_range, parse.min_value, parse.max_value, frequency, bounds
        )
        observations.append(
            WageObservation(
                ad_id=ad.id, frequency=frequency, annualized=annual,
                point_or_range=parse.point_or_range,
                min_value=parse.min_value, max_value=parse.max_value,
                outlier=outlier, low_confidence=low_confidence,
                raw_span_min=parse.min_span.text, raw_span_max=parse.max_span.text,
                provenance="text", sentence_index=sent.index,
            )
        )
    return observations, diagnostics
