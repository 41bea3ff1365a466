"""Firm-name standardization and establishment linkage.

Names are cleaned to a canonical token form ("Wal-Mart Stores,
Incorporated" and "WAL MART STORES INC" collapse together), then matched
to an establishment index by Levenshtein similarity ratio, cascading
from zip-colocated records to state to a first-character-pruned national
search. Matches below the acceptance threshold keep their best score in
the result but surrender no establishment id or industry code.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .knowledge_map import tokenize

ACCEPT_THRESHOLD = 0.8

# legal-form variants collapse to one canonical suffix token
_SUFFIX_CANON = {
    "incorporated": "inc",
    "inc": "inc",
    "corporation": "corp",
    "corp": "corp",
    "company": "co",
    "co": "co",
    "limited": "ltd",
    "ltd": "ltd",
    "llc": "llc",
    "pllc": "llc",
}

# number words below twenty map onto digits; digits are kept as-is
_NUMBER_WORDS = {
    "zero": "0", "one": "1", "two": "2", "three": "3", "four": "4",
    "five": "5", "six": "6", "seven": "7", "eight": "8", "nine": "9",
    "ten": "10", "eleven": "11", "twelve": "12", "thirteen": "13",
    "fourteen": "14", "fifteen": "15", "sixteen": "16",
    "seventeen": "17", "eighteen": "18", "nineteen": "19",
}


def standardize(name: str) -> str:
    """Deterministic firm-name cleaner; idempotent by construction."""
    tokens = [t.text for t in tokenize(name)]
    # spelled-out l l c (from "L.L.C.") collapses to the canonical token
    while len(tokens) >= 3 and tokens[-3:] == ["l", "l", "c"]:
        tokens = tokens[:-3] + ["llc"]
    out: list[str] = []
    for tok in tokens:
        tok = _NUMBER_WORDS.get(tok, tok)
        tok = _SUFFIX_CANON.get(tok, tok)
        out.append(tok)
    return " ".join(out)


def lev_ratio(a: str, b: str) -> float:
    """1 - d(a, b) / max(|a|, |b|) with unit-cost edits; 1.0 for two
    empty strings."""
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
            )
        previous = current
    return 1.0 - previous[-1] / len(a)


class FirmMatchError(ValueError):
    pass


@dataclass(frozen=True)
class EstablishmentRecord:
    est_id: str
    name_raw: str
    name_std: str
    zip: str
    state: str
    naics: str
    sic: str | None = None

    def __post_init__(self) -> None:
        if not self.naics.isdigit() or not 2 <= len(self.naics) <= 6:
            raise FirmMatchError(
                f"establishment {self.est_id}: naics must be 2-6 digits, got {self.naics!r}"
            )


class EstablishmentIndex:
    """Immutable lookup structure shared across matching workers."""

    def __init__(self, records: Sequence[EstablishmentRecord]) -> None:
        self.records = tuple(records)
        self.by_zip: dict[str, list[EstablishmentRecord]] = {}
        self.by_state: dict[str, list[EstablishmentRecord]] = {}
        self.by_first_char: dict[str, list[EstablishmentRecord]] = {}
        for rec in self.records:
            self.by_zip.setdefault(rec.zip, []).append(rec)
            self.by_state.setdefault(rec.state, []).append(rec)
            first = _first_alnum(rec.name_std)
            if first:
                self.by_first_char.setdefault(first, []).append(rec)

    def __len__(self) -> int:
        return len(self.records)


def _first_alnum(text: str) -> str:
    for ch in text:
        if ch.isalnum():
            return ch
    return ""


def load_establishments(path: str | Path) -> EstablishmentIndex:
    """Read an establishment CSV (est_id, name, zip, state, naics[, sic])."""
    records: list[EstablishmentRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        needed = {"est_id", "name", "zip", "state", "naics"}
        if not reader.fieldnames or not needed <= set(reader.fieldnames):
            raise FirmMatchError(
                f"{path}: expected columns est_id,name,zip,state,naics"
            )
        for row in reader:
            name = (row["name"] or "").strip()
            records.append(
                EstablishmentRecord(
                    est_id=(row["est_id"] or "").strip(),
                    name_raw=name,
                    name_std=standardize(name),
                    zip=(row["zip"] or "").strip(),
                    state=(row["state"] or "").strip().upper(),
                    naics=(row["naics"] or "").strip(),
                    sic=(row.get("sic") or "").strip() or None,
                )
            )
    return EstablishmentIndex(records)


@dataclass(frozen=True)
class FirmMatchResult:
    ad_id: str
    extracted_name: str
    name_std: str
    est_id: str | None
    score: float
    tier: str  # zip | state | national | none
    naics: str | None
    tier_scores: dict[str, float] = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        return {
            "ad_id": self.ad_id,
            "extracted_name": self.extracted_name,
            "name_std": self.name_std,
            "est_id": self.est_id,
            "score": round(self.score, 6),
            "tier": self.tier,
            "naics": self.naics,
        }


def _best_in(
    name_std: str, pool: Iterable[EstablishmentRecord]
) -> tuple[EstablishmentRecord | None, float]:
    best: EstablishmentRecord | None = None
    best_score = -1.0
    for rec in pool:
        score = lev_ratio(name_std, rec.name_std)
        if score > best_score or (
            score == best_score and best is not None and rec.est_id < best.est_id
        ):
            best, best_score = rec, score
    return best, (best_score if best is not None else 0.0)


def cascade_match(
    name_std: str,
    ad_zip: str | None,
    ad_state: str | None,
    index: EstablishmentIndex,
    ad_id: str = "",
    extracted_name: str = "",
    threshold: float = ACCEPT_THRESHOLD,
) -> FirmMatchResult:
    """Zip, then state, then first-character-pruned national matching.

    The first tier whose best ratio reaches the threshold wins. The best
    score seen is always recorded, but est_id and naics stay absent below
    the threshold.
    """
    tier_scores: dict[str, float] = {}
    pools = []
    if ad_zip and ad_zip in index.by_zip:
        pools.append(("zip", index.by_zip[ad_zip]))
    if ad_state and ad_state.upper() in index.by_state:
        pools.append(("state", index.by_state[ad_state.upper()]))
    first = _first_alnum(name_std)
    pools.append(("national", index.by_first_char.get(first, ())))

    best_overall = 0.0
    for tier, pool in pools:
        rec, score = _best_in(name_std, pool)
        if rec is None:
            continue
        tier_scores[tier] = score
        best_overall = max(best_overall, score)
        if score >= threshold:
            return FirmMatchResult(
                ad_id=ad_id,
                extracted_name=extracted_name or name_std,
                name_std=name_std,
                est_id=rec.est_id,
                score=score,
                tier=tier,
                naics=rec.naics,
                tier_scores=tier_scores,
            )
    return FirmMatchResult(
        ad_id=ad_id,
        extracted_name=extracted_name or name_std,
        name_std=name_std,
        est_id=None,
        score=best_overall,
        tier="none",
        naics=None,
        tier_scores=tier_scores,
    )


def resolve_firm_name(
    metadata_name: str | None, external_name: str | None
) -> str | None:
    """Metadata takes precedence; external extraction spans fill gaps."""
    if metadata_name and metadata_name.strip():
        return metadata_name.strip()
    if external_name and external_name.strip():
        return external_name.strip()
    return None
