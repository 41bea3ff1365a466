"""Compiled term dictionaries with concept codes and association rules.

A knowledge map is a set of surface forms, each resolving to a unique
concept identifier (UCI), plus rules that suppress or require matches
based on nearby context. Compilation builds a token-level Aho-Corasick
automaton so a single pass over the text finds every surface form at
once, regardless of dictionary size.

Matching is case-insensitive and token-exact: multi-word forms must be
contiguous tokens, overlaps resolve longest-match-first then leftmost,
and identical spans from different entries are all emitted.
"""

from __future__ import annotations

import csv
import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

NEGATION = "NEGATION"
CO_OCCUR = "CO_OCCUR"

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class Token(NamedTuple):
    text: str
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    """Lowercase alphanumeric tokens with character offsets.

    Hyphens and all other punctuation separate tokens, so "Seven-Eleven"
    tokenizes as ("seven", "eleven").
    """
    return [
        Token(m.group(), m.start(), m.end())
        for m in _TOKEN_RE.finditer(text.lower())
    ]


def normalize_term(term: str) -> tuple[str, ...]:
    """Canonical token sequence for a dictionary surface form."""
    return tuple(t.text for t in tokenize(term))


class KnowledgeMapError(ValueError):
    pass


@dataclass(frozen=True)
class MapEntry:
    """One concept: surface forms (token sequences) mapping to a UCI."""

    surface_forms: tuple[tuple[str, ...], ...]
    uci: str
    label: str = ""

    @classmethod
    def from_terms(cls, terms: Sequence[str], uci: str, label: str = "") -> "MapEntry":
        forms = tuple(normalize_term(t) for t in terms)
        return cls(surface_forms=forms, uci=uci, label=label)

    def __post_init__(self) -> None:
        if not self.uci:
            raise KnowledgeMapError("entry uci must be non-empty")
        if not self.surface_forms:
            raise KnowledgeMapError(f"entry {self.uci}: no surface forms")
        for form in self.surface_forms:
            if not form or any(not tok for tok in form):
                raise KnowledgeMapError(
                    f"entry {self.uci}: empty surface form after normalization"
                )


@dataclass(frozen=True)
class AssociationRule:
    """Context rule applied after raw matching.

    NEGATION drops hits for trigger_uci when any guard term occurs within
    `window` tokens; CO_OCCUR keeps trigger_uci hits only when a hit for
    guard_uci occurs within `window` tokens.
    """

    rule_id: str
    kind: str
    trigger_uci: str
    guard_terms: tuple[str, ...] = ()
    guard_uci: str | None = None
    window: int = 6

    def __post_init__(self) -> None:
        if self.kind not in (NEGATION, CO_OCCUR):
            raise KnowledgeMapError(f"rule {self.rule_id}: unknown kind {self.kind!r}")
        if self.window < 1:
            raise KnowledgeMapError(f"rule {self.rule_id}: window must be >= 1")
        if self.kind == NEGATION and not self.guard_terms:
            raise KnowledgeMapError(f"rule {self.rule_id}: NEGATION needs guard_terms")
        if self.kind == CO_OCCUR and not self.guard_uci:
            raise KnowledgeMapError(f"rule {self.rule_id}: CO_OCCUR needs guard_uci")


@dataclass(frozen=True)
class DictionaryHit:
    ad_id: str
    uci: str
    term: str
    start_token: int
    end_token: int  # exclusive

    def to_json(self) -> dict:
        return {
            "ad_id": self.ad_id,
            "uci": self.uci,
            "term": self.term,
            "start_token": self.start_token,
            "end_token": self.end_token,
        }


class _Automaton:
    """Token-alphabet Aho-Corasick with outputs closed over fail links."""

    def __init__(self, patterns: Iterable[tuple[tuple[str, ...], object]]) -> None:
        self.goto: list[dict[str, int]] = [{}]
        outputs: list[list[tuple[int, object]]] = [[]]
        for tokens, payload in patterns:
            state = 0
            for tok in tokens:
                nxt = self.goto[state].get(tok)
                if nxt is None:
                    self.goto.append({})
                    outputs.append([])
                    nxt = len(self.goto) - 1
                    self.goto[state][tok] = nxt
                state = nxt
            outputs[state].append((len(tokens), payload))
        self.fail = [0] * len(self.goto)
        self.out = outputs
        queue: deque[int] = deque()
        for state in self.goto[0].values():
            queue.append(state)
        while queue:
            state = queue.popleft()
            for tok, nxt in self.goto[state].items():
                queue.append(nxt)
                f = self.fail[state]
                while f and tok not in self.goto[f]:
                    f = self.fail[f]
                self.fail[nxt] = self.goto[f].get(tok, 0)
                self.out[nxt] = self.out[nxt] + self.out[self.fail[nxt]]

    def matches(self, tokens: Sequence[str]) -> Iterable[tuple[int, int, object]]:
        """Yield (start, end_exclusive, payload) over the token sequence."""
        state = 0
        goto, fail, out = self.goto, self.fail, self.out
        for i, tok in enumerate(tokens):
            while state and tok not in goto[state]:
                state = fail[state]
            state = goto[state].get(tok, 0)
            if out[state]:
                for length, payload in out[state]:
                    yield (i - length + 1, i + 1, payload)


@dataclass(frozen=True)
class _Candidate:
    start: int
    end: int
    uci: str
    term: str
    entry_order: int


class Matcher:
    """Immutable compiled knowledge map; scan calls are thread-safe."""

    def __init__(
        self,
        entries: Sequence[MapEntry],
        rules: Sequence[AssociationRule],
    ) -> None:
        self.entries = tuple(entries)
        self.rules = tuple(rules)
        patterns: list[tuple[tuple[str, ...], object]] = []
        for order, entry in enumerate(self.entries):
            for form in entry.surface_forms:
                patterns.append((form, (order, " ".join(form))))
        self._automaton = _Automaton(patterns)
        guard_patterns: list[tuple[tuple[str, ...], object]] = []
        self._negations: dict[str, list[AssociationRule]] = {}
        self._co_occurs: dict[str, list[AssociationRule]] = {}
        for rule in self.rules:
            if rule.kind == NEGATION:
                self._negations.setdefault(rule.trigger_uci, []).append(rule)
                for term in rule.guard_terms:
                    form = normalize_term(term)
                    if not form:
                        raise KnowledgeMapError(
                            f"rule {rule.rule_id}: empty guard term {term!r}"
                        )
                    guard_patterns.append((form, rule.rule_id))
            else:
                self._co_occurs.setdefault(rule.trigger_uci, []).append(rule)
        self._guard_automaton = _Automaton(guard_patterns) if guard_patterns else None

    def scan(self, text: str, ad_id: str = "") -> list[DictionaryHit]:
        return scan(self, text, ad_id)


def compile(
    entries: Sequence[MapEntry],
    rules: Sequence[AssociationRule] = (),
) -> Matcher:
    """Build a Matcher. Pure: inputs are never mutated.

    Raises on conflicting rule ids or empty surface forms.
    """
    seen_ids: dict[str, AssociationRule] = {}
    for rule in rules:
        if rule.rule_id in seen_ids and seen_ids[rule.rule_id] != rule:
            raise KnowledgeMapError(f"conflicting rule id: {rule.rule_id}")
        seen_ids[rule.rule_id] = rule
    return Matcher(entries, rules)


def resolve_overlaps(candidates: Sequence[_Candidate]) -> list[_Candidate]:
    """Longest-match-wins, then leftmost; identical spans all survive."""
    spans = sorted(
        {(c.start, c.end) for c in candidates},
        key=lambda se: (-(se[1] - se[0]), se[0]),
    )
    chosen: list[tuple[int, int]] = []
    for s, e in spans:
        if all(e <= cs or s >= ce for cs, ce in chosen):
            chosen.append((s, e))
    keep = set(chosen)
    return [c for c in candidates if (c.start, c.end) in keep]


def _span_distance(a_start: int, a_end: int, b_start: int, b_end: int) -> int:
    """Token distance between two spans; 0 when they overlap, 1 when adjacent."""
    if a_end <= b_start:
        return b_start - a_end + 1
    if b_end <= a_start:
        return a_start - b_end + 1
    return 0


def _apply_rules(
    matcher: Matcher,
    hits: list[_Candidate],
    token_texts: Sequence[str],
) -> list[_Candidate]:
    if not matcher.rules:
        return hits
    guard_spans: dict[str, list[tuple[int, int]]] = {}
    if matcher._guard_automaton is not None:
        for start, end, rule_id in matcher._guard_automaton.matches(token_texts):
            guard_spans.setdefault(rule_id, []).append((start, end))

    # NEGATION first, then CO_OCCUR against the surviving hit set.
    survivors: list[_Candidate] = []
    for hit in hits:
        negated = False
        for rule in matcher._negations.get(hit.uci, ()):
            for g_start, g_end in guard_spans.get(rule.rule_id, ()):
                if _span_distance(hit.start, hit.end, g_start, g_end) <= rule.window:
                    negated = True
                    break
            if negated:
                break
        if not negated:
            survivors.append(hit)

    if not matcher._co_occurs:
        return survivors
    final: list[_Candidate] = []
    for hit in survivors:
        rules = matcher._co_occurs.get(hit.uci)
        if not rules:
            final.append(hit)
            continue
        satisfied = False
        for rule in rules:
            for other in survivors:
                if other is hit or other.uci != rule.guard_uci:
                    continue
                if _span_distance(hit.start, hit.end, other.start, other.end) <= rule.window:
                    satisfied = True
                    break
            if satisfied:
                break
        if satisfied:
            final.append(hit)
    return final


def scan(matcher: Matcher, text: str, ad_id: str = "") -> list[DictionaryHit]:
    """Single-pass scan of text against a compiled knowledge map."""
    # hits carry token indices only, so the cheap findall path suffices
    token_texts = _TOKEN_RE.findall(text.lower())
    if not token_texts:
        return []
    candidates = [
        _Candidate(start, end, matcher.entries[order].uci, term, order)
        for start, end, (order, term) in matcher._automaton.matches(token_texts)
    ]
    resolved = resolve_overlaps(candidates)
    kept = _apply_rules(matcher, resolved, token_texts)
    kept.sort(key=lambda c: (c.start, c.end, c.uci, c.entry_order))
    return [
        DictionaryHit(ad_id, c.uci, c.term, c.start, c.end) for c in kept
    ]


# --- dictionary files -------------------------------------------------------

# term column plus a code and/or label column, by dictionary family
_SCHEMA_COLUMNS: dict[str, tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]] = {
    # schema: (term aliases, uci aliases, label aliases)
    "benefits": (("term",), ("uci", "code"), ("label",)),
    "education": (("term",), ("uci", "code"), ("label",)),
    "shifts": (("term",), ("uci", "code"), ("label",)),
    "background_checks": (("term",), ("uci", "code"), ("label",)),
    "riasec": (("term", "keyword"), ("uci", "code"), ("label",)),
    "tools_tech": (("term", "title"), ("uci", "commodity_code", "code"), ("label",)),
    "generic": (("term",), ("uci", "code"), ("label",)),
}

# families where the label doubles as the code when no code column exists
_LABEL_AS_UCI = {"benefits", "education", "shifts", "background_checks"}


def _slug(label: str) -> str:
    return "_".join(normalize_term(label))


@dataclass
class DictionaryLoad:
    entries: list[MapEntry] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)
    excluded: list[str] = field(default_factory=list)


def load_exclusions(path: str | Path) -> set[tuple[str, ...]]:
    """Plain-text exclusion list, one false-positive-prone term per line."""
    forms: set[tuple[str, ...]] = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        form = normalize_term(line)
        if form:
            forms.add(form)
    return forms


def load_dictionary(
    path: str | Path,
    schema: str = "generic",
    exclusions: set[tuple[str, ...]] | None = None,
) -> DictionaryLoad:
    """Read a dictionary CSV into MapEntry rows.

    Blank rows are skipped and reported; a missing required column is
    fatal and names the column. Terms on the exclusion list are dropped
    and reported.
    """
    if schema not in _SCHEMA_COLUMNS:
        raise KnowledgeMapError(f"unknown dictionary schema: {schema!r}")
    term_cols, uci_cols, label_cols = _SCHEMA_COLUMNS[schema]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip().lower() for h in reader.fieldnames or []]
        term_col = next((c for c in term_cols if c in header), None)
        if term_col is None:
            raise KnowledgeMapError(
                f"{path}: missing required column {term_cols[0]!r} for schema {schema}"
            )
        uci_col = next((c for c in uci_cols if c in header), None)
        label_col = next((c for c in label_cols if c in header), None)
        if uci_col is None and not (schema in _LABEL_AS_UCI and label_col):
            raise KnowledgeMapError(
                f"{path}: missing required column {uci_cols[0]!r} for schema {schema}"
            )
        load = DictionaryLoad()
        for n, raw in enumerate(reader, start=2):
            row = {(k or "").strip().lower(): (v or "").strip() for k, v in raw.items()}
            term = row.get(term_col, "")
            uci = row.get(uci_col, "") if uci_col else ""
            label = row.get(label_col, "") if label_col else ""
            if not uci and schema in _LABEL_AS_UCI and label:
                uci = _slug(label)
            if not term or not uci:
                load.skipped.append((n, "blank term or code"))
                continue
            form = normalize_term(term)
            if not form:
                load.skipped.append((n, f"term normalizes to nothing: {term!r}"))
                continue
            if exclusions and form in exclusions:
                load.excluded.append(term)
                continue
            load.entries.append(
                MapEntry(surface_forms=(form,), uci=uci, label=label or term)
            )
    return load
