"""Job-title coding: occupation lookup, hierarchy level, title features.

Titles resolve to SOC and occupation codes by exact lookup against a
normalized reference table first, falling back to nearest-neighbor
search over reference-title embeddings with no minimum similarity, so a
best match always comes back. Hierarchy level is the sum of a base map
value (role rank) and a stepper map value (modifier), both loaded from
CSV; title features are plain dictionary hits on the title text.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .embed_store import EmbeddingMatrix, HashEmbedder, nearest
from .knowledge_map import Matcher, scan, tokenize

BASE_VALUES = {-10, 0, 10, 20, 30, 40, 50, 60}
STEPPER_RANGE = (-7, 4)

_BRACKETED_RE = re.compile(r"\([^)]*\)|\[[^\]]*\]")
_PUNCT_RE = re.compile(r"[^a-z0-9]+")


class TitleMatchError(ValueError):
    pass


def normalize_title(title: str) -> str:
    """Lowercase, drop bracketed suffixes (locations, req ids), strip
    punctuation, collapse whitespace."""
    text = _BRACKETED_RE.sub(" ", title.lower())
    return _PUNCT_RE.sub(" ", text).strip()


@dataclass
class TitleIndex:
    exact_table: dict[str, list[tuple[str, str]]]  # norm title -> [(soc, onet)]
    exact_refs: dict[str, list[str]]               # norm title -> reference ids
    title_matrix: EmbeddingMatrix | None
    title_to_code: dict[str, tuple[str, str]]      # reference id -> (soc, onet)

    @property
    def empty(self) -> bool:
        return not self.exact_table


def load_reference_titles(path: str | Path) -> list[tuple[str, str, str]]:
    """Reference rows (onet_code, soc_code, title) from CSV."""
    rows: list[tuple[str, str, str]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        needed = {"onet_code", "soc_code", "title"}
        if not reader.fieldnames or not needed <= set(reader.fieldnames):
            raise TitleMatchError(f"{path}: expected columns onet_code,soc_code,title")
        for row in reader:
            onet = (row["onet_code"] or "").strip()
            soc = (row["soc_code"] or "").strip()
            title = (row["title"] or "").strip()
            if onet and soc and title:
                rows.append((onet, soc, title))
    return rows


def build_title_index(
    rows: Sequence[tuple[str, str, str]],
    embedder: HashEmbedder | None = None,
    matrix: EmbeddingMatrix | None = None,
) -> TitleIndex:
    """Index reference (onet, soc, title) rows for exact and NN lookup.

    Reference ids are "r<i>" by row order; a prebuilt matrix must use the
    same ids. Without an embedder or matrix the index still supports
    exact lookup.
    """
    exact_table: dict[str, list[tuple[str, str]]] = {}
    exact_refs: dict[str, list[str]] = {}
    title_to_code: dict[str, tuple[str, str]] = {}
    ids: list[str] = []
    texts: list[str] = []
    for i, (onet, soc, title) in enumerate(rows):
        norm = normalize_title(title)
        if not norm:
            continue
        ref_id = f"r{i}"
        pair = (soc, onet)
        exact_table.setdefault(norm, [])
        if pair not in exact_table[norm]:
            exact_table[norm].append(pair)
        exact_refs.setdefault(norm, []).append(ref_id)
        title_to_code[ref_id] = pair
        ids.append(ref_id)
        texts.append(norm)
    if matrix is None and embedder is not None:
        matrix = embedder.embed_many(ids, texts)
    if matrix is not None:
        for ref_id in ids:
            if ref_id not in matrix:
                raise TitleMatchError(f"reference id {ref_id} missing from title matrix")
    for pairs in exact_table.values():
        pairs.sort()
    return TitleIndex(exact_table, exact_refs, matrix, title_to_code)


@dataclass(frozen=True)
class CodeResult:
    soc_code: str
    onet_code: str
    match_kind: str            # "exact" or "nn"
    nn_score: float | None     # absent for exact matches


def code_title(
    title: str,
    index: TitleIndex,
    query_vec: np.ndarray | None = None,
    embedder: HashEmbedder | None = None,
) -> tuple[CodeResult, list[tuple[str, str]]]:
    """Resolve a title to (result, candidate code list).

    Exact lookup wins whenever the normalized title is in the reference
    table; with several codes sharing the title, all are reported as
    candidates and the one whose reference embedding sits nearest the
    query is selected (ties by ascending code). With no exact hit the
    nearest reference title wins outright, no minimum score.
    """
    if not title.strip():
        raise TitleMatchError("empty title")
    if index.empty:
        raise TitleMatchError("empty title index")
    norm = normalize_title(title)

    def query_vector() -> np.ndarray | None:
        if query_vec is not None:
            return np.asarray(query_vec, dtype=np.float64)
        if embedder is not None:
            return embedder.embed(norm).astype(np.float64)
        return None

    candidates = index.exact_table.get(norm)
    if candidates:
        if len(candidates) == 1:
            pair = candidates[0]
        else:
            pair = candidates[0]
            q = query_vector()
            if q is not None and index.title_matrix is not None:
                best = None
                for ref_id in index.exact_refs[norm]:
                    if ref_id not in index.title_matrix:
                        continue
                    row = index.title_matrix.row(ref_id).astype(np.float64)
                    score = float(row @ q / (np.linalg.norm(row) * np.linalg.norm(q)))
                    key = (-score, index.title_to_code[ref_id])
                    if best is None or key < best[0]:
                        best = (key, index.title_to_code[ref_id])
                if best is not None:
                    pair = best[1]
        return CodeResult(pair[0], pair[1], "exact", None), list(candidates)

    if index.title_matrix is None:
        raise TitleMatchError("no title embeddings available for fallback matching")
    q = query_vector()
    if q is None:
        raise TitleMatchError("no query vector or embedder for fallback matching")
    (ref_id, score), = nearest(q, index.title_matrix, 1)
    soc, onet = index.title_to_code[ref_id]
    return CodeResult(soc, onet, "nn", score), [(soc, onet)]


# --- hierarchy --------------------------------------------------------------

@dataclass
class HierarchyMaps:
    base: dict[tuple[str, ...], int]
    stepper: dict[tuple[str, ...], int]


def _load_term_values(path: str | Path) -> dict[tuple[str, ...], int]:
    out: dict[tuple[str, ...], int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or "term" not in reader.fieldnames or \
                "value" not in reader.fieldnames:
            raise TitleMatchError(f"{path}: expected columns term,value")
        for row in reader:
            term = (row["term"] or "").strip()
            if not term:
                continue
            form = tuple(t.text for t in tokenize(term))
            out[form] = int(row["value"])
    return out


def load_hierarchy_maps(base_path: str | Path, stepper_path: str | Path) -> HierarchyMaps:
    base = _load_term_values(base_path)
    for form, value in base.items():
        if value not in BASE_VALUES:
            raise TitleMatchError(f"base term {' '.join(form)}: value {value} off the scale")
    stepper = _load_term_values(stepper_path)
    lo, hi = STEPPER_RANGE
    for form, value in stepper.items():
        if not lo <= value <= hi:
            raise TitleMatchError(
                f"stepper term {' '.join(form)}: value {value} outside [{lo}, {hi}]"
            )
    return HierarchyMaps(base, stepper)


def _find_occurrences(
    tokens: list[str], forms: dict[tuple[str, ...], int]
) -> list[tuple[int, int, int]]:
    """All (start, end, value) occurrences of map terms in the token list."""
    found: list[tuple[int, int, int]] = []
    max_len = max((len(f) for f in forms), default=0)
    for i in range(len(tokens)):
        for length in range(1, max_len + 1):
            if i + length > len(tokens):
                break
            form = tuple(tokens[i : i + length])
            if form in forms:
                found.append((i, i + length, forms[form]))
    return found


def hierarchy(title: str, maps: HierarchyMaps) -> int:
    """Base value of the highest base term present (default 0) plus the
    first stepper term left to right (default 0).

    Tokens covered by base-term occurrences are consumed, so steppers
    never re-fire inside a matched base phrase ("Team Leader" stays 10).
    """
    tokens = [t.text for t in tokenize(normalize_title(title))]
    base_hits = _find_occurrences(tokens, maps.base)
    base_value = max((v for _, _, v in base_hits), default=0)
    consumed = set()
    for start, end, _ in base_hits:
        consumed.update(range(start, end))
    stepper_value = 0
    max_len = max((len(f) for f in maps.stepper), default=0)
    for i in range(len(tokens)):
        if i in consumed:
            continue
        matched = None
        for length in range(max_len, 0, -1):
            if i + length > len(tokens):
                continue
            span = range(i, i + length)
            if any(p in consumed for p in span):
                continue
            form = tuple(tokens[i : i + length])
            if form in maps.stepper:
                matched = maps.stepper[form]
                break
        if matched is not None:
            stepper_value = matched
            break
    return base_value + stepper_value


def title_features(title: str, feature_matcher: Matcher) -> frozenset[str]:
    """All feature labels whose dictionary terms occur in the title."""
    return frozenset(hit.uci for hit in scan(feature_matcher, title))
