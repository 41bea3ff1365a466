"""Two-stage sentence extractor: candidate filter, then semantic match.

Stage 1 partitions sentences into candidates and rejects. Stage 2 scores
each candidate against labeled statement sets by cosine similarity and
keeps the single best label, retained only when the score reaches the
configured threshold (0.87 for skills, 0.90 for tasks by default).

The filter slot takes anything with an is_candidate(sentence) method: a
built-in cue-phrase baseline ships with the engine, and externally
computed per-sentence labels can be plugged in from a JSONL file, which
is how real classifier output enters the pipeline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import JobAdRecord, Sentence, segment
from .embed_store import EmbeddingMatrix, HashEmbedder, LabeledSet
from .knowledge_map import normalize_term

DEFAULT_THRESHOLDS = {"skill": 0.87, "task": 0.90}

HISTOGRAM_LOW = 0.80
UNDER_BIN = "<0.80"


def sentence_vector_id(ad_id: str, index: int) -> str:
    """Id convention tying corpus sentences to their vectors: "ad_id:index"."""
    return f"{ad_id}:{index}"


class PipelineError(ValueError):
    pass


class AcceptAllFilter:
    name = "accept_all"
    version = "1"

    def is_candidate(self, sentence: Sentence) -> bool:
        return True


class KeywordCueFilter:
    """Baseline stage-1 filter: a sentence is a candidate when any cue
    phrase appears on token boundaries."""

    def __init__(self, name: str, cues: Iterable[str], version: str = "1") -> None:
        self.name = name
        self.version = version
        self.cues = tuple(" ".join(normalize_term(c)) for c in cues if normalize_term(c))

    @classmethod
    def from_file(cls, name: str, path: str | Path, version: str = "1") -> "KeywordCueFilter":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        cues = [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")]
        return cls(name, cues, version)

    def is_candidate(self, sentence: Sentence) -> bool:
        padded = f" {' '.join(normalize_term(sentence.text))} "
        return any(f" {cue} " in padded for cue in self.cues)


class ExternalLabelFilter:
    """Per-sentence candidate labels computed outside the engine.

    Expects JSONL rows {ad_id, sentence_idx, candidate}. Sentences with
    no label are treated as non-candidates and counted as diagnostics.
    """

    def __init__(self, labels: dict[tuple[str, int], bool],
                 name: str = "external", version: str = "1") -> None:
        self.name = name
        self.version = version
        self.labels = labels
        self.unlabeled: int = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ExternalLabelFilter":
        labels: dict[tuple[str, int], bool] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            labels[(str(row["ad_id"]), int(row["sentence_idx"]))] = bool(row["candidate"])
        return cls(labels, name=f"external:{Path(path).name}")

    def is_candidate(self, sentence: Sentence) -> bool:
        key = (sentence.ad_id, sentence.index)
        if key not in self.labels:
            self.unlabeled += 1
            return False
        return self.labels[key]


@dataclass
class PipelineConfig:
    task_name: str
    threshold: float
    label_sets: list[LabeledSet]
    label_matrix: EmbeddingMatrix
    keep_below_threshold: bool = False
    match_mode: str = "member_max"  # or "title": one vector per label code

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise PipelineError(f"threshold must be in (0, 1]: {self.threshold}")
        if self.match_mode not in ("member_max", "title"):
            raise PipelineError(f"unknown match mode: {self.match_mode!r}")

    @classmethod
    def for_task(cls, task_name: str, label_sets: list[LabeledSet],
                 label_matrix: EmbeddingMatrix,
                 threshold: float | None = None, **kwargs) -> "PipelineConfig":
        if threshold is None:
            threshold = DEFAULT_THRESHOLDS.get(task_name, 0.87)
        return cls(task_name, threshold, label_sets, label_matrix, **kwargs)


@dataclass(frozen=True)
class MatchResult:
    ad_id: str
    sentence_index: int
    label_code: str
    score: float
    stage1_passed: bool
    retained: bool

    def to_json(self) -> dict:
        return {
            "ad_id": self.ad_id,
            "sentence_idx": self.sentence_index,
            "label_code": self.label_code,
            "score": round(self.score, 6),
        }


@dataclass
class StagePartition:
    candidates: list[Sentence] = field(default_factory=list)
    rejected: list[Sentence] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def run_stage1(filter_: object, sentences: Sequence[Sentence]) -> StagePartition:
    """Partition sentences; exhaustive and disjoint by construction.

    A filter that throws routes the sentence to the rejected side with a
    diagnostic rather than dropping it.
    """
    part = StagePartition()
    for sent in sentences:
        try:
            ok = bool(filter_.is_candidate(sent))
        except Exception as exc:  # noqa: BLE001 - fail closed per contract
            part.rejected.append(sent)
            part.diagnostics.append(
                f"filter error on {sent.ad_id}:{sent.index}: {exc}"
            )
            continue
        (part.candidates if ok else part.rejected).append(sent)
    return part


def _label_member_rows(
    config: PipelineConfig,
) -> tuple[np.ndarray, list[str]]:
    """Stack member vectors with their owning label codes, label-sorted."""
    rows: list[np.ndarray] = []
    owners: list[str] = []
    for labeled in sorted(config.label_sets, key=lambda s: s.label_code):
        member_ids = (
            (labeled.label_code,) if config.match_mode == "title" else labeled.member_ids
        )
        for mid in member_ids:
            if mid not in config.label_matrix:
                raise PipelineError(
                    f"label {labeled.label_code}: member {mid} missing from label matrix"
                )
            rows.append(config.label_matrix.row(mid))
            owners.append(labeled.label_code)
    if not rows:
        raise PipelineError("no label members configured")
    return np.asarray(rows, dtype=np.float64), owners


def run_stage2(
    candidates: Sequence[Sentence],
    config: PipelineConfig,
    sentence_matrix: EmbeddingMatrix,
) -> tuple[list[MatchResult], list[str]]:
    """Match each candidate to its single best label code.

    The per-label score is the max cosine over that label's member
    vectors; the winner is the max over labels, ties to the smallest
    label code. Candidates without a vector produce diagnostics.
    """
    members, owners = _label_member_rows(config)
    results: list[MatchResult] = []
    diagnostics: list[str] = []
    for sent in sorted(candidates, key=lambda s: (s.ad_id, s.index)):
        vid = sentence_vector_id(sent.ad_id, sent.index)
        if vid not in sentence_matrix:
            diagnostics.append(f"no vector for sentence {vid}")
            continue
        v = sentence_matrix.row(vid).astype(np.float64)
        sims = members @ v
        best_score = -math.inf
        best_label = ""
        for sim, owner in zip(sims, owners):
            if sim > best_score or (sim == best_score and owner < best_label):
                best_score, best_label = float(sim), owner
        results.append(
            MatchResult(
                ad_id=sent.ad_id,
                sentence_index=sent.index,
                label_code=best_label,
                score=best_score,
                stage1_passed=True,
                retained=best_score >= config.threshold,
            )
        )
    return results, diagnostics


def histogram_bin(score: float) -> str:
    """0.01-wide score bins over [0.80, 1.00]; lower scores pool under."""
    if score < HISTOGRAM_LOW:
        return UNDER_BIN
    clipped = min(score, 1.0)
    edge = math.floor(round(clipped * 100, 6)) / 100
    return f"{edge:.2f}"


def empty_histogram() -> dict[str, int]:
    bins = {UNDER_BIN: 0}
    for cents in range(80, 101):
        bins[f"{cents / 100:.2f}"] = 0
    return bins


@dataclass
class PipelineStats:
    n_sentences: int = 0
    n_candidates: int = 0
    n_rejected: int = 0
    n_scored: int = 0
    n_retained: int = 0
    histogram: dict[str, int] = field(default_factory=empty_histogram)
    diagnostics: list[str] = field(default_factory=list)

    def merge(self, other: "PipelineStats") -> "PipelineStats":
        merged = PipelineStats(
            n_sentences=self.n_sentences + other.n_sentences,
            n_candidates=self.n_candidates + other.n_candidates,
            n_rejected=self.n_rejected + other.n_rejected,
            n_scored=self.n_scored + other.n_scored,
            n_retained=self.n_retained + other.n_retained,
            diagnostics=self.diagnostics + other.diagnostics,
        )
        for key in merged.histogram:
            merged.histogram[key] = self.histogram[key] + other.histogram[key]
        return merged

    def to_json(self) -> dict:
        return {
            "n_sentences": self.n_sentences,
            "n_candidates": self.n_candidates,
            "n_rejected": self.n_rejected,
            "n_scored": self.n_scored,
            "n_retained": self.n_retained,
            "score_histogram": self.histogram,
            "diagnostics": self.diagnostics,
        }


def run_pipeline(
    ads: Sequence[JobAdRecord],
    filter_: object,
    config: PipelineConfig,
    sentence_matrix: EmbeddingMatrix | None = None,
    embedder: HashEmbedder | None = None,
    map_fn: Callable | None = None,
) -> tuple[list[MatchResult], PipelineStats]:
    """Segment ads, filter sentences, and match the survivors.

    Sentence vectors come from sentence_matrix when supplied, otherwise
    from the embedder. Ads process independently, so a parallel map_fn
    (same signature as builtins.map) can fan the work out; merged stats
    are order-independent.
    """
    if sentence_matrix is None and embedder is None:
        raise PipelineError("need a sentence matrix or an embedder")

    def process(ad: JobAdRecord) -> tuple[list[MatchResult], PipelineStats]:
        sentences = segment(ad.body, ad_id=ad.id)
        part = run_stage1(filter_, sentences)
        matrix = sentence_matrix
        if matrix is None:
            ids = [sentence_vector_id(s.ad_id, s.index) for s in part.candidates]
            matrix = embedder.embed_many(ids, [s.text for s in part.candidates])
        results, diags = run_stage2(part.candidates, config, matrix)
        stats = PipelineStats(
            n_sentences=len(sentences),
            n_candidates=len(part.candidates),
            n_rejected=len(part.rejected),
            n_scored=len(results),
            n_retained=sum(r.retained for r in results),
            diagnostics=part.diagnostics + diags,
        )
        for res in results:
            stats.histogram[histogram_bin(res.score)] += 1
        if not config.keep_below_threshold:
            kept = [r for r in results if r.retained]
        else:
            kept = results
        return kept, stats

    mapper = map_fn or map
    all_results: list[MatchResult] = []
    total = PipelineStats()
    for results, stats in mapper(process, ads):
        all_results.extend(results)
        total = total.merge(stats)
    all_results.sort(key=lambda r: (r.ad_id, r.sentence_index))
    return all_results, total


def load_label_statements(path: str | Path, embedder: HashEmbedder
                          ) -> tuple[list[LabeledSet], EmbeddingMatrix]:
    """Build label sets from a long-format CSV of (code, statement) rows."""
    import csv as _csv

    by_code: dict[str, list[str]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.DictReader(fh)
        if not reader.fieldnames or "code" not in reader.fieldnames or \
                "statement" not in reader.fieldnames:
            raise PipelineError(f"{path}: expected columns code,statement")
        for row in reader:
            code = (row.get("code") or "").strip()
            statement = (row.get("statement") or "").strip()
            if code and statement:
                by_code.setdefault(code, []).append(statement)
    ids: list[str] = []
    texts: list[str] = []
    sets: list[LabeledSet] = []
    for code in sorted(by_code):
        member_ids = []
        for i, statement in enumerate(by_code[code]):
            mid = f"{code}#{i}"
            ids.append(mid)
            texts.append(statement)
            member_ids.append(mid)
        sets.append(LabeledSet(code, tuple(member_ids)))
    return sets, embedder.embed_many(ids, texts)


def load_label_sets(sidecar_path: str | Path) -> list[LabeledSet]:
    """Read a {label_code: [member ids]} sidecar JSON."""
    data = json.loads(Path(sidecar_path).read_text(encoding="utf-8"))
    return [LabeledSet(code, tuple(ids)) for code, ids in sorted(data.items())]
