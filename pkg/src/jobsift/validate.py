"""Validation mathematics: threshold simulation, rater statistics,
stratified sampling, and benchmark correlation.

The confusion simulation reconstructs expected TP/FP/TN/FN counts at a
retention threshold from a binned score table: per-bin frequency of
matches and per-bin accuracy, plus the count of sentences the stage-1
filter flagged and rejected and the filter's false-negative rate. Edge
bins may pool several score points (0.80-0.84 style labels) and are
first-class.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

FREQ_SUM_TOLERANCE = 1e-6


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Bin:
    label: str
    low: float
    high: float
    freq: float
    accuracy: float


@dataclass
class BinTable:
    bins: list[Bin]

    def __post_init__(self) -> None:
        if not self.bins:
            raise ValidationError("empty bin table")
        total = sum(b.freq for b in self.bins)
        if abs(total - 1.0) > FREQ_SUM_TOLERANCE:
            raise ValidationError(f"bin frequencies sum to {total}, expected 1")
        for prev, cur in zip(self.bins, self.bins[1:]):
            if cur.low <= prev.low:
                raise ValidationError(
                    f"bins out of order: {prev.label} then {cur.label}"
                )
        for b in self.bins:
            if not 0.0 <= b.accuracy <= 1.0:
                raise ValidationError(f"bin {b.label}: accuracy {b.accuracy} not in [0,1]")
            if b.freq < 0:
                raise ValidationError(f"bin {b.label}: negative frequency")

    @property
    def edges(self) -> list[float]:
        return [b.low for b in self.bins]


def _parse_bin_label(label: str) -> tuple[float, float]:
    parts = label.split("-")
    try:
        if len(parts) == 1:
            low = float(parts[0])
            return low, low
        if len(parts) == 2:
            return float(parts[0]), float(parts[1])
    except ValueError:
        pass
    raise ValidationError(f"cannot parse bin label: {label!r}")


def load_bin_table(path: str | Path) -> BinTable:
    """CSV with columns bin_label, freq, accuracy."""
    bins: list[Bin] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        needed = {"bin_label", "freq", "accuracy"}
        if not reader.fieldnames or not needed <= set(reader.fieldnames):
            raise ValidationError(f"{path}: expected columns bin_label,freq,accuracy")
        for row in reader:
            label = (row["bin_label"] or "").strip()
            if not label:
                continue
            low, high = _parse_bin_label(label)
            bins.append(
                Bin(label, low, high, float(row["freq"]), float(row["accuracy"]))
            )
    return BinTable(bins)


@dataclass(frozen=True)
class ConfusionEstimate:
    threshold: float
    tp: float
    fp: float
    tn: float
    fn: float

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def to_json(self) -> dict:
        return {
            "threshold": self.threshold,
            "tp": round(self.tp, 3),
            "fp": round(self.fp, 3),
            "tn": round(self.tn, 3),
            "fn": round(self.fn, 3),
            "precision": round(self.precision, 6),
            "recall": round(self.recall, 6),
            "f1": round(self.f1, 6),
        }


def simulate_confusion(
    bins: BinTable,
    n_flagged: float,
    n_unflagged: float,
    stage1_fnr: float,
    threshold: float,
) -> ConfusionEstimate:
    """Expected confusion counts when retaining matches scored >= threshold.

    Retained mass splits into true and false positives by per-bin
    accuracy; discarded mass contributes its accurate share to the false
    negatives, as do stage-1 misses (n_unflagged * stage1_fnr). True
    negatives are the remainder, conserving the total population.
    """
    if not 0.0 <= stage1_fnr <= 1.0:
        raise ValidationError(f"stage1_fnr must be in [0,1]: {stage1_fnr}")
    edges = bins.edges
    if not any(math.isclose(threshold, e, abs_tol=1e-9) for e in edges):
        below = max((e for e in edges if e < threshold), default=None)
        above = min((e for e in edges if e > threshold), default=None)
        raise ValidationError(
            f"threshold {threshold} is not a bin edge; nearest edges are "
            f"{below} and {above}"
        )
    tp = fp = fn_below = 0.0
    for b in bins.bins:
        if b.low >= threshold - 1e-9:
            tp += n_flagged * b.freq * b.accuracy
            fp += n_flagged * b.freq * (1.0 - b.accuracy)
        else:
            fn_below += n_flagged * b.freq * b.accuracy
    fn = fn_below + n_unflagged * stage1_fnr
    tn = (n_flagged + n_unflagged) - tp - fp - fn
    return ConfusionEstimate(threshold, tp, fp, tn, fn)


def simulation_curve(
    bins: BinTable,
    n_flagged: float,
    n_unflagged: float,
    stage1_fnr: float,
) -> list[ConfusionEstimate]:
    """The full tradeoff curve: one estimate per bin edge."""
    return [
        simulate_confusion(bins, n_flagged, n_unflagged, stage1_fnr, edge)
        for edge in bins.edges
    ]


# --- rater statistics -------------------------------------------------------

def _check_table(table: Sequence[Sequence[float]]) -> float:
    n = len(table)
    if n == 0 or any(len(row) != n for row in table):
        raise ValidationError("rater table must be square and non-empty")
    total = float(sum(sum(row) for row in table))
    if total <= 0:
        raise ValidationError("rater table total must be positive")
    if any(cell < 0 for row in table for cell in row):
        raise ValidationError("rater table counts must be non-negative")
    return total


def agreement(table: Sequence[Sequence[float]]) -> float:
    """Observed agreement: the diagonal share of a contingency table."""
    total = _check_table(table)
    return sum(table[i][i] for i in range(len(table))) / total


def kappa(table: Sequence[Sequence[float]]) -> float:
    """Chance-corrected two-rater agreement, (p_o - p_e) / (1 - p_e).

    When expected agreement is 1 the statistic is defined as 1.0 for
    perfect observed agreement and is an error otherwise.
    """
    total = _check_table(table)
    n = len(table)
    p_o = sum(table[i][i] for i in range(n)) / total
    row_marginals = [sum(table[i]) / total for i in range(n)]
    col_marginals = [sum(table[i][j] for i in range(n)) / total for j in range(n)]
    p_e = sum(r * c for r, c in zip(row_marginals, col_marginals))
    if math.isclose(p_e, 1.0, abs_tol=1e-12):
        if math.isclose(p_o, 1.0, abs_tol=1e-12):
            return 1.0
        raise ValidationError("kappa undefined: expected agreement is 1")
    return (p_o - p_e) / (1.0 - p_e)


def strict_lenient_accuracy(
    rater_decisions: Sequence[Sequence[object]],
    reference: Sequence[object],
) -> tuple[float, float]:
    """Share of items where the reference matches every rater (strict)
    and at least one rater (lenient).

    rater_decisions[i] holds rater i's decision for every item.
    """
    if not reference:
        raise ValidationError("no items")
    if any(len(r) != len(reference) for r in rater_decisions):
        raise ValidationError("rater decision lists must align with reference")
    if not rater_decisions:
        raise ValidationError("no raters")
    n = len(reference)
    strict = lenient = 0
    for i in range(n):
        votes = [r[i] for r in rater_decisions]
        if all(v == reference[i] for v in votes):
            strict += 1
        if any(v == reference[i] for v in votes):
            lenient += 1
    return strict / n, lenient / n


def stratified_sample(
    scored: Sequence[tuple[object, float]],
    bin_edges: Sequence[float],
    per_bin_n: int,
    seed: int,
) -> list[tuple[object, float]]:
    """Uniform sample of up to per_bin_n items from each score bin.

    Edges define contiguous bins [e0, e1), ..., [e_{k-1}, inf). Bins with
    fewer members return whole. Deterministic for a fixed seed.
    """
    if per_bin_n < 1:
        raise ValidationError("per_bin_n must be >= 1")
    if not bin_edges or list(bin_edges) != sorted(bin_edges):
        raise ValidationError("bin_edges must be ascending and non-empty")
    members: list[list[tuple[object, float]]] = [[] for _ in bin_edges]
    for item, score in scored:
        idx = None
        for i, edge in enumerate(bin_edges):
            if score >= edge:
                idx = i
            else:
                break
        if idx is not None:
            members[idx].append((item, score))
    rng = random.Random(seed)
    sample: list[tuple[object, float]] = []
    for pool in members:
        if len(pool) <= per_bin_n:
            sample.extend(pool)
        else:
            sample.extend(rng.sample(pool, per_bin_n))
    return sample


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Product-moment correlation; errors on mismatched or constant input."""
    if len(xs) != len(ys):
        raise ValidationError("series lengths differ")
    n = len(xs)
    if n < 2:
        raise ValidationError("need at least two points")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    var_x = sum(d * d for d in dx)
    var_y = sum(d * d for d in dy)
    if var_x == 0 or var_y == 0:
        raise ValidationError("zero variance")
    return sum(a * b for a, b in zip(dx, dy)) / math.sqrt(var_x * var_y)
