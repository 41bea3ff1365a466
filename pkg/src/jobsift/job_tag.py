"""Niche tagging: keyword context windows classified by cue rules.

Each tag class names its keywords and two ordered cue lists. Every
keyword occurrence yields one window of up to `window_radius` tokens on
each side (raw token radius, sentence boundaries ignored); the window is
negative if any negative cue matches, else positive if any positive cue
matches, else negative. An ad is positive for a class when any of its
windows is. Externally computed window decisions can override the rule
engine wholesale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .knowledge_map import normalize_term, tokenize

DEFAULT_WINDOW_RADIUS = 6


class JobTagError(ValueError):
    pass


@dataclass(frozen=True)
class TagClass:
    class_name: str
    keywords: tuple[tuple[str, ...], ...]
    window_radius: int = DEFAULT_WINDOW_RADIUS
    negative_rules: tuple[tuple[str, ...], ...] = ()
    positive_rules: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.window_radius < 1:
            raise JobTagError(f"{self.class_name}: window radius must be >= 1")
        if not self.keywords:
            raise JobTagError(f"{self.class_name}: no keywords")

    @classmethod
    def from_terms(
        cls,
        class_name: str,
        keywords: Sequence[str],
        negative_rules: Sequence[str] = (),
        positive_rules: Sequence[str] = (),
        window_radius: int = DEFAULT_WINDOW_RADIUS,
    ) -> "TagClass":
        return cls(
            class_name=class_name,
            keywords=tuple(normalize_term(k) for k in keywords if normalize_term(k)),
            window_radius=window_radius,
            negative_rules=tuple(
                normalize_term(r) for r in negative_rules if normalize_term(r)
            ),
            positive_rules=tuple(
                normalize_term(r) for r in positive_rules if normalize_term(r)
            ),
        )


def _read_terms(path: Path) -> list[str]:
    if not path.exists():
        return []
    lines = path.read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")]


def load_tag_class(directory: str | Path,
                   window_radius: int = DEFAULT_WINDOW_RADIUS) -> TagClass:
    """One directory per class: keywords.txt plus optional
    negative_rules.txt and positive_rules.txt."""
    directory = Path(directory)
    keywords = _read_terms(directory / "keywords.txt")
    if not keywords:
        raise JobTagError(f"{directory}: keywords.txt missing or empty")
    return TagClass.from_terms(
        class_name=directory.name,
        keywords=keywords,
        negative_rules=_read_terms(directory / "negative_rules.txt"),
        positive_rules=_read_terms(directory / "positive_rules.txt"),
        window_radius=window_radius,
    )


def load_tag_classes(root: str | Path) -> list[TagClass]:
    root = Path(root)
    return [
        load_tag_class(child)
        for child in sorted(root.iterdir())
        if child.is_dir() and (child / "keywords.txt").exists()
    ]


@dataclass(frozen=True)
class Window:
    tokens: tuple[str, ...]
    start_token: int
    end_token: int       # exclusive
    keyword_start: int
    keyword_end: int     # exclusive

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def extract_windows(text: str, tag_class: TagClass) -> list[Window]:
    """One window per keyword occurrence, truncated at text boundaries."""
    tokens = [t.text for t in tokenize(text)]
    windows: list[Window] = []
    radius = tag_class.window_radius
    n = len(tokens)
    for i in range(n):
        for keyword in tag_class.keywords:
            k = len(keyword)
            if i + k <= n and tuple(tokens[i : i + k]) == keyword:
                start = max(0, i - radius)
                end = min(n, i + k + radius)
                windows.append(
                    Window(
                        tokens=tuple(tokens[start:end]),
                        start_token=start,
                        end_token=end,
                        keyword_start=i,
                        keyword_end=i + k,
                    )
                )
    windows.sort(key=lambda w: (w.keyword_start, w.keyword_end))
    return windows


def _contains(window_tokens: tuple[str, ...], term: tuple[str, ...]) -> bool:
    k = len(term)
    return any(
        window_tokens[i : i + k] == term
        for i in range(len(window_tokens) - k + 1)
    )


@dataclass(frozen=True)
class TagResult:
    ad_id: str
    class_name: str
    window_index: int
    window_text: str
    keyword_start: int
    keyword_end: int
    decision: str        # "positive" | "negative"
    rule_fired: str | None

    def to_json(self) -> dict:
        return {
            "ad_id": self.ad_id,
            "class_name": self.class_name,
            "window_idx": self.window_index,
            "window_text": self.window_text,
            "keyword_start": self.keyword_start,
            "keyword_end": self.keyword_end,
            "decision": self.decision,
            "rule_fired": self.rule_fired,
        }


def classify_window(window: Window, tag_class: TagClass) -> tuple[str, str | None]:
    """Negative cues first, then positive; no match defaults negative."""
    for rule in tag_class.negative_rules:
        if _contains(window.tokens, rule):
            return "negative", " ".join(rule)
    for rule in tag_class.positive_rules:
        if _contains(window.tokens, rule):
            return "positive", " ".join(rule)
    return "negative", None


def load_tag_overrides(path: str | Path) -> dict[tuple[str, int], str]:
    """External predictions: JSONL {ad_id, window_idx, decision}."""
    overrides: dict[tuple[str, int], str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        decision = str(row["decision"]).lower()
        if decision not in ("positive", "negative"):
            raise JobTagError(f"override decision must be positive/negative: {row}")
        overrides[(str(row["ad_id"]), int(row["window_idx"]))] = decision
    return overrides


def tag_ad(
    ad_id: str,
    text: str,
    classes: Sequence[TagClass],
    overrides: dict[tuple[str, int], str] | None = None,
) -> tuple[dict[str, bool], list[TagResult]]:
    """Per-class booleans (any positive window) plus every window for audit."""
    flags: dict[str, bool] = {}
    results: list[TagResult] = []
    for tag_class in classes:
        positive = False
        for idx, window in enumerate(extract_windows(text, tag_class)):
            key = (ad_id, idx)
            if overrides and key in overrides:
                decision, rule = overrides[key], "override"
            else:
                decision, rule = classify_window(window, tag_class)
            positive = positive or decision == "positive"
            results.append(
                TagResult(
                    ad_id=ad_id,
                    class_name=tag_class.class_name,
                    window_index=idx,
                    window_text=window.text,
                    keyword_start=window.keyword_start,
                    keyword_end=window.keyword_end,
                    decision=decision,
                    rule_fired=rule,
                )
            )
        flags[tag_class.class_name] = positive
    return flags, results
