"""Run configuration: TOML or JSON, validated in one pass.

Paths resolve relative to the config file; unset resources fall back to
the data files packaged with the engine, so a config naming only the
corpus is enough for a full run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]


class ConfigError(ValueError):
    """Carries every validation problem found, not just the first."""

    def __init__(self, problems: list[str]) -> None:
        self.problems = problems
        super().__init__("invalid config:\n" + "\n".join(f"- {p}" for p in problems))


def data_path(*parts: str) -> Path:
    return Path(str(resources.files("jobsift").joinpath("data", *parts)))


@dataclass
class RunConfig:
    corpus_path: Path
    out_dir: Path = Path("out")
    seed: int = 42
    strict: bool = False

    embed_backend: str = "hash"       # "hash" | "jvec"
    embed_dim: int = 64
    sentence_vectors: Path | None = None
    title_vectors: Path | None = None

    skill_threshold: float = 0.87
    skill_labels: Path = field(default_factory=lambda: data_path("sample", "skill_labels.csv"))
    skill_label_vectors: Path | None = None
    skill_label_sets: Path | None = None
    skill_stage1_labels: Path | None = None
    skill_keep_below: bool = False

    task_threshold: float = 0.90
    task_labels: Path = field(default_factory=lambda: data_path("sample", "task_labels.csv"))
    task_label_vectors: Path | None = None
    task_label_sets: Path | None = None
    task_stage1_labels: Path | None = None
    task_keep_below: bool = False

    title_reference: Path = field(
        default_factory=lambda: data_path("dictionaries", "reference_titles.csv")
    )
    title_reference_vectors: Path | None = None
    hierarchy_base: Path = field(default_factory=lambda: data_path("hierarchy", "base.csv"))
    hierarchy_stepper: Path = field(
        default_factory=lambda: data_path("hierarchy", "stepper.csv")
    )
    title_feature_dict: Path = field(
        default_factory=lambda: data_path("dictionaries", "title_features.csv")
    )

    establishments: Path | None = None
    firm_threshold: float = 0.8
    firm_spans: Path | None = None

    wage_lower_bound: float = 5_000.0
    wage_upper_bound: float = 1_000_000.0
    wage_overrides: Path | None = None

    tag_classes_dir: Path = field(default_factory=lambda: data_path("tag_classes"))
    tag_overrides: Path | None = None

    dictionary_path: Path = field(
        default_factory=lambda: data_path("dictionaries", "benefits.csv")
    )
    dictionary_schema: str = "benefits"
    dictionary_exclusions: Path | None = None

    group_by: tuple[str, ...] = ("month",)
    anomalous_months: frozenset[str] = frozenset({"2015-01", "2016-01", "2017-01"})
    fallback_offset: int = 2
    include_wage_outliers: bool = False

    def snapshot(self) -> dict:
        """JSON-safe view of the effective configuration."""
        out: dict = {}
        for key, value in vars(self).items():
            if isinstance(value, Path):
                out[key] = str(value)
            elif isinstance(value, frozenset):
                out[key] = sorted(value)
            elif isinstance(value, tuple):
                out[key] = list(value)
            else:
                out[key] = value
        return out


def _get(section: dict, key: str, default=None):
    value = section.get(key, default)
    if isinstance(value, str) and value == "":
        return default
    return value


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a TOML or JSON config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        raw = json.loads(text)
    else:
        raw = tomllib.loads(text)
    base = path.parent

    def resolve(value) -> Path | None:
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else (base / p)

    problems: list[str] = []
    corpus = raw.get("corpus", {})
    corpus_path = resolve(_get(corpus, "path"))
    if corpus_path is None:
        problems.append("corpus.path is required")

    embeddings = raw.get("embeddings", {})
    skills = raw.get("skills", {})
    tasks = raw.get("tasks", {})
    titles = raw.get("titles", {})
    firms = raw.get("firms", {})
    wages = raw.get("wages", {})
    tags = raw.get("tags", {})
    dictionary = raw.get("dictionary", {})
    agg = raw.get("aggregate", {})
    run = raw.get("run", {})

    cfg = RunConfig(corpus_path=corpus_path or Path("missing"))
    cfg.out_dir = resolve(_get(run, "output", "out")) or Path("out")
    cfg.seed = int(_get(run, "seed", 42))

    cfg.embed_backend = str(_get(embeddings, "backend", "hash"))
    cfg.embed_dim = int(_get(embeddings, "dim", 64))
    cfg.sentence_vectors = resolve(_get(embeddings, "sentence_vectors"))
    cfg.title_vectors = resolve(_get(embeddings, "title_vectors"))

    cfg.skill_threshold = float(_get(skills, "threshold", 0.87))
    cfg.skill_labels = resolve(_get(skills, "labels")) or cfg.skill_labels
    cfg.skill_label_vectors = resolve(_get(skills, "label_vectors"))
    cfg.skill_label_sets = resolve(_get(skills, "label_sets"))
    cfg.skill_stage1_labels = resolve(_get(skills, "stage1_labels"))
    cfg.skill_keep_below = bool(_get(skills, "keep_below_threshold", False))

    cfg.task_threshold = float(_get(tasks, "threshold", 0.90))
    cfg.task_labels = resolve(_get(tasks, "labels")) or cfg.task_labels
    cfg.task_label_vectors = resolve(_get(tasks, "label_vectors"))
    cfg.task_label_sets = resolve(_get(tasks, "label_sets"))
    cfg.task_stage1_labels = resolve(_get(tasks, "stage1_labels"))
    cfg.task_keep_below = bool(_get(tasks, "keep_below_threshold", False))

    cfg.title_reference = resolve(_get(titles, "reference")) or cfg.title_reference
    cfg.title_reference_vectors = resolve(_get(titles, "reference_vectors"))
    cfg.hierarchy_base = resolve(_get(titles, "hierarchy_base")) or cfg.hierarchy_base
    cfg.hierarchy_stepper = (
        resolve(_get(titles, "hierarchy_stepper")) or cfg.hierarchy_stepper
    )
    cfg.title_feature_dict = resolve(_get(titles, "features")) or cfg.title_feature_dict

    cfg.establishments = resolve(_get(firms, "establishments"))
    cfg.firm_threshold = float(_get(firms, "threshold", 0.8))
    cfg.firm_spans = resolve(_get(firms, "spans"))

    cfg.wage_lower_bound = float(_get(wages, "lower_bound", 5_000.0))
    cfg.wage_upper_bound = float(_get(wages, "upper_bound", 1_000_000.0))
    cfg.wage_overrides = resolve(_get(wages, "overrides"))

    cfg.tag_classes_dir = resolve(_get(tags, "classes_dir")) or cfg.tag_classes_dir
    cfg.tag_overrides = resolve(_get(tags, "overrides"))

    cfg.dictionary_path = resolve(_get(dictionary, "path")) or cfg.dictionary_path
    cfg.dictionary_schema = str(_get(dictionary, "schema", "benefits"))
    cfg.dictionary_exclusions = resolve(_get(dictionary, "exclusions"))

    cfg.group_by = tuple(_get(agg, "group_by", ["month"]))
    cfg.anomalous_months = frozenset(
        _get(agg, "anomalous_months", sorted(cfg.anomalous_months))
    )
    cfg.fallback_offset = int(_get(agg, "fallback_offset", 2))
    cfg.include_wage_outliers = bool(_get(agg, "include_wage_outliers", False))

    for name, threshold in (
        ("skills.threshold", cfg.skill_threshold),
        ("tasks.threshold", cfg.task_threshold),
        ("firms.threshold", cfg.firm_threshold),
    ):
        if not 0.0 < threshold <= 1.0:
            problems.append(f"{name} must be in (0, 1], got {threshold}")
    if cfg.embed_backend not in ("hash", "jvec"):
        problems.append(f"embeddings.backend must be hash or jvec, got {cfg.embed_backend!r}")
    if cfg.embed_backend == "jvec" and cfg.sentence_vectors is None:
        problems.append("embeddings.backend=jvec requires embeddings.sentence_vectors")
    # externally computed vectors must cover both sides of a comparison
    for label, vectors, sets in (
        ("skills", cfg.skill_label_vectors, cfg.skill_label_sets),
        ("tasks", cfg.task_label_vectors, cfg.task_label_sets),
    ):
        if (vectors is None) != (sets is None):
            problems.append(
                f"{label}.label_vectors and {label}.label_sets must be set together"
            )
    if (cfg.title_reference_vectors is None) != (cfg.title_vectors is None):
        problems.append(
            "titles.reference_vectors and embeddings.title_vectors must be set "
            "together (reference and query titles share one vector space)"
        )

    required_paths = {
        "corpus.path": corpus_path,
        "skills.labels": cfg.skill_labels,
        "tasks.labels": cfg.task_labels,
        "titles.reference": cfg.title_reference,
        "titles.hierarchy_base": cfg.hierarchy_base,
        "titles.hierarchy_stepper": cfg.hierarchy_stepper,
        "titles.features": cfg.title_feature_dict,
        "tags.classes_dir": cfg.tag_classes_dir,
        "dictionary.path": cfg.dictionary_path,
    }
    optional_paths = {
        "embeddings.sentence_vectors": cfg.sentence_vectors,
        "embeddings.title_vectors": cfg.title_vectors,
        "titles.reference_vectors": cfg.title_reference_vectors,
        "firms.establishments": cfg.establishments,
        "firms.spans": cfg.firm_spans,
        "wages.overrides": cfg.wage_overrides,
        "tags.overrides": cfg.tag_overrides,
        "dictionary.exclusions": cfg.dictionary_exclusions,
        "skills.label_vectors": cfg.skill_label_vectors,
        "skills.label_sets": cfg.skill_label_sets,
        "skills.stage1_labels": cfg.skill_stage1_labels,
        "tasks.label_vectors": cfg.task_label_vectors,
        "tasks.label_sets": cfg.task_label_sets,
        "tasks.stage1_labels": cfg.task_stage1_labels,
    }
    for name, p in required_paths.items():
        if p is not None and not Path(p).exists():
            problems.append(f"{name}: path does not exist: {p}")
    for name, p in optional_paths.items():
        if p is not None and not Path(p).exists():
            problems.append(f"{name}: path does not exist: {p}")

    if problems:
        raise ConfigError(problems)
    return cfg
