"""Command-line orchestration: one subcommand per stage plus `all`.

Every stage writes its primary outputs (JSONL/CSV) and a manifest JSON
naming input digests and the config snapshot. Exit status: 0 for fully
clean runs, 1 for usage and config errors, 2 for partial failures (a
machine-readable error report lands next to the outputs).

Outputs are byte-identical across reruns and worker counts; only the
manifest timestamp may differ.
"""

from __future__ import annotations

import csv as _csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable

import click

from . import __version__, aggregate as agg, corpus, firm_match, job_tag
from . import knowledge_map as km
from . import stage_pipeline as sp
from . import title_match as tm
from . import validate as val
from . import wage_extract as we
from .config import ConfigError, RunConfig, data_path, load_config
from .embed_store import HashEmbedder, load_vectors
from .manifest import write_manifest

EXIT_PARTIAL = 2


def _mapper(workers: int) -> Callable:
    if workers <= 1:
        return map

    def pooled(fn, items):
        items = list(items)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(fn, items)

    return pooled


def _out_dir(cfg: RunConfig, override: str | None) -> Path:
    out = Path(override) if override else Path(os.environ.get("JOBSIFT_OUT") or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_jsonl(path: Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def _write_json(path: Path, obj: dict) -> None:
    path.write_text(
        json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def _write_errors(out: Path, stage: str, errors: list[str]) -> None:
    _write_json(out / f"{stage}_errors.json", {"stage": stage, "errors": errors})


def _load_records(cfg: RunConfig, out: Path) -> list[corpus.JobAdRecord]:
    normalized = out / "records.jsonl"
    source = normalized if normalized.exists() else cfg.corpus_path
    return corpus.ingest(source, strict=cfg.strict).records


def _embedder(cfg: RunConfig) -> HashEmbedder:
    return HashEmbedder(dim=cfg.embed_dim)


class _Fail(Exception):
    def __init__(self, code: int, message: str) -> None:
        self.code = code
        super().__init__(message)


@click.group()
@click.version_option(version=__version__, prog_name="jobsift")
def main() -> None:
    """Deterministic job-ad feature extraction and aggregation."""


def _config_option(fn):
    fn = click.option("--config", "-c", "config_path", required=True,
                      type=click.Path(), help="TOML or JSON run config.")(fn)
    fn = click.option("--out", "out_override", default=None,
                      type=click.Path(), help="Output directory override.")(fn)
    fn = click.option("--seed", "seed_override", default=None, type=int,
                      help="Seed override (recorded in manifests).")(fn)
    return fn


def _load_cfg(config_path: str, strict: bool = False,
              seed_override: int | None = None) -> RunConfig:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        raise _Fail(1, str(exc)) from None
    cfg.strict = strict
    if seed_override is not None:
        cfg.seed = seed_override
    return cfg


def _run(fn) -> None:
    try:
        fn()
    except _Fail as exc:
        click.echo(str(exc), err=True)
        sys.exit(exc.code)
    except (corpus.IngestError, km.KnowledgeMapError, val.ValidationError,
            tm.TitleMatchError, firm_match.FirmMatchError, sp.PipelineError,
            agg.AggregateError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


# --- ingest -----------------------------------------------------------------

@main.command()
@_config_option
@click.option("--strict", is_flag=True, help="Fail fast on the first bad row.")
def ingest(config_path: str, out_override: str | None,
           seed_override: int | None, strict: bool) -> None:
    """Validate and normalize the corpus into records.jsonl."""

    def go() -> None:
        cfg = _load_cfg(config_path, strict, seed_override)
        out = _out_dir(cfg, out_override)
        report = corpus.ingest(cfg.corpus_path, strict=strict)
        corpus.emit(report.records, out / "records.jsonl")
        outputs = ["records.jsonl"]
        diagnostics = [
            f"row {r.row_number} ({r.ad_id or 'no id'}): {r.reason}"
            for r in report.rejected
        ]
        if report.rejected:
            _write_jsonl(
                out / "rejected_rows.jsonl",
                [
                    {"row_number": r.row_number, "ad_id": r.ad_id, "reason": r.reason}
                    for r in report.rejected
                ],
            )
            outputs.append("rejected_rows.jsonl")
        write_manifest(out, "ingest", {"corpus": cfg.corpus_path}, outputs,
                       cfg.snapshot(), seed=cfg.seed, diagnostics=diagnostics)
        click.echo(f"ingested {len(report.records)} records, "
                   f"rejected {len(report.rejected)}")
        if report.rejected:
            _write_errors(out, "ingest", diagnostics)
            raise _Fail(EXIT_PARTIAL, "ingest finished with rejected rows")

    _run(go)


# --- extract ----------------------------------------------------------------

@main.group()
def extract() -> None:
    """Run one extraction stage over the corpus."""


def _stage1_filter(cfg: RunConfig, task_name: str):
    labels = cfg.skill_stage1_labels if task_name == "skill" else cfg.task_stage1_labels
    if labels is not None:
        return sp.ExternalLabelFilter.from_file(labels)
    cue_file = data_path("cues", f"{task_name}_cues.txt")
    return sp.KeywordCueFilter.from_file(f"{task_name}_cues", cue_file)


def _pipeline_config(cfg: RunConfig, task_name: str) -> sp.PipelineConfig:
    embedder = _embedder(cfg)
    if task_name == "skill":
        vectors, sets_path, labels = cfg.skill_label_vectors, cfg.skill_label_sets, cfg.skill_labels
        threshold, keep_below = cfg.skill_threshold, cfg.skill_keep_below
    else:
        vectors, sets_path, labels = cfg.task_label_vectors, cfg.task_label_sets, cfg.task_labels
        threshold, keep_below = cfg.task_threshold, cfg.task_keep_below
    if vectors is not None and sets_path is not None:
        matrix = load_vectors(vectors)
        label_sets = sp.load_label_sets(sets_path)
    else:
        if cfg.sentence_vectors is not None:
            raise sp.PipelineError(
                f"{task_name}: embeddings.sentence_vectors is set but "
                f"{task_name} label vectors are not; sentence and label "
                "vectors must share one embedding space"
            )
        label_sets, matrix = sp.load_label_statements(labels, embedder)
    return sp.PipelineConfig(task_name, threshold, label_sets, matrix,
                             keep_below_threshold=keep_below)


def _run_match_stage(cfg: RunConfig, out: Path, task_name: str, workers: int) -> None:
    records = _load_records(cfg, out)
    filter_ = _stage1_filter(cfg, task_name)
    pipe_cfg = _pipeline_config(cfg, task_name)
    matrix = load_vectors(cfg.sentence_vectors) if cfg.sentence_vectors else None
    embedder = None if matrix is not None else _embedder(cfg)
    results, stats = sp.run_pipeline(
        records, filter_, pipe_cfg,
        sentence_matrix=matrix, embedder=embedder, map_fn=_mapper(workers),
    )
    stage = "skills" if task_name == "skill" else "tasks"
    _write_jsonl(out / f"{stage}.jsonl", (r.to_json() for r in results))
    _write_json(out / f"{stage}_stats.json", stats.to_json())
    write_manifest(
        out, f"extract {stage}", {"corpus": cfg.corpus_path},
        [f"{stage}.jsonl", f"{stage}_stats.json"], cfg.snapshot(),
        seed=cfg.seed, workers=workers, diagnostics=stats.diagnostics,
    )
    click.echo(f"{stage}: {stats.n_scored} scored, {stats.n_retained} retained")
    if stats.diagnostics:
        _write_errors(out, f"extract_{stage}", stats.diagnostics)
        raise _Fail(EXIT_PARTIAL, f"extract {stage} finished with diagnostics")


@extract.command()
@_config_option
@click.option("--workers", default=1, show_default=True)
def skills(config_path: str, out_override: str | None,
        seed_override: int | None, workers: int) -> None:
    """Two-stage skill extraction."""

    def go() -> None:
        cfg = _load_cfg(config_path, seed_override=seed_override)
        _run_match_stage(cfg, _out_dir(cfg, out_override), "skill", workers)

    _run(go)


@extract.command()
@_config_option
@click.option("--workers", default=1, show_default=True)
def tasks(config_path: str, out_override: str | None,
        seed_override: int | None, workers: int) -> None:
    """Two-stage task extraction."""

    def go() -> None:
        cfg = _load_cfg(config_path, seed_override=seed_override)
        _run_match_stage(cfg, _out_dir(cfg, out_override), "task", workers)

    _run(go)


@extract.command(name="dict")
@_config_option
@click.option("--workers", default=1, show_default=True)
def dict_cmd(config_path: str, out_override: str | None,
        seed_override: int | None, workers: int) -> None:
    """Knowledge-map dictionary scan."""

    def go() -> None:
        cfg = _load_cfg(config_path, seed_override=seed_override)
        out = _out_dir(cfg, out_override)
        exclusions = (
            km.load_exclusions(cfg.dictionary_exclusions)
            if cfg.dictionary_exclusions else None
        )
        load = km.load_dictionary(cfg.dictionary_path, cfg.dictionary_schema, exclusions)
        matcher = km.compile(load.entries)
        records = _load_records(cfg, out)

        def scan_ad(ad: corpus.JobAdRecord) -> list[dict]:
            return [h.to_json() for h in km.scan(matcher, ad.body, ad_id=ad.id)]

        rows: list[dict] = []
        for ad_rows in _mapper(workers)(scan_ad, records):
            rows.extend(ad_rows)
        _write_jsonl(out / "dict_hits.jsonl", rows)
        diagnostics = [f"row {n}: {reason}" for n, reason in load.skipped]
        write_manifest(out, "extract dict",
                       {"corpus": cfg.corpus_path, "dictionary": cfg.dictionary_path},
                       ["dict_hits.jsonl"], cfg.snapshot(), seed=cfg.seed,
                       workers=workers, diagnostics=diagnostics)
        click.echo(f"dict: {len(rows)} hits from {len(load.entries)} entries")

    _run(go)


@extract.command()
@_config_option
@click.option("--workers", default=1, show_default=True)
def titles(config_path: str, out_override: str | None,
        seed_override: int | None, workers: int) -> None:
    """Occupation coding, hierarchy level, and title features."""

    def go() -> None:
        cfg = _load_cfg(config_path, seed_override=seed_override)
        out = _out_dir(cfg, out_override)
        records = _load_records(cfg, out)
        rows = tm.load_reference_titles(cfg.title_reference)
        # reference and query titles must live in one vector space: either
        # both come from JVEC files (real model) or both from the hash fallback
        ref_matrix = (
            load_vectors(cfg.title_reference_vectors)
            if cfg.title_reference_vectors else None
        )
        ad_matrix = load_vectors(cfg.title_vectors) if cfg.title_vectors else None
        embedder = None if ref_matrix is not None else _embedder(cfg)
        index = tm.build_title_index(rows, embedder=embedder, matrix=ref_matrix)
        maps = tm.load_hierarchy_maps(cfg.hierarchy_base, cfg.hierarchy_stepper)
        feature_load = km.load_dictionary(cfg.title_feature_dict, "generic")
        feature_matcher = km.compile(feature_load.entries)

        def code_ad(ad: corpus.JobAdRecord) -> dict | str:
            if ad_matrix is not None:
                if ad.id not in ad_matrix:
                    return f"no title vector for ad {ad.id}"
                query_vec = ad_matrix.row(ad.id)
            else:
                query_vec = None
            result, candidates = tm.code_title(ad.title, index,
                                               query_vec=query_vec,
                                               embedder=embedder)
            return {
                "ad_id": ad.id,
                "soc_code": result.soc_code,
                "onet_code": result.onet_code,
                "match_kind": result.match_kind,
                "nn_score": None if result.nn_score is None else round(result.nn_score, 6),
                "hierarchy": tm.hierarchy(ad.title, maps),
                "features": sorted(tm.title_features(ad.title, feature_matcher)),
                "n_candidates": len(candidates),
            }

        out_rows: list[dict] = []
        diagnostics: list[str] = []
        for item in _mapper(workers)(code_ad, records):
            (diagnostics if isinstance(item, str) else out_rows).append(item)
        _write_jsonl(out / "titles.jsonl", out_rows)
        write_manifest(out, "extract titles",
                       {"corpus": cfg.corpus_path, "reference": cfg.title_reference},
                       ["titles.jsonl"], cfg.snapshot(), seed=cfg.seed,
                       workers=workers, diagnostics=diagnostics)
        click.echo(f"titles: {len(out_rows)} coded")
        if diagnostics:
            _write_errors(out, "extract_titles", diagnostics)
            raise _Fail(EXIT_PARTIAL, "extract titles finished with diagnostics")

    _run(go)


@extract.command()
@_config_option
@click.option("--workers", default=1, show_default=True)
def firms(config_path: str, out_override: str | None,
        seed_override: int | None, workers: int) -> None:
    """Firm standardization and establishment linkage."""

    def go() -> None:
        cfg = _load_cfg(config_path, seed_override=seed_override)
        if cfg.establishments is None:
            raise _Fail(1, "firms.establishments is required for extract firms")
        out = _out_dir(cfg, out_override)
        records = _load_records(cfg, out)
        index = firm_match.load_establishments(cfg.establishments)
        spans: dict[str, str] = {}
        if cfg.firm_spans is not None:
            for line in Path(cfg.firm_spans).read_text(encoding="utf-8").splitlines():
                if line.strip():
                    row = json.loads(line)
                    spans[str(row["ad_id"])] = str(row["firm_name"])
        skipped = 0

        def match_ad(ad: corpus.JobAdRecord) -> dict | None:
            name = firm_match.resolve_firm_name(ad.firm_name_meta, spans.get(ad.id))
            if name is None:
                return None
            result = firm_match.cascade_match(
                firm_match.standardize(name), ad.zip, ad.state, index,
                ad_id=ad.id, extracted_name=name, threshold=cfg.firm_threshold,
            )
            return result.to_json()

        rows = []
        for row in _mapper(workers)(match_ad, records):
            if row is None:
                skipped += 1
            else:
                rows.append(row)
        _write_jsonl(out / "firms.jsonl", rows)
        write_manifest(out, "extract firms",
                       {"corpus": cfg.corpus_path, "establishments": cfg.establishments},
                       ["firms.jsonl"], cfg.snapshot(), seed=cfg.seed, workers=workers,
                       diagnostics=[f"{skipped} ads with no firm name"] if skipped else [])
        click.echo(f"firms: {len(rows)} matched, {skipped} without names")

    _run(go)


@extract.command()
@_config_option
@click.option("--workers", default=1, show_default=True)
def wages(config_path: str, out_override: str | None,
        seed_override: int | None, workers: int) -> None:
    """Wage span extraction and annualization."""

    def go() -> None:
        cfg = _load_cfg(config_path, seed_override=seed_override)
        out = _out_dir(cfg, out_override)
        records = _load_records(cfg, out)
        overrides = (
            we.load_override_spans(cfg.wage_overrides) if cfg.wage_overrides else None
        )
        bounds = (cfg.wage_lower_bound, cfg.wage_upper_bound)

        def wages_of(ad: corpus.JobAdRecord):
            return we.extract_from_ad(ad, overrides=overrides, bounds=bounds)

        rows: list[dict] = []
        diagnostics: list[str] = []
        for observations, diags in _mapper(workers)(wages_of, records):
            rows.extend(obs.to_json() for obs in observations)
            diagnostics.extend(diags)
        _write_jsonl(out / "wages.jsonl", rows)
        write_manifest(out, "extract wages", {"corpus": cfg.corpus_path},
                       ["wages.jsonl"], cfg.snapshot(), seed=cfg.seed,
                       workers=workers, diagnostics=diagnostics)
        click.echo(f"wages: {len(rows)} observations")

    _run(go)


@extract.command()
@_config_option
@click.option("--workers", default=1, show_default=True)
def tags(config_path: str, out_override: str | None,
        seed_override: int | None, workers: int) -> None:
    """Keyword-window tagging with the rule engine."""

    def go() -> None:
        cfg = _load_cfg(config_path, seed_override=seed_override)
        out = _out_dir(cfg, out_override)
        records = _load_records(cfg, out)
        classes = job_tag.load_tag_classes(cfg.tag_classes_dir)
        overrides = (
            job_tag.load_tag_overrides(cfg.tag_overrides) if cfg.tag_overrides else None
        )

        def tag_one(ad: corpus.JobAdRecord):
            flags, results = job_tag.tag_ad(ad.id, ad.body, classes,
                                            overrides=overrides)
            return ad.id, flags, results

        window_rows: list[dict] = []
        flag_rows: list[dict] = []
        for ad_id, flags, results in _mapper(workers)(tag_one, records):
            window_rows.extend(r.to_json() for r in results)
            flag_rows.append({"ad_id": ad_id, **flags})
        _write_jsonl(out / "tags.jsonl", window_rows)
        _write_jsonl(out / "tag_flags.jsonl", flag_rows)
        write_manifest(out, "extract tags", {"corpus": cfg.corpus_path},
                       ["tags.jsonl", "tag_flags.jsonl"], cfg.snapshot(),
                       seed=cfg.seed, workers=workers)
        click.echo(f"tags: {len(window_rows)} windows over {len(classes)} classes")

    _run(go)


# --- aggregate ---------------------------------------------------------------

AGG_COLUMNS = ("metric", "code", "count", "share", "mean",
               "p10", "p25", "p50", "p75", "p90")


def _collect_features(out: Path
                      ) -> tuple[list[agg.FeatureRecord], dict[str, agg.AdAttributes]]:
    features: list[agg.FeatureRecord] = []
    attrs: dict[str, dict] = {}

    def read(name: str) -> list[dict]:
        path = out / name
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip()]

    for row in read("dict_hits.jsonl"):
        features.append(agg.FeatureRecord(row["ad_id"], "uci", row["uci"]))
    for row in read("skills.jsonl"):
        features.append(agg.FeatureRecord(row["ad_id"], "skill", row["label_code"]))
    for row in read("tasks.jsonl"):
        features.append(agg.FeatureRecord(row["ad_id"], "task", row["label_code"]))
    for row in read("titles.jsonl"):
        attrs.setdefault(row["ad_id"], {})["soc"] = row["soc_code"]
        for feature in row.get("features", []):
            features.append(agg.FeatureRecord(row["ad_id"], "title_feature", feature))
    for row in read("firms.jsonl"):
        if row.get("naics"):
            attrs.setdefault(row["ad_id"], {})["naics"] = row["naics"]
    # one wage per ad: structured metadata outranks text extraction
    wage_by_ad: dict[str, dict] = {}
    for row in read("wages.jsonl"):
        current = wage_by_ad.get(row["ad_id"])
        if current is None or (
            row["provenance"] == "metadata" and current["provenance"] != "metadata"
        ):
            wage_by_ad[row["ad_id"]] = row
    for ad_id in sorted(wage_by_ad):
        row = wage_by_ad[ad_id]
        features.append(
            agg.FeatureRecord(ad_id, "wage", None, value=row["annualized"],
                              outlier=row["outlier"])
        )
    for row in read("tag_flags.jsonl"):
        for key, value in row.items():
            if key != "ad_id" and value is True:
                features.append(agg.FeatureRecord(row["ad_id"], "tag", key))
    return features, attrs


@main.command(name="aggregate")
@_config_option
def aggregate_cmd(config_path: str, out_override: str | None,
                  seed_override: int | None) -> None:
    """Monthly-active aggregation over extracted feature files."""

    def go() -> None:
        cfg = _load_cfg(config_path, seed_override=seed_override)
        out = _out_dir(cfg, out_override)
        records = _load_records(cfg, out)
        index = agg.build_maj(records, anomalous_months=cfg.anomalous_months,
                              fallback_offset=cfg.fallback_offset)
        features, raw_attrs = _collect_features(out)
        state_by_ad = {r.id: r.state for r in records}
        attrs = {
            ad_id: agg.AdAttributes(
                soc=a.get("soc"), naics=a.get("naics"), state=state_by_ad.get(ad_id)
            )
            for ad_id, a in raw_attrs.items()
        }
        for rec in records:
            attrs.setdefault(rec.id, agg.AdAttributes(state=rec.state))
        result = agg.aggregate(features, index, cfg.group_by, attrs,
                               include_outliers=cfg.include_wage_outliers)
        _write_jsonl(out / "aggregate.jsonl", (r.to_json() for r in result.rows))
        with open(out / "aggregate.csv", "w", newline="", encoding="utf-8") as fh:
            writer = _csv.writer(fh, lineterminator="\n")
            writer.writerow(list(cfg.group_by) + list(AGG_COLUMNS))
            for row in result.rows:
                obj = row.to_json()
                writer.writerow(
                    [obj.get(dim, "") for dim in cfg.group_by]
                    + [obj[c] if obj[c] is not None else "" for c in AGG_COLUMNS]
                )
        diagnostics = (
            [f"{result.unknown_ad_ids} feature rows referenced unknown ad ids"]
            if result.unknown_ad_ids else []
        )
        write_manifest(out, "aggregate", {"corpus": cfg.corpus_path},
                       ["aggregate.jsonl", "aggregate.csv"], cfg.snapshot(),
                       seed=cfg.seed, diagnostics=diagnostics)
        click.echo(f"aggregate: {len(result.rows)} rows, "
                   f"{index.total_active()} ad-months")
        if result.unknown_ad_ids:
            _write_errors(out, "aggregate", diagnostics)
            raise _Fail(EXIT_PARTIAL, "aggregate saw unknown ad ids")

    _run(go)


# --- validation commands ------------------------------------------------------

@main.command()
@click.option("--bins", "bins_path", required=True, type=click.Path(exists=True),
              help="Bin table CSV (bin_label,freq,accuracy).")
@click.option("--n-flagged", type=float, required=True)
@click.option("--n-unflagged", type=float, default=0.0, show_default=True)
@click.option("--stage1-fnr", type=float, default=0.0, show_default=True)
@click.option("--threshold", type=float, required=True)
@click.option("--out", "out_override", default=None, type=click.Path())
def simulate(bins_path: str, n_flagged: float, n_unflagged: float,
             stage1_fnr: float, threshold: float, out_override: str | None) -> None:
    """Confusion/threshold simulation from a binned score table."""

    def go() -> None:
        table = val.load_bin_table(bins_path)
        estimate = val.simulate_confusion(table, n_flagged, n_unflagged,
                                          stage1_fnr, threshold)
        curve = val.simulation_curve(table, n_flagged, n_unflagged, stage1_fnr)
        out = Path(out_override or os.environ.get("JOBSIFT_OUT") or "out")
        out.mkdir(parents=True, exist_ok=True)
        params = {
            "bins": bins_path,
            "n_flagged": n_flagged,
            "n_unflagged": n_unflagged,
            "stage1_fnr": stage1_fnr,
            "threshold": threshold,
        }
        report = dict(params)
        report["at_threshold"] = estimate.to_json()
        report["curve"] = [e.to_json() for e in curve]
        _write_json(out / "simulate_report.json", report)
        write_manifest(out, "simulate", {"bins": bins_path},
                       ["simulate_report.json"], params)
        click.echo(
            f"threshold {threshold}: precision {estimate.precision:.3f}, "
            f"recall {estimate.recall:.3f}, f1 {estimate.f1:.3f}, "
            f"tp {estimate.tp:.0f}, fp {estimate.fp:.0f}"
        )

    _run(go)


@main.command()
@click.option("--table", "table_path", required=True, type=click.Path(exists=True),
              help="Square contingency CSV; first column is the row label.")
def kappa(table_path: str) -> None:
    """Chance-corrected two-rater agreement from a contingency CSV."""

    def go() -> None:
        with open(table_path, newline="", encoding="utf-8") as fh:
            rows = list(_csv.reader(fh))
        counts = [[float(cell) for cell in row[1:]] for row in rows[1:]]
        value = val.kappa(counts)
        click.echo(f"kappa: {value:.6f} (observed agreement {val.agreement(counts):.6f})")

    _run(go)


@main.command()
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True),
              help="JSONL rows {id, score}.")
@click.option("--edges", required=True, help="Comma-separated ascending bin edges.")
@click.option("--per-bin-n", type=int, required=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--out", "out_override", default=None, type=click.Path())
def sample(scores_path: str, edges: str, per_bin_n: int, seed: int,
           out_override: str | None) -> None:
    """Stratified audit sample across score bins."""

    def go() -> None:
        scored = []
        for line in Path(scores_path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                row = json.loads(line)
                scored.append((row["id"], float(row["score"])))
        edge_values = [float(e) for e in edges.split(",") if e.strip()]
        picked = val.stratified_sample(scored, edge_values, per_bin_n, seed)
        out = Path(out_override or os.environ.get("JOBSIFT_OUT") or "out")
        out.mkdir(parents=True, exist_ok=True)
        _write_jsonl(out / "sample.jsonl",
                     ({"id": i, "score": s} for i, s in picked))
        write_manifest(out, "sample", {"scores": scores_path}, ["sample.jsonl"],
                       {"edges": edge_values, "per_bin_n": per_bin_n}, seed=seed)
        click.echo(f"sampled {len(picked)} of {len(scored)}")

    _run(go)


# --- umbrella -----------------------------------------------------------------

@main.command(name="all")
@_config_option
@click.option("--workers", default=1, show_default=True)
@click.option("--strict", is_flag=True)
def all_cmd(config_path: str, out_override: str | None,
            seed_override: int | None, workers: int, strict: bool) -> None:
    """Run every pipeline stage in order."""

    def go() -> None:
        cfg = _load_cfg(config_path, strict, seed_override)
        out = _out_dir(cfg, out_override)
        report = corpus.ingest(cfg.corpus_path, strict=strict)
        corpus.emit(report.records, out / "records.jsonl")
        write_manifest(out, "ingest", {"corpus": cfg.corpus_path},
                       ["records.jsonl"], cfg.snapshot(), seed=cfg.seed,
                       diagnostics=[f"row {r.row_number}: {r.reason}"
                                    for r in report.rejected])
        ctx = click.get_current_context()
        common = {"config_path": config_path, "out_override": str(out),
                  "seed_override": seed_override}
        ctx.invoke(dict_cmd, **common, workers=workers)
        ctx.invoke(skills, **common, workers=workers)
        ctx.invoke(tasks, **common, workers=workers)
        ctx.invoke(titles, **common, workers=workers)
        if cfg.establishments is not None:
            ctx.invoke(firms, **common, workers=workers)
        ctx.invoke(wages, **common, workers=workers)
        ctx.invoke(tags, **common, workers=workers)
        ctx.invoke(aggregate_cmd, **common)
        if report.rejected:
            raise _Fail(EXIT_PARTIAL, "corpus had rejected rows")
        click.echo("all stages complete")

    _run(go)


if __name__ == "__main__":
    main()
