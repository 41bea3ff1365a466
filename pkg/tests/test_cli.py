from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest
from click.testing import CliRunner

from jobsift.cli import main
from jobsift.config import data_path


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def workdir(tmp_path: Path) -> Path:
    """A scratch copy of the sample bundle with a config pointing at it."""
    bundle = tmp_path / "bundle"
    shutil.copytree(data_path(), bundle)
    return bundle / "sample" / "config.toml"


def run_ok(runner, args, expect_exit=0):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == expect_exit, result.output
    return result


class TestConfigHandling:
    def test_missing_config_exits_1_and_names_path(self, runner, tmp_path):
        missing = tmp_path / "nope.toml"
        result = runner.invoke(main, ["ingest", "-c", str(missing)])
        assert result.exit_code == 1
        assert str(missing) in result.output

    def test_all_problems_listed(self, runner, tmp_path):
        cfg = tmp_path / "bad.toml"
        cfg.write_text(
            "[corpus]\npath = \"missing.jsonl\"\n"
            "[skills]\nthreshold = 1.5\n"
            "[tasks]\nthreshold = 0.0\n",
            encoding="utf-8",
        )
        result = runner.invoke(main, ["ingest", "-c", str(cfg)])
        assert result.exit_code == 1
        assert "skills.threshold" in result.output
        assert "tasks.threshold" in result.output
        assert "corpus.path" in result.output


class TestStages:
    def test_ingest_writes_records_and_manifest(self, runner, workdir, tmp_path):
        out = tmp_path / "out"
        run_ok(runner, ["ingest", "-c", str(workdir), "--out", str(out)])
        assert (out / "records.jsonl").exists()
        manifest = json.loads((out / "ingest_manifest.json").read_text())
        assert manifest["command"] == "ingest"
        assert "corpus" in manifest["inputs"]
        assert manifest["outputs"] == ["records.jsonl"]

    def test_ingest_rejected_rows_exit_2(self, runner, workdir, tmp_path):
        bad_corpus = tmp_path / "bad.jsonl"
        bad_corpus.write_text(
            json.dumps({"id": "x", "title": "t", "body": "b",
                        "date_acquired": "2024-05", "date_compiled": "2024-01"})
            + "\n" + json.dumps({"id": "y", "title": "t", "body": "b",
                                 "date_compiled": "2024-01"}) + "\n",
            encoding="utf-8",
        )
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(f'[corpus]\npath = "{bad_corpus}"\n', encoding="utf-8")
        out = tmp_path / "out"
        result = runner.invoke(main, ["ingest", "-c", str(cfg), "--out", str(out)])
        assert result.exit_code == 2
        errors = json.loads((out / "ingest_errors.json").read_text())
        assert errors["stage"] == "ingest" and errors["errors"]

    def test_extract_dict_nonzero_hits(self, runner, workdir, tmp_path):
        out = tmp_path / "out"
        run_ok(runner, ["extract", "dict", "-c", str(workdir), "--out", str(out)])
        rows = [json.loads(l) for l in (out / "dict_hits.jsonl").read_text().splitlines()]
        assert rows, "sample corpus should produce benefit dictionary hits"
        assert {"ad_id", "uci", "term", "start_token", "end_token"} == set(rows[0])

    def test_extract_skills_stats_histogram(self, runner, workdir, tmp_path):
        out = tmp_path / "out"
        run_ok(runner, ["extract", "skills", "-c", str(workdir), "--out", str(out)])
        stats = json.loads((out / "skills_stats.json").read_text())
        hist = stats["score_histogram"]
        assert sum(hist.values()) == stats["n_scored"]
        rows = [json.loads(l) for l in (out / "skills.jsonl").read_text().splitlines()]
        assert all(r["score"] >= 0.87 for r in rows)

    def test_extract_titles(self, runner, workdir, tmp_path):
        out = tmp_path / "out"
        run_ok(runner, ["extract", "titles", "-c", str(workdir), "--out", str(out)])
        rows = [json.loads(l) for l in (out / "titles.jsonl").read_text().splitlines()]
        assert len(rows) == 20
        by_id = {r["ad_id"]: r for r in rows}
        assert by_id["ad-0014"]["match_kind"] == "exact"
        assert by_id["ad-0014"]["n_candidates"] == 9
        assert by_id["ad-0003"]["features"] == ["sign_on_bonus"]

    def test_extract_wages(self, runner, workdir, tmp_path):
        out = tmp_path / "out"
        run_ok(runner, ["extract", "wages", "-c", str(workdir), "--out", str(out)])
        rows = [json.loads(l) for l in (out / "wages.jsonl").read_text().splitlines()]
        by_ad = {}
        for r in rows:
            by_ad.setdefault(r["ad_id"], []).append(r)
        hourly = [r for r in by_ad["ad-0001"] if r["provenance"] == "text"]
        assert hourly[0]["min_value"] == 15.50
        assert hourly[0]["annualized"] == pytest.approx(34840.0)

    def test_extract_firms(self, runner, workdir, tmp_path):
        out = tmp_path / "out"
        run_ok(runner, ["extract", "firms", "-c", str(workdir), "--out", str(out)])
        rows = [json.loads(l) for l in (out / "firms.jsonl").read_text().splitlines()]
        by_ad = {r["ad_id"]: r for r in rows}
        assert by_ad["ad-0002"]["tier"] == "zip"
        assert by_ad["ad-0002"]["naics"] == "722511"

    def test_extract_tags_credit_union_negative(self, runner, workdir, tmp_path):
        out = tmp_path / "out"
        run_ok(runner, ["extract", "tags", "-c", str(workdir), "--out", str(out)])
        flags = {json.loads(l)["ad_id"]: json.loads(l)
                 for l in (out / "tag_flags.jsonl").read_text().splitlines()}
        assert flags["ad-0006"]["union"] is False   # credit union only
        assert flags["ad-0005"]["union"] is True    # labor union
        assert flags["ad-0007"]["union"] is True    # collective bargaining

    def test_simulate_report(self, runner, tmp_path):
        out = tmp_path / "out"
        bins = data_path("tables", "skill_bins_majority.csv")
        result = run_ok(runner, [
            "simulate", "--bins", str(bins),
            "--n-flagged", "2.78e6", "--n-unflagged", "2.56e6",
            "--stage1-fnr", "0.16", "--threshold", "0.87", "--out", str(out),
        ])
        assert "precision 0.861" in result.output
        report = json.loads((out / "simulate_report.json").read_text())
        assert report["at_threshold"]["precision"] == pytest.approx(0.861, abs=0.001)
        assert len(report["curve"]) == 9

    def test_kappa_command(self, runner, fixtures_dir):
        result = run_ok(runner, ["kappa", "--table",
                                 str(fixtures_dir / "rater_table.csv")])
        assert "0.6" in result.output

    def test_sample_command(self, runner, tmp_path):
        scores = tmp_path / "scores.jsonl"
        scores.write_text(
            "\n".join(json.dumps({"id": f"s{i}", "score": 0.80 + (i % 20) / 100})
                      for i in range(200)) + "\n",
            encoding="utf-8",
        )
        out = tmp_path / "out"
        run_ok(runner, ["sample", "--scores", str(scores),
                        "--edges", "0.80,0.85,0.90,0.95", "--per-bin-n", "5",
                        "--seed", "7", "--out", str(out)])
        rows = (out / "sample.jsonl").read_text().splitlines()
        assert len(rows) == 20

    def test_rerun_byte_identical(self, runner, workdir, tmp_path):
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        for out in (out1, out2):
            run_ok(runner, ["extract", "dict", "-c", str(workdir), "--out", str(out)])
        assert (out1 / "dict_hits.jsonl").read_bytes() == \
               (out2 / "dict_hits.jsonl").read_bytes()


class TestGoldenSnapshot:
    """Pipeline output over the shipped sample corpus, frozen from a
    hand-verified run (each retained match was checked against its label
    statement)."""

    def test_skills_match_golden(self, runner, workdir, tmp_path, fixtures_dir):
        out = tmp_path / "out"
        run_ok(runner, ["extract", "skills", "-c", str(workdir), "--out", str(out)])
        assert (out / "skills.jsonl").read_bytes() == \
               (fixtures_dir / "golden_skills.jsonl").read_bytes()

    def test_tasks_match_golden(self, runner, workdir, tmp_path, fixtures_dir):
        out = tmp_path / "out"
        run_ok(runner, ["extract", "tasks", "-c", str(workdir), "--out", str(out)])
        assert (out / "tasks.jsonl").read_bytes() == \
               (fixtures_dir / "golden_tasks.jsonl").read_bytes()


class TestJsonConfig:
    def test_json_config_equivalent(self, runner, workdir, tmp_path):
        # same run driven by a JSON config instead of TOML
        sample = workdir.parent
        cfg = {
            "corpus": {"path": str(sample / "corpus.jsonl")},
            "dictionary": {"path": str(sample.parent / "dictionaries" / "benefits.csv"),
                           "schema": "benefits"},
        }
        json_cfg = tmp_path / "run.json"
        json_cfg.write_text(json.dumps(cfg), encoding="utf-8")
        out_toml, out_json = tmp_path / "ot", tmp_path / "oj"
        run_ok(runner, ["extract", "dict", "-c", str(workdir), "--out", str(out_toml)])
        run_ok(runner, ["extract", "dict", "-c", str(json_cfg), "--out", str(out_json)])
        assert (out_toml / "dict_hits.jsonl").read_bytes() == \
               (out_json / "dict_hits.jsonl").read_bytes()


class TestExternalInputs:
    def test_firm_spans_fill_missing_names(self, runner, workdir, tmp_path):
        # ad-0011 ships without firm metadata; an external span supplies one
        spans = tmp_path / "spans.jsonl"
        spans.write_text(
            json.dumps({"ad_id": "ad-0011", "firm_name": "Pine Valley Schools"}) + "\n",
            encoding="utf-8",
        )
        cfg = tmp_path / "cfg.toml"
        sample = workdir.parent
        cfg.write_text(f"""
[corpus]
path = "{sample / 'corpus.jsonl'}"

[firms]
establishments = "{sample / 'establishments.csv'}"
spans = "{spans}"
""", encoding="utf-8")
        out = tmp_path / "out"
        run_ok(runner, ["extract", "firms", "-c", str(cfg), "--out", str(out)])
        rows = {json.loads(l)["ad_id"]: json.loads(l)
                for l in (out / "firms.jsonl").read_text().splitlines()}
        assert rows["ad-0011"]["naics"] == "611110"
        # metadata still outranks spans where both exist
        assert rows["ad-0012"]["extracted_name"] == "Pine Valley Schools"

    def test_external_stage1_labels(self, runner, workdir, tmp_path):
        # accept exactly one sentence corpus-wide; only it can be scored
        labels = tmp_path / "labels.jsonl"
        lines = [json.dumps({"ad_id": "ad-0013", "sentence_idx": 1,
                             "candidate": True})]
        labels.write_text("\n".join(lines) + "\n", encoding="utf-8")
        sample = workdir.parent
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(f"""
[corpus]
path = "{sample / 'corpus.jsonl'}"

[skills]
labels = "{sample / 'skill_labels.csv'}"
stage1_labels = "{labels}"
""", encoding="utf-8")
        out = tmp_path / "out"
        run_ok(runner, ["extract", "skills", "-c", str(cfg), "--out", str(out)])
        stats = json.loads((out / "skills_stats.json").read_text())
        assert stats["n_candidates"] == 1
        rows = [json.loads(l) for l in (out / "skills.jsonl").read_text().splitlines()]
        assert [(r["ad_id"], r["sentence_idx"]) for r in rows] == [("ad-0013", 1)]
