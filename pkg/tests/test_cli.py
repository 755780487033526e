from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from pathlib import Path

import pytest

import oracles
from disclosure_scoring.cli import main
from disclosure_scoring.config import ConfigError, load_config, parse_backend, parse_years
from disclosure_scoring.pipeline import ANALYTICS_TABLES, output_files

ROOT = Path(__file__).resolve().parents[1]


def read(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def full_run(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("run") / "out"
    assert main(["run", "--out", str(out), "--backend", "mock:7"]) == 0
    return out


# -- config ------------------------------------------------------------------------

def test_bundled_config_loads():
    cfg = load_config(ROOT / "configs" / "synthetic.yaml")
    assert cfg.backend.kind == "mock" and cfg.backend.seed == 7
    assert cfg.corpus_path().is_file()


def test_unknown_key_rejected(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("version: 1\nbackend:\n  flavour: mint\n")
    with pytest.raises(ConfigError, match="flavour"):
        load_config(p)


def test_flag_parsers():
    assert parse_years("2010..2012") == (2010, 2012)
    assert parse_backend("mock:3:echo") == {"kind": "mock", "seed": 3, "echo": True}
    assert parse_backend("live") == {"kind": "live"}
    with pytest.raises(ConfigError):
        parse_backend("mock:x")
    with pytest.raises(ConfigError):
        parse_years("soon")


def test_config_hash_tracks_overrides():
    a = load_config(None)
    b = load_config(None)
    assert a.config_hash() == b.config_hash()
    b.backend.seed = 99
    assert a.config_hash() != b.config_hash()


# -- exit codes ----------------------------------------------------------------------

def test_bad_config_path_exit_2(tmp_path, capsys):
    missing = tmp_path / "missing.yaml"
    assert main(["ingest", "--config", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_bad_corpus_path_exit_2(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("version: 1\ncorpus:\n  path: data/none.csv\n")
    assert main(["ingest", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "none.csv" in capsys.readouterr().err


def test_live_without_credential_exit_2(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("DISCLOSURE_LLM_API_KEY", raising=False)
    assert main(["rubrics", "--out", str(tmp_path), "--backend", "live"]) == 2
    assert "credential missing" in capsys.readouterr().err


# -- ingest ---------------------------------------------------------------------------

def test_ingest_outputs(tmp_path, manifest):
    assert main(["ingest", "--out", str(tmp_path), "--words-k", "2"]) == 0
    summary = {r["year"]: int(r["records"]) for r in read(tmp_path / "corpus_summary.csv")}
    assert summary == manifest["records_per_year"]
    words = read(tmp_path / "wordfreq.csv")
    per_group = Counter((r["country"], r["year"]) for r in words)
    assert set(per_group.values()) == {2}
    assert read(tmp_path / "rejects.csv") == []
    part = {(r["country"], r["year"]): int(r["companies"]) for r in read(tmp_path / "participation_country.csv")}
    assert {f"{c}|{y}": n for (c, y), n in part.items()} == manifest["companies_per_country_year"]
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["stages"]["ingest"]["counts"]["records"] == 360


# -- rubrics ---------------------------------------------------------------------------

def test_rubrics_files_and_rerun(tmp_path):
    args = ["rubrics", "--out", str(tmp_path), "--backend", "mock:7"]
    assert main(args) == 0
    names = sorted(p.name for p in (tmp_path / "rubrics").glob("*.txt"))
    assert names == ["master.txt", "yearly_2010.txt", "yearly_2011.txt", "yearly_2012.txt"]
    assert main(args) == 0
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["stages"]["rubrics"]["counts"]["live_calls"] == 0
    assert m["rubric_ids"] == ["master", "yearly:2010", "yearly:2011", "yearly:2012"]


def test_year_window_override(tmp_path):
    assert main(["rubrics", "--out", str(tmp_path), "--years", "2010..2011"]) == 0
    assert sorted(p.name for p in (tmp_path / "rubrics").glob("yearly_*.txt")) == [
        "yearly_2010.txt", "yearly_2011.txt"]


def test_single_year_master_refused(tmp_path, capsys):
    assert main(["rubrics", "--out", str(tmp_path), "--years", "2012..2012"]) == 1
    assert "master rubric refused" in capsys.readouterr().err
    assert not (tmp_path / "rubrics" / "master.txt").exists()


# -- score / analyze -----------------------------------------------------------------------

def test_full_run_outputs(full_run, manifest):
    for name in ANALYTICS_TABLES:
        assert (full_run / "analytics" / f"{name}.csv").is_file(), name
    master = read(full_run / "scores" / "master.csv")
    assert len(master) == 90
    assert all(0 <= int(r["total"]) <= 20 for r in master)
    for y in manifest["years"]:
        assert len(read(full_run / "scores" / f"yearly_{y}.csv")) == 30
    m = json.loads((full_run / "manifest.json").read_text())
    assert set(m["files"]) == {str(p) for p in output_files(full_run)}
    assert not any(f.startswith("cache") for f in m["files"])
    for key in ("config_hash", "corpus_provenance", "rubric_ids", "totals", "stages"):
        assert key in m
    assert {"live_calls", "cache_hits", "flagged"} <= set(m["totals"])


def test_means_match_independent_recompute(full_run):
    scores = {(r["company_id"], int(r["year"])): int(r["total"]) for r in read(full_run / "scores" / "master.csv")}
    country = {}
    with (ROOT / "src" / "disclosure_scoring" / "data" / "synthetic_corpus.csv").open(encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            country[(r["company_id"], int(r["year"]))] = r["country"]
    groups = defaultdict(list)
    for key, total in scores.items():
        groups[(country[key], key[1])].append(total)
    rows = [r for r in read(full_run / "analytics" / "means.csv")
            if r["grouping"] == "country" and r["metric"] == "score"]
    assert len(rows) == len(groups)
    for r in rows:
        vals = groups[(r["group"], int(r["year"]))]
        assert float(r["mean"]) == pytest.approx(sum(vals) / len(vals), abs=1e-9)
        assert int(r["n_companies"]) == len(vals) and r["weighting"] == "equal"


def test_distribution_matches_tally(full_run):
    scores = read(full_run / "scores" / "master.csv")
    dist = [r for r in read(full_run / "analytics" / "distributions.csv") if r["rubric"] == "master"]
    for y in (2010, 2011, 2012):
        tally = Counter(int(r["total"]) for r in scores if r["year"] == str(y))
        got = {int(r["total"]): int(r["count"]) for r in dist if r["year"] == str(y)}
        assert {k: v for k, v in got.items() if v} == dict(tally)
        assert math.fsum(float(r["density"]) for r in dist if r["year"] == str(y)) == pytest.approx(1.0)


def test_tau_report_columns(full_run):
    rows = read(full_run / "analytics" / "tau_report.csv")
    assert [r["year"] for r in rows] == ["2010", "2011", "2012"]
    for r in rows:
        assert -1 <= float(r["tau_b"]) <= 1
        assert int(r["n_pairs"]) == 435


def test_echo_mode_tau_is_one(tmp_path):
    assert main(["run", "--out", str(tmp_path), "--backend", "mock:7:echo"]) == 0
    rows = read(tmp_path / "analytics" / "tau_report.csv")
    assert [float(r["tau_b"]) for r in rows] == [1.0, 1.0, 1.0]


def test_naive_subcommand(tmp_path):
    assert main(["naive", "--out", str(tmp_path), "--company", "C002"]) == 0
    runs = defaultdict(dict)
    for r in read(tmp_path / "naive_runs.csv"):
        runs[r["method_id"]][int(r["year"])] = float(r["score"])
    assert len(runs) == 3
    for r in read(tmp_path / "naive_correlation.csv"):
        want = oracles.eq1(runs[r["row"]], runs[r["col"]])
        if r["row"] == r["col"]:
            want = 1.0
        assert float(r["value"]) == pytest.approx(want, abs=1e-11)


def test_score_without_rubrics_exit_2(tmp_path):
    assert main(["score", "--out", str(tmp_path), "--rubric", "master"]) == 2


def test_svg_one_per_table_and_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--out", str(a), "--svg"]) == 0
    assert main(["run", "--out", str(b), "--svg"]) == 0
    svgs = sorted(p.name for p in (a / "analytics" / "svg").glob("*.svg"))
    assert svgs == sorted(f"{t}.svg" for t in ANALYTICS_TABLES)
    for name in svgs:
        assert (a / "analytics" / "svg" / name).read_bytes() == (b / "analytics" / "svg" / name).read_bytes()


def test_interrupted_run_resumes_to_identical_outputs(tmp_path, synthetic_config):
    from dataclasses import replace

    from disclosure_scoring import pipeline
    from disclosure_scoring.gateway import MockBackend, ProviderRejection

    class Dies(MockBackend):
        def __init__(self, after):
            super().__init__(seed=7)
            self.after = after
            self.answered = 0

        def send(self, req):
            with self._lock:
                if self.answered >= self.after:
                    raise ProviderRejection("connection killed")
                self.answered += 1
            return super().send(req)

    clean_cfg = replace(synthetic_config, output=replace(synthetic_config.output, dir="clean"))
    clean = MockBackend(7)
    pipeline.cmd_run(clean_cfg, clean_cfg.make_gateway(clean))

    cfg = replace(synthetic_config, output=replace(synthetic_config.output, dir="resumed"))
    dying = Dies(after=12)
    with pytest.raises(ProviderRejection):
        pipeline.cmd_run(cfg, cfg.make_gateway(dying))
    resumed = MockBackend(7)
    pipeline.cmd_run(cfg, cfg.make_gateway(resumed))

    assert dying.answered == 12 and resumed.calls == clean.calls - 12
    a, b = clean_cfg.output_dir, cfg.output_dir
    assert output_files(a) == output_files(b)
    for rel in output_files(a):
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel
