from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

import pytest

from disclosure_scoring.config import PipelineConfig
from disclosure_scoring.corpus import REQUIRED_COLUMNS, Corpus, SchemaConfig, load_corpus, read_sector_map
from disclosure_scoring.gateway import FileCache, Gateway, MockBackend

DATA = resources.files("disclosure_scoring.data")


def data_path(name: str) -> Path:
    return Path(str(DATA.joinpath(name)))


def write_csv(path: Path, rows: list[dict], header=REQUIRED_COLUMNS) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(header), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in header})
    return path


def row(cid="A", year=2010, qid="Q1", answer="carbon", country="Germany", sector="Industrials", **kw) -> dict:
    return {
        "company_id": cid, "company_name": f"{cid} Corp", "country": country, "sector": sector,
        "year": str(year), "question_id": qid, "question_text": "Describe your strategy.",
        "answer_text": answer, **kw,
    }


@pytest.fixture(scope="session")
def manifest() -> dict:
    return json.loads(data_path("synthetic_manifest.json").read_text("utf-8"))


@pytest.fixture(scope="session")
def fixture_corpus() -> Corpus:
    cfg = SchemaConfig(sector_map=read_sector_map(data_path("sector_map.txt")))
    return load_corpus(data_path("synthetic_corpus.csv"), cfg)


@pytest.fixture
def gateway(tmp_path) -> Gateway:
    return Gateway(MockBackend(seed=7), FileCache(tmp_path / "cache"), audit_dir=tmp_path / "audit")


@pytest.fixture
def synthetic_config(tmp_path) -> PipelineConfig:
    cfg = PipelineConfig(base_dir=tmp_path)
    cfg.backend.seed = 7
    cfg.output.dir = "out"
    return cfg


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
