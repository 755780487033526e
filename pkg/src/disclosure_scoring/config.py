"""Pipeline configuration: one versioned YAML file, CLI flags override keys."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .corpus import DEFAULT_YEAR_WINDOW, SchemaConfig, read_sector_map
from .gateway import DEFAULT_CREDENTIAL_ENV, FileCache, Gateway, MockBackend, OpenAICompatibleBackend
from .rubrics import SamplingConfig

CONFIG_VERSION = 1
BUILTIN_PREFIX = "builtin:"


class ConfigError(ValueError):
    pass


def resolve_path(value: str, base: Path) -> Path:
    """``builtin:<name>`` points into the bundled data directory; other relative paths
    resolve against the config file's directory."""
    if value.startswith(BUILTIN_PREFIX):
        return Path(str(resources.files("disclosure_scoring.data").joinpath(value[len(BUILTIN_PREFIX):])))
    p = Path(value).expanduser()
    return p if p.is_absolute() else (base / p).resolve()


@dataclass
class CorpusConfig:
    path: str = "builtin:synthetic_corpus.csv"
    columns: dict[str, str] = field(default_factory=dict)
    sector_map: str | None = "builtin:sector_map.txt"
    country_aliases: dict[str, str] = field(default_factory=dict)
    year_window: tuple[int, int] = DEFAULT_YEAR_WINDOW
    questions: dict[int, list[str]] | None = None
    stopwords: list[str] = field(default_factory=list)


@dataclass
class BackendConfig:
    kind: str = "mock"
    seed: int = 0
    echo: bool = False
    model_id: str = "mock-model"
    base_url: str = "https://api.openai.com/v1"
    credential_env: str = DEFAULT_CREDENTIAL_ENV
    max_attempts: int = 4
    backoff_base: float = 0.5
    max_parallel: int = 4
    requests_per_minute: float | None = None
    structured_attempts: int = 3


@dataclass
class ScoringConfig:
    chunk_size: int = 10
    max_answer_chars: int | None = None


@dataclass
class NaiveConfig:
    variants: list[str] = field(default_factory=lambda: ["plain", "year_hidden", "shuffled"])
    seed: int = 0


@dataclass
class ReportConfig:
    words_k: int = 2
    svg: bool = False


@dataclass
class OutputConfig:
    dir: str = "out"
    cache_dir: str | None = None


@dataclass
class PipelineConfig:
    version: int = CONFIG_VERSION
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    years: tuple[int, int] | None = None
    backend: BackendConfig = field(default_factory=BackendConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    naive: NaiveConfig = field(default_factory=NaiveConfig)
    report: ReportConfig = field(default_factory=ReportConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    base_dir: Path = field(default_factory=Path.cwd, compare=False)

    # -- derived ----------------------------------------------------------
    @property
    def output_dir(self) -> Path:
        return resolve_path(self.output.dir, self.base_dir)

    @property
    def cache_dir(self) -> Path:
        if self.output.cache_dir:
            return resolve_path(self.output.cache_dir, self.base_dir)
        return self.output_dir / "cache"

    def corpus_path(self) -> Path:
        return resolve_path(self.corpus.path, self.base_dir)

    def schema_config(self) -> SchemaConfig:
        smap = {}
        if self.corpus.sector_map:
            smap = read_sector_map(resolve_path(self.corpus.sector_map, self.base_dir))
        allow = None
        if self.corpus.questions is not None:
            allow = {int(y): set(q) for y, q in self.corpus.questions.items()}
        return SchemaConfig(
            columns=dict(self.corpus.columns),
            year_window=tuple(self.corpus.year_window),
            sector_map=smap,
            country_aliases=dict(self.corpus.country_aliases),
            question_allowlist=allow,
        )

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=list, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def make_backend(self):
        b = self.backend
        if b.kind == "mock":
            return MockBackend(seed=b.seed, echo=b.echo)
        return OpenAICompatibleBackend(base_url=b.base_url, credential_env=b.credential_env)

    def make_gateway(self, backend=None) -> Gateway:
        b = self.backend
        return Gateway(
            backend or self.make_backend(),
            FileCache(self.cache_dir),
            max_attempts=b.max_attempts,
            backoff_base=b.backoff_base,
            max_parallel=b.max_parallel,
            requests_per_minute=b.requests_per_minute,
            structured_attempts=b.structured_attempts,
            audit_dir=self.output_dir / "audit",
        )


def _build(cls, data: Any, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}")
    kwargs = {}
    for name, value in data.items():
        default = getattr(cls(), name)
        if is_dataclass(default):
            value = _build(type(default), value, f"{where}.{name}")
        elif isinstance(default, tuple) or name in ("year_window", "years"):
            value = tuple(value) if value is not None else None
        kwargs[name] = value
    return cls(**kwargs)


def validate(cfg: PipelineConfig) -> PipelineConfig:
    if cfg.version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {cfg.version}")
    if cfg.backend.kind not in ("mock", "live"):
        raise ConfigError("backend.kind must be 'mock' or 'live'")
    lo, hi = cfg.corpus.year_window
    if lo > hi:
        raise ConfigError("corpus.year_window must be [first, last]")
    if cfg.years is not None and (len(cfg.years) != 2 or cfg.years[0] > cfg.years[1]):
        raise ConfigError("years must be [first, last]")
    if cfg.report.words_k < 1:
        raise ConfigError("report.words_k must be >= 1")
    if cfg.scoring.chunk_size < 1:
        raise ConfigError("scoring.chunk_size must be >= 1")
    return cfg


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return validate(PipelineConfig())
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = _build(PipelineConfig, data, str(path))
    cfg.base_dir = path.resolve().parent
    return validate(cfg)


def parse_years(text: str) -> tuple[int, int]:
    """``"2010..2012"`` or ``"2015"``."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return int(a), int(b)
        return int(text), int(text)
    except ValueError as exc:
        raise ConfigError(f"bad --years value {text!r}; expected A..B") from exc


def parse_backend(text: str) -> dict[str, Any]:
    """``"live"``, ``"mock:SEED"`` or ``"mock:SEED:echo"``."""
    parts = text.split(":")
    if parts == ["live"]:
        return {"kind": "live"}
    if parts[0] == "mock" and 2 <= len(parts) <= 3:
        try:
            seed = int(parts[1])
        except ValueError as exc:
            raise ConfigError(f"bad mock seed in {text!r}") from exc
        if len(parts) == 3 and parts[2] != "echo":
            raise ConfigError(f"unknown mock mode {parts[2]!r}")
        return {"kind": "mock", "seed": seed, "echo": len(parts) == 3}
    raise ConfigError(f"bad --backend value {text!r}; expected mock:SEED or live")
