"""Run configuration: one YAML file, ``${VAR}`` interpolation, flag overrides."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

import yaml

from .domain import ALL_LEVELS, ComplexityLevel, DomainSpec, parse_level
from .errors import ConfigError
from .llm import HTTP_KIND, MOCK_KIND, ProviderConfig
from .judge import Dimension, parse_dimension

BENCH_MODES = ("react", "single_shot")

_ENV_REF = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)(?::-([^}]*))?\}")


def interpolate(value: Any, env: Mapping[str, str] | None = None) -> Any:
    """Replace ``${VAR}`` / ``${VAR:-default}`` in every string of a nested structure."""
    env = os.environ if env is None else env

    def sub(m: re.Match[str]) -> str:
        name, default = m.group(1), m.group(2)
        if name in env:
            return env[name]
        if default is not None:
            return default
        raise ConfigError(f"environment variable {name} is not set")

    if isinstance(value, str):
        return _ENV_REF.sub(sub, value)
    if isinstance(value, list):
        return [interpolate(v, env) for v in value]
    if isinstance(value, dict):
        return {k: interpolate(v, env) for k, v in value.items()}
    return value


@dataclass
class LogicParams:
    provider: str = "generator"
    num_personas: int = 20
    scenarios_per_persona: int = 5
    instances: int = 20
    content_attempts: int = 3


@dataclass
class SynthParams:
    provider: str = "generator"
    queries_per_level: int = 3
    levels: tuple[ComplexityLevel, ...] = ALL_LEVELS
    relevance_threshold: int = 2
    max_tables: int | None = 30
    batch_size: int = 25
    max_repair_attempts: int = 3
    empty_result_is_failure: bool = False
    row_limit: int = 1000
    timeout: float = 30.0
    content_attempts: int = 3


@dataclass
class JudgeParams:
    provider: str = "judge"
    dimensions: tuple[Dimension, ...] = tuple(Dimension)
    passes: int = 1
    classify_complexity: bool = False
    content_attempts: int = 3


@dataclass
class BenchParams:
    candidates: tuple[str, ...] = ()
    mode: str = "react"
    max_steps: int = 10
    per_level: int | None = 25
    verified_only: bool = True


@dataclass
class RunConfig:
    domain: DomainSpec
    providers: dict[str, ProviderConfig]
    database_path: Path
    out_dir: Path
    db_engine_name: str = "SQLite"
    seed: int = 0
    workers: int = 1
    source_date_epoch: int | None = None
    templates_dir: Path | None = None
    logic: LogicParams = field(default_factory=LogicParams)
    synthesize: SynthParams = field(default_factory=SynthParams)
    judge: JudgeParams = field(default_factory=JudgeParams)
    bench: BenchParams = field(default_factory=BenchParams)
    raw: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> None:
        counts = {
            "seed": self.seed,
            "logic.num_personas": self.logic.num_personas,
            "logic.scenarios_per_persona": self.logic.scenarios_per_persona,
            "logic.instances": self.logic.instances,
            "synthesize.queries_per_level": self.synthesize.queries_per_level,
            "synthesize.max_repair_attempts": self.synthesize.max_repair_attempts,
            "bench.max_steps": self.bench.max_steps,
        }
        for name, value in counts.items():
            if value < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.synthesize.batch_size < 1:
            raise ConfigError("synthesize.batch_size must be >= 1")
        if not 0 <= self.synthesize.relevance_threshold <= 3:
            raise ConfigError("synthesize.relevance_threshold must be in 0..3")
        if self.synthesize.max_tables is not None and self.synthesize.max_tables < 1:
            raise ConfigError("synthesize.max_tables must be >= 1")
        if self.bench.mode not in BENCH_MODES:
            raise ConfigError(f"bench.mode must be one of {BENCH_MODES}")
        if self.bench.per_level is not None and self.bench.per_level < 0:
            raise ConfigError("bench.per_level must be >= 0")
        if self.judge.passes < 1:
            raise ConfigError("judge.passes must be >= 1")
        refs = [("logic.provider", self.logic.provider), ("synthesize.provider", self.synthesize.provider),
                ("judge.provider", self.judge.provider)]
        refs += [("bench.candidates", c) for c in self.bench.candidates]
        for where, name in refs:
            if name not in self.providers:
                raise ConfigError(f"{where} refers to unknown provider {name!r}")

    def created_at(self) -> str:
        """Timestamp stamped into artifacts; pinned when ``source_date_epoch`` is set."""
        if self.source_date_epoch is not None:
            moment = datetime.fromtimestamp(self.source_date_epoch, tz=timezone.utc)
        else:
            moment = datetime.now(tz=timezone.utc)
        return moment.replace(microsecond=0).isoformat().replace("+00:00", "Z")


def _section(raw: Mapping[str, Any], name: str) -> dict[str, Any]:
    value = raw.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return dict(value)


def _build(cls: type, data: dict[str, Any], where: str, **converters: Any) -> Any:
    known = set(cls.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        for key, conv in converters.items():
            if key in data and data[key] is not None:
                data[key] = conv(data[key])
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _provider(name: str, data: Mapping[str, Any], base: Path) -> ProviderConfig:
    if not isinstance(data, Mapping):
        raise ConfigError(f"provider {name!r} must be a mapping")
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in (HTTP_KIND, MOCK_KIND):
        raise ConfigError(f"provider {name!r}: kind must be {HTTP_KIND!r} or {MOCK_KIND!r}")
    if data.get("fixture_directory") is not None:
        data["fixture_directory"] = base / data["fixture_directory"]
    allowed = set(ProviderConfig.__dataclass_fields__) - {"kind", "name"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"provider {name!r}: unknown keys {sorted(unknown)}")
    try:
        return ProviderConfig(kind=kind, name=name, **data)
    except TypeError as exc:
        raise ConfigError(f"provider {name!r}: {exc}") from exc


def config_from_dict(
    raw: Mapping[str, Any],
    base_dir: str | Path = ".",
    *,
    env: Mapping[str, str] | None = None,
    seed: int | None = None,
    workers: int | None = None,
    out_dir: str | Path | None = None,
) -> RunConfig:
    """Build and validate a :class:`RunConfig`; keyword overrides win over file values."""
    base = Path(base_dir)
    snapshot = {k: v for k, v in raw.items() if k != "out_dir"}
    data = interpolate(dict(raw), env)
    known = {"domain", "providers", "database", "out_dir", "seed", "workers", "source_date_epoch",
             "templates_dir", "model_logic", "synthesize", "judge", "bench"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")

    try:
        domain = DomainSpec.from_dict(data["domain"])
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"domain: {exc}") from exc

    providers_raw = data.get("providers") or {}
    if not isinstance(providers_raw, dict) or not providers_raw:
        raise ConfigError("providers must be a non-empty mapping")
    providers = {name: _provider(name, spec, base) for name, spec in providers_raw.items()}

    database = _section(data, "database")
    if "path" not in database:
        raise ConfigError("database.path is required")

    synth = _section(data, "synthesize")
    judge = _section(data, "judge")
    bench = _section(data, "bench")
    if "candidates" in bench and isinstance(bench["candidates"], str):
        bench["candidates"] = [bench["candidates"]]

    templates_dir = data.get("templates_dir")
    config = RunConfig(
        domain=domain,
        providers=providers,
        database_path=base / database["path"],
        db_engine_name=str(database.get("engine_name", "SQLite")),
        out_dir=Path(out_dir) if out_dir is not None else base / data.get("out_dir", "out"),
        seed=int(seed if seed is not None else data.get("seed", 0)),
        workers=int(workers if workers is not None else data.get("workers", 1)),
        source_date_epoch=None if data.get("source_date_epoch") is None else int(data["source_date_epoch"]),
        templates_dir=None if templates_dir is None else base / templates_dir,
        logic=_build(LogicParams, _section(data, "model_logic"), "model_logic"),
        synthesize=_build(SynthParams, synth, "synthesize", levels=lambda v: tuple(parse_level(x) for x in v)),
        judge=_build(JudgeParams, judge, "judge", dimensions=lambda v: tuple(parse_dimension(x) for x in v)),
        bench=_build(BenchParams, bench, "bench", candidates=tuple),
        raw=snapshot,
    )
    config.validate()
    return config


def load_config(path: str | Path, **overrides: Any) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(raw, path.parent, **overrides)
