"""JSONL dataset files, run manifest and deterministic balanced sampling."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .domain import ALL_LEVELS, ComplexityLevel, parse_level
from .errors import InsufficientLevel, IoError, ParseError

SAMPLE_FIELDS = (
    "id",
    "instance_id",
    "persona_name",
    "scenario_name",
    "complexity",
    "intent",
    "sql",
    "question",
    "paraphrases",
    "gold_result_digest",
    "provenance",
)
REQUIRED_FIELDS = ("id", "instance_id", "complexity", "intent", "sql", "question")


@dataclass(frozen=True)
class Provenance:
    generator_model: str = ""
    created_at: str = ""
    repair_attempts: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {"generator_model": self.generator_model, "created_at": self.created_at, "repair_attempts": self.repair_attempts}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Provenance:
        return cls(str(data.get("generator_model", "")), str(data.get("created_at", "")), int(data.get("repair_attempts", 0)))


@dataclass(frozen=True)
class DatasetSample:
    id: str
    instance_id: str
    persona_name: str
    scenario_name: str
    complexity: ComplexityLevel
    intent: str
    sql: str
    question: str
    paraphrases: tuple[str, ...] = ()
    gold_result_digest: str | None = None
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self) -> None:
        if not self.sql.strip() or not self.question.strip():
            raise ValueError("sample sql and question must be non-empty")
        if not isinstance(self.complexity, ComplexityLevel):
            object.__setattr__(self, "complexity", parse_level(self.complexity))
        object.__setattr__(self, "paraphrases", tuple(self.paraphrases))

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "instance_id": self.instance_id,
            "persona_name": self.persona_name,
            "scenario_name": self.scenario_name,
            "complexity": self.complexity.value,
            "intent": self.intent,
            "sql": self.sql,
            "question": self.question,
            "paraphrases": list(self.paraphrases),
            "gold_result_digest": self.gold_result_digest,
            "provenance": self.provenance.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> DatasetSample:
        return cls(
            id=str(data["id"]),
            instance_id=str(data["instance_id"]),
            persona_name=str(data.get("persona_name", "")),
            scenario_name=str(data.get("scenario_name", "")),
            complexity=parse_level(data["complexity"]),
            intent=str(data["intent"]),
            sql=str(data["sql"]),
            question=str(data["question"]),
            paraphrases=tuple(data.get("paraphrases") or ()),
            gold_result_digest=data.get("gold_result_digest"),
            provenance=Provenance.from_dict(data.get("provenance") or {}),
        )


def dumps_line(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False)


def write_jsonl(path: str | Path, rows: Iterable[Mapping[str, Any]]) -> int:
    n = 0
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for row in rows:
                fh.write(dumps_line(row) + "\n")
                n += 1
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return n


def read_jsonl(path: str | Path) -> list[Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    # Only "\n" ends a record; str.splitlines would also break on U+0085 or U+2028 inside strings.
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    out = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            raise ParseError(lineno, "blank line")
        try:
            out.append(json.loads(line))
        except ValueError as exc:
            raise ParseError(lineno, f"invalid JSON: {exc}") from exc
    return out


def write_samples(path: str | Path, samples: Sequence[DatasetSample]) -> int:
    ids = [s.id for s in samples]
    if len(set(ids)) != len(ids):
        raise ValueError("sample ids must be unique within a dataset file")
    return write_jsonl(path, (s.to_dict() for s in samples))


def read_samples(path: str | Path) -> list[DatasetSample]:
    out: list[DatasetSample] = []
    seen: set[str] = set()
    for lineno, row in enumerate(read_jsonl(path), start=1):
        if not isinstance(row, dict):
            raise ParseError(lineno, "expected a JSON object")
        for name in REQUIRED_FIELDS:
            if name not in row:
                raise ParseError(lineno, f"missing required field {name!r}", field=name)
        try:
            sample = DatasetSample.from_dict(row)
        except (ValueError, TypeError, KeyError) as exc:
            raise ParseError(lineno, f"invalid sample: {exc}") from exc
        if sample.id in seen:
            raise ParseError(lineno, f"duplicate id {sample.id}", field="id")
        seen.add(sample.id)
        out.append(sample)
    return out


def sample_balanced(
    samples: Sequence[DatasetSample],
    per_level: int,
    seed: int,
    levels: Sequence[ComplexityLevel] = ALL_LEVELS,
) -> list[DatasetSample]:
    """Exactly ``per_level`` samples from each level, chosen by ``seed``.

    Candidates are ordered by id before sampling so the result does not depend on
    input order.
    """
    if per_level <= 0:
        return []
    pools = {level: sorted((s for s in samples if s.complexity == level), key=lambda s: s.id) for level in levels}
    for level in levels:
        if len(pools[level]) < per_level:
            raise InsufficientLevel(level.value, len(pools[level]), per_level)
    rng = random.Random(seed)
    out: list[DatasetSample] = []
    for level in levels:
        out.extend(rng.sample(pools[level], per_level))
    return out


def write_json(path: str | Path, obj: Any) -> None:
    try:
        Path(path).write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ParseError(1, f"invalid JSON in {path}: {exc}") from exc


COUNT_KEYS = ("personas", "scenarios", "instances", "drafts", "dropped", "samples", "judged")
STAGES = ("model_logic", "synthesize", "judge", "bench")


@dataclass
class RunManifest:
    run_id: str
    config: dict[str, Any] = field(default_factory=dict)
    stages: dict[str, str] = field(default_factory=lambda: {s: "pending" for s in STAGES})
    counts: dict[str, int] = field(default_factory=lambda: {k: 0 for k in COUNT_KEYS})
    notes: list[str] = field(default_factory=list)

    def validate(self) -> None:
        for key, value in self.counts.items():
            if value < 0:
                raise ValueError(f"count {key} is negative")
        if self.stages.get("synthesize") == "done" and self.counts["dropped"] + self.counts["samples"] != self.counts["drafts"]:
            raise ValueError("dropped + samples must equal drafts that entered refinement")

    def to_dict(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "config": self.config,
            "stages": dict(self.stages),
            "counts": dict(self.counts),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> RunManifest:
        manifest = cls(str(data["run_id"]), dict(data.get("config") or {}))
        manifest.stages.update(data.get("stages") or {})
        manifest.counts.update({k: int(v) for k, v in (data.get("counts") or {}).items()})
        manifest.notes = list(data.get("notes") or [])
        return manifest

    def save(self, path: str | Path) -> None:
        self.validate()
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str | Path) -> RunManifest:
        return cls.from_dict(read_json(path))
