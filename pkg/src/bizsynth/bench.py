"""Execution-accuracy benchmarking of Text-to-SQL models (single-shot or ReAct loop)."""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .dataset import DatasetSample
from .domain import ALL_LEVELS, ComplexityLevel
from .errors import GenerationFailed, MissingPrediction
from .executor import ExecutionOutcome, Executor, render_outcome
from .forge import sql_tokens
from .llm import JUDGE_TEMPERATURE, Asker, ChatRequest, Provider, render_template, split_prompt
from .logic import as_asker
from .prompts import load_templates

MATCH = "match"
MISMATCH = "mismatch"
INVALID = "invalid"

NUMERIC_TOLERANCE = 1e-6
_SCALE = 1_000_000  # 1 / NUMERIC_TOLERANCE
BENCH_ROW_LIMIT = 100_000
DEFAULT_MAX_STEPS = 10

ACTIONS = ("execute", "respond")


# --- canonical results ---------------------------------------------------------------


def _canon_cell(value: Any) -> tuple[int, Any]:
    if value is None:
        return (0, 0)
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, int):
        return (2, value * _SCALE)
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return (1, repr(value))
        if value.is_integer():
            return (2, int(value) * _SCALE)
        return (2, round(value * _SCALE))
    if isinstance(value, (bytes, bytearray)):
        return (3, bytes(value).hex())
    return (3, str(value).strip())


def canonicalize(rows: Iterable[Sequence[Any]], order_sensitive: bool = False) -> tuple[tuple[tuple[int, Any], ...], ...]:
    """Comparable form of a result table.

    Numbers are snapped to a 1e-6 grid (ints and floats compare equal), text is
    trimmed, NULL stays distinct from the empty string, and columns are compared by
    position. Rows form a multiset unless ``order_sensitive``.
    """
    canon = [tuple(_canon_cell(v) for v in row) for row in rows]
    if not order_sensitive:
        canon.sort()
    return tuple(canon)


def result_digest(rows: Iterable[Sequence[Any]], order_sensitive: bool = False) -> str:
    canon = canonicalize(rows, order_sensitive)
    payload = json.dumps({"ordered": order_sensitive, "rows": [[list(c) for c in r] for r in canon]}, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def has_top_level_order_by(sql: str) -> bool:
    depth = 0
    toks = sql_tokens(sql)
    for i, (kind, text) in enumerate(toks):
        if text == "(":
            depth += 1
        elif text == ")":
            depth -= 1
        elif depth == 0 and kind == "word" and text.upper() == "ORDER":
            if i + 1 < len(toks) and toks[i + 1][1].upper() == "BY":
                return True
    return False


def compare_outcomes(gold: ExecutionOutcome, predicted: ExecutionOutcome, order_sensitive: bool) -> str:
    if not gold.ok:
        raise ValueError(f"gold SQL failed: {gold.error_message}")
    if not predicted.ok:
        return INVALID
    same = canonicalize(gold.rows or (), order_sensitive) == canonicalize(predicted.rows or (), order_sensitive)
    return MATCH if same else MISMATCH


def execution_accuracy(gold_sql: str, predicted_sql: str, db: Executor, row_limit: int = BENCH_ROW_LIMIT) -> str:
    """``match`` / ``mismatch`` / ``invalid``; row order matters only when gold has a top-level ORDER BY."""
    gold = db.execute(gold_sql, row_limit=row_limit)
    if not predicted_sql or not predicted_sql.strip():
        if not gold.ok:
            raise ValueError(f"gold SQL failed: {gold.error_message}")
        return INVALID
    predicted = db.execute(predicted_sql, row_limit=row_limit)
    return compare_outcomes(gold, predicted, has_top_level_order_by(gold_sql))


# --- SQL extraction --------------------------------------------------------------------

_FENCE = re.compile(r"```[ \t]*([A-Za-z0-9_+-]*)[ \t]*\n(.*?)```", re.S)
_SQL_START = re.compile(r"^\s*(SELECT|WITH)\b", re.I)


def extract_sql(text: str, *, last: bool = False) -> str | None:
    """First (or last) fenced code block, else the whole text if it reads as a query."""
    blocks = [(lang.lower(), body.strip()) for lang, body in _FENCE.findall(text or "")]
    blocks = [(lang, body) for lang, body in blocks if body]
    if blocks:
        sql_blocks = [b for lang, b in blocks if lang == "sql"] or [b for _, b in blocks]
        return sql_blocks[-1] if last else sql_blocks[0]
    stripped = (text or "").strip()
    if _SQL_START.match(stripped):
        return stripped
    return None


# --- predictions -------------------------------------------------------------------------


@dataclass(frozen=True)
class TranscriptStep:
    thought: str
    action: str
    payload: str
    observation: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"thought": self.thought, "action": self.action, "payload": self.payload, "observation": self.observation}


@dataclass
class PredictionRecord:
    sample_id: str
    predicted_sql: str
    transcript: list[TranscriptStep] = field(default_factory=list)
    outcome: ExecutionOutcome | None = None
    budget_exhausted: bool = False
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "predicted_sql": self.predicted_sql,
            "budget_exhausted": self.budget_exhausted,
            "error": self.error,
            "transcript": [s.to_dict() for s in self.transcript],
            "outcome": None if self.outcome is None else self.outcome.to_dict(),
        }


def run_single_shot(
    sample: DatasetSample,
    schema_text: str,
    model: Provider,
    *,
    templates: Mapping[str, str] | None = None,
    db_engine_name: str = "SQLite",
    temperature: float = JUDGE_TEMPERATURE,
) -> PredictionRecord:
    templates = templates or load_templates()
    prompt = render_template(
        templates["bench_single_shot"],
        {"db_engine_name": db_engine_name, "schema_text": schema_text, "question": sample.question},
    )
    system, user = split_prompt(prompt)
    reply = model.complete(
        ChatRequest(model.model_name, system, user, temperature=temperature, tag="bench:single_shot")
    ).raw_text
    sql = extract_sql(reply)
    if not sql:
        raise GenerationFailed("run_single_shot", "no SQL found in reply")
    return PredictionRecord(sample.id, sql)


def parse_step(payload: Any) -> TranscriptStep:
    action = str(payload["action"]).strip().lower()
    if action not in ACTIONS:
        raise ValueError(f"unknown action {payload['action']!r}")
    return TranscriptStep(str(payload.get("thought", "")), action, str(payload.get("payload", "")))


def _history(steps: Sequence[TranscriptStep]) -> str:
    if not steps:
        return "(none)"
    chunks = []
    for n, s in enumerate(steps, start=1):
        chunk = f"Step {n}\nThought: {s.thought}\nAction: {s.action}\nPayload: {s.payload}"
        if s.observation is not None:
            chunk += f"\nObservation:\n{s.observation}"
        chunks.append(chunk)
    return "\n\n".join(chunks)


def run_react(
    sample: DatasetSample,
    schema_text: str,
    model: Provider | Asker,
    db: Executor,
    max_steps: int = DEFAULT_MAX_STEPS,
    *,
    templates: Mapping[str, str] | None = None,
    db_engine_name: str = "SQLite",
    observation_rows: int = 20,
    row_limit: int = 1000,
) -> PredictionRecord:
    """Thought/action loop over ``execute`` and ``respond`` until respond or ``max_steps``."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    templates = templates or load_templates()
    asker = as_asker(model, temperature=JUDGE_TEMPERATURE)
    steps: list[TranscriptStep] = []
    last_executed: str | None = None
    for _ in range(max_steps):
        prompt = render_template(
            templates["bench_react"],
            {
                "db_engine_name": db_engine_name,
                "schema_text": schema_text,
                "question": sample.question,
                "history": _history(steps),
            },
        )
        step = asker.ask("run_react", prompt, parse_step, tag=f"bench:react:{len(steps)}")
        if step.action == "execute":
            sql = extract_sql(step.payload) or step.payload.strip()
            observation = render_outcome(db.execute(sql, row_limit=row_limit), max_rows=observation_rows)
            steps.append(TranscriptStep(step.thought, step.action, step.payload, observation))
            last_executed = sql
            continue
        steps.append(step)
        final = extract_sql(step.payload, last=True) or last_executed or ""
        return PredictionRecord(sample.id, final, steps)
    return PredictionRecord(sample.id, last_executed or "", steps, budget_exhausted=True)


# --- scoring -----------------------------------------------------------------------------


@dataclass
class BenchResult:
    model_name: str
    verdicts: dict[str, str]
    overall_accuracy: float
    per_level_accuracy: dict[ComplexityLevel, float]
    per_level_counts: dict[ComplexityLevel, int]

    def to_dict(self) -> dict[str, Any]:
        return {
            "model_name": self.model_name,
            "overall_accuracy": self.overall_accuracy,
            "per_level_accuracy": {k.value: v for k, v in self.per_level_accuracy.items()},
            "per_level_counts": {k.value: v for k, v in self.per_level_counts.items()},
            "verdicts": dict(self.verdicts),
        }


def score_run(
    predictions: Mapping[str, PredictionRecord] | Sequence[PredictionRecord],
    samples: Sequence[DatasetSample],
    db: Executor,
    *,
    model_name: str = "",
    row_limit: int = BENCH_ROW_LIMIT,
) -> BenchResult:
    if not isinstance(predictions, Mapping):
        predictions = {p.sample_id: p for p in predictions}
    verdicts: dict[str, str] = {}
    hits: dict[ComplexityLevel, int] = {}
    totals: dict[ComplexityLevel, int] = {}
    for sample in samples:
        pred = predictions.get(sample.id)
        if pred is None:
            raise MissingPrediction(sample.id)
        gold = db.execute(sample.sql, row_limit=row_limit)
        if pred.predicted_sql.strip():
            pred.outcome = db.execute(pred.predicted_sql, row_limit=row_limit)
            verdict = compare_outcomes(gold, pred.outcome, has_top_level_order_by(sample.sql))
        else:
            if not gold.ok:
                raise ValueError(f"gold SQL failed for {sample.id}: {gold.error_message}")
            verdict = INVALID
        verdicts[sample.id] = verdict
        totals[sample.complexity] = totals.get(sample.complexity, 0) + 1
        hits[sample.complexity] = hits.get(sample.complexity, 0) + (verdict == MATCH)
    total = len(samples)
    overall = sum(hits.values()) / total if total else 0.0
    per_level = {lvl: hits[lvl] / totals[lvl] for lvl in ALL_LEVELS if lvl in totals}
    return BenchResult(model_name, verdicts, overall, per_level, {lvl: totals[lvl] for lvl in ALL_LEVELS if lvl in totals})


LEVEL_HEADERS = {
    ComplexityLevel.SINGLE_METRIC: "Single Metric",
    ComplexityLevel.COMPARATIVE_METRIC: "Comparative Metric",
    ComplexityLevel.DERIVED_METRIC: "Derived Metric",
    ComplexityLevel.COMPOSITIONAL_TASK: "Compositional Task",
}


def render_bench_table(results: Sequence[BenchResult]) -> str:
    header = ["Model"] + [LEVEL_HEADERS[lvl] for lvl in ALL_LEVELS] + ["Overall"]
    rows = []
    for r in results:
        cells = [f"{100 * r.per_level_accuracy[lvl]:.2f}" if lvl in r.per_level_accuracy else "-" for lvl in ALL_LEVELS]
        rows.append([r.model_name] + cells + [f"{100 * r.overall_accuracy:.2f}"])
    widths = [max(len(row[i]) for row in [header] + rows) for i in range(len(header))]
    fmt = lambda row: " | ".join(c.ljust(w) for c, w in zip(row, widths))  # noqa: E731
    return "\n".join([fmt(header), "-+-".join("-" * w for w in widths)] + [fmt(r) for r in rows]) + "\n"
