"""Complexity-conditioned SQL draft generation and execution-guided repair."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

from .domain import BusinessLogicInstance, ComplexityLevel, DomainSpec, parse_level
from .errors import GenerationFailed
from .executor import DEFAULT_ROW_LIMIT, DEFAULT_TIMEOUT, ExecutionOutcome, Executor
from .llm import JUDGE_TEMPERATURE, Asker, Provider, render_template
from .logic import as_asker, stable_id
from .prompts import (
    DEFAULT_COMPLEXITY_SPECS,
    ComplexitySpec,
    area_for,
    complexity_block,
    context_bindings,
    levels_block,
    load_templates,
)
from .schema import SchemaSubset, tables_block

DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_QUERIES_PER_LEVEL = 3
EMPTY_RESULT_MESSAGE = "query executed but returned no rows"


@dataclass(frozen=True)
class RepairAttempt:
    attempt: int
    error: str
    reasoning: str
    sql_before: str

    def to_dict(self) -> dict[str, Any]:
        return {"attempt": self.attempt, "error": self.error, "reasoning": self.reasoning, "sql_before": self.sql_before}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> RepairAttempt:
        return cls(int(data["attempt"]), data["error"], data.get("reasoning", ""), data["sql_before"])


@dataclass(frozen=True)
class QueryDraft:
    id: str
    instance_id: str
    complexity: ComplexityLevel
    intent: str
    sql: str
    repair_history: tuple[RepairAttempt, ...] = ()

    def __post_init__(self) -> None:
        if not self.sql or not self.sql.strip():
            raise ValueError("draft sql must be non-empty")
        if not self.intent or not self.intent.strip():
            raise ValueError("draft intent must be non-empty")
        object.__setattr__(self, "repair_history", tuple(self.repair_history))
        attempts = [a.attempt for a in self.repair_history]
        if attempts != list(range(1, len(attempts) + 1)):
            raise ValueError("repair_history attempts must count up from 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "instance_id": self.instance_id,
            "complexity": self.complexity.value,
            "intent": self.intent,
            "sql": self.sql,
            "repair_history": [a.to_dict() for a in self.repair_history],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> QueryDraft:
        return cls(
            data["id"],
            data["instance_id"],
            parse_level(data["complexity"]),
            data["intent"],
            data["sql"],
            tuple(RepairAttempt.from_dict(a) for a in data.get("repair_history", [])),
        )


@dataclass(frozen=True)
class Dropped:
    draft: QueryDraft
    final_error: str

    def to_dict(self) -> dict[str, Any]:
        return {"draft": self.draft.to_dict(), "final_error": self.final_error}


# --- table reference scan ------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*|/\*.*?\*/)
  | (?P<string>'(?:[^']|'')*')
  | (?P<quoted>"(?:[^"]|"")*"|`[^`]*`|\[[^\]]*\])
  | (?P<word>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<punct>[(),.;])
  | (?P<other>.)
    """,
    re.S | re.X,
)


def sql_tokens(sql: str) -> list[tuple[str, str]]:
    out = []
    for m in _TOKEN.finditer(sql):
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            continue
        text = m.group()
        if kind == "quoted":
            kind, text = "word", text[1:-1].replace('""', '"')
        out.append((kind, text))
    return out


def cte_names(sql: str) -> set[str]:
    toks = sql_tokens(sql)
    names = set()
    for i in range(len(toks) - 2):
        kind, text = toks[i]
        if kind != "word":
            continue
        nxt = toks[i + 1][1]
        if nxt.upper() == "AS" and toks[i + 2][1] == "(":
            names.add(text.lower())
        elif nxt == "(":
            # name(col, ...) AS (
            depth, j = 0, i + 1
            while j < len(toks):
                if toks[j][1] == "(":
                    depth += 1
                elif toks[j][1] == ")":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            if j + 2 < len(toks) and toks[j + 1][1].upper() == "AS" and toks[j + 2][1] == "(":
                names.add(text.lower())
    return names


_CLAUSE_END = {
    "WHERE", "GROUP", "ORDER", "HAVING", "LIMIT", "UNION", "EXCEPT", "INTERSECT", "JOIN", "INNER", "LEFT",
    "RIGHT", "FULL", "CROSS", "NATURAL", "ON", "USING", "WINDOW", "OUTER",
}


def referenced_tables(sql: str) -> set[str]:
    """Lower-cased table names following FROM/JOIN, excluding CTEs, subqueries and table functions."""
    toks = sql_tokens(sql)
    found: set[str] = set()
    i = 0
    while i < len(toks):
        kind, text = toks[i]
        upper = text.upper() if kind == "word" else ""
        if upper in ("FROM", "JOIN"):
            i += 1
            while i < len(toks):
                if toks[i][1] == "(":
                    break
                if toks[i][0] != "word":
                    break
                name = toks[i][1]
                # schema-qualified: keep the last part
                while i + 2 < len(toks) and toks[i + 1][1] == "." and toks[i + 2][0] == "word":
                    i += 2
                    name = toks[i][1]
                i += 1
                if i < len(toks) and toks[i][1] == "(":
                    break  # table-valued function
                found.add(name.lower())
                # optional alias
                if i < len(toks) and toks[i][1].upper() == "AS":
                    i += 1
                if i < len(toks) and toks[i][0] == "word" and toks[i][1].upper() not in _CLAUSE_END:
                    i += 1
                if upper == "FROM" and i < len(toks) and toks[i][1] == ",":
                    i += 1
                    continue
                break
            continue
        i += 1
    return found - cte_names(sql)


def tables_outside(sql: str, subset: SchemaSubset) -> list[str]:
    allowed = {n.lower() for n in subset.table_names}
    return sorted(t for t in referenced_tables(sql) if t not in allowed)


# --- generation ----------------------------------------------------------------


def parse_drafts(
    payload: Any,
    *,
    instance_id: str,
    level: ComplexityLevel,
    num_queries: int,
    subset: SchemaSubset,
    id_prefix: str,
) -> list[QueryDraft]:
    items = payload["queries"]
    if not isinstance(items, list):
        raise ValueError("queries must be a list")
    if len(items) < num_queries:
        raise ValueError(f"expected {num_queries} queries, got {len(items)}")
    drafts = []
    for k, item in enumerate(items[:num_queries]):
        sql = str(item["sql"]).strip()
        outside = tables_outside(sql, subset)
        if outside:
            raise ValueError(f"query {k} references tables outside the allowed schema: {outside}")
        drafts.append(
            QueryDraft(
                id=stable_id("draft", id_prefix, instance_id, level.value, k),
                instance_id=instance_id,
                complexity=level,
                intent=str(item["intent"]).strip(),
                sql=sql,
            )
        )
    return drafts


def generate_drafts(
    instance: BusinessLogicInstance,
    subset: SchemaSubset,
    level: ComplexityLevel,
    num_queries: int,
    llm: Provider | Asker,
    *,
    spec: DomainSpec,
    templates: Mapping[str, str] | None = None,
    complexity_specs: Mapping[ComplexityLevel, ComplexitySpec] = DEFAULT_COMPLEXITY_SPECS,
    db_engine_name: str = "SQLite",
    id_prefix: str = "",
) -> list[QueryDraft]:
    if num_queries < 1:
        raise ValueError("num_queries must be >= 1")
    if not subset.tables:
        raise ValueError("schema subset is empty")
    if subset.instance_id != instance.id:
        raise ValueError("schema subset belongs to a different instance")
    templates = templates or load_templates()
    bindings = context_bindings(spec, area_for(spec, instance.persona), instance, db_engine_name=db_engine_name)
    bindings.update(
        complexity_block=complexity_block(complexity_specs[level]),
        intent_complexity_level=level.value,
        num_queries=str(num_queries),
        tables_block=tables_block(subset.tables),
    )
    prompt = render_template(templates["sql_generation"], bindings)
    return as_asker(llm).ask(
        "generate_drafts",
        prompt,
        lambda p: parse_drafts(
            p, instance_id=instance.id, level=level, num_queries=num_queries, subset=subset, id_prefix=id_prefix
        ),
        tag=f"sql:{level.value}",
    )


def execute(db: Executor, sql: str, row_limit: int = DEFAULT_ROW_LIMIT, timeout: float = DEFAULT_TIMEOUT) -> ExecutionOutcome:
    if not sql or not sql.strip():
        return ExecutionOutcome.failure("empty SQL statement")
    return db.execute(sql, row_limit=row_limit, timeout=timeout)


@dataclass
class RefinePolicy:
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    empty_result_is_failure: bool = False
    row_limit: int = DEFAULT_ROW_LIMIT
    timeout: float = DEFAULT_TIMEOUT
    db_engine_name: str = "SQLite"
    stats: dict[str, int] = field(default_factory=lambda: {"repair_calls": 0, "executions": 0})


def _parse_repair(payload: Any) -> tuple[str, str]:
    sql = str(payload["sql"]).strip()
    if not sql:
        raise ValueError("repair returned empty sql")
    return sql, str(payload.get("reasoning", ""))


def refine_until_executable(
    draft: QueryDraft,
    instance: BusinessLogicInstance,
    subset: SchemaSubset,
    db: Executor,
    llm: Provider | Asker,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    *,
    spec: DomainSpec,
    templates: Mapping[str, str] | None = None,
    policy: RefinePolicy | None = None,
) -> QueryDraft | Dropped:
    """Run the draft; on failure feed the error through the repair prompt up to ``max_attempts`` times."""
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    policy = policy or RefinePolicy(max_attempts=max_attempts)
    templates = templates or load_templates()
    base = as_asker(llm)
    # One LLM call per repair attempt; malformed replies consume the attempt.
    asker = Asker(base.provider, base.temperature, base.max_output_tokens, attempts=1, seed=base.seed)

    def run(sql: str) -> str | None:
        policy.stats["executions"] += 1
        outcome = execute(db, sql, policy.row_limit, policy.timeout)
        if not outcome.ok:
            return outcome.error_message or "execution failed"
        if policy.empty_result_is_failure and not outcome.rows:
            return EMPTY_RESULT_MESSAGE
        return None

    error = run(draft.sql)
    if error is None:
        return draft

    bindings = context_bindings(spec, area_for(spec, instance.persona), instance, db_engine_name=policy.db_engine_name)
    bindings.update(tables_block=tables_block(subset.tables), intent_block=draft.intent)
    sql = draft.sql
    history: list[RepairAttempt] = []
    for attempt in range(1, max_attempts + 1):
        prompt = render_template(templates["sql_refinement"], {**bindings, "sql_block": sql, "error_block": error})
        policy.stats["repair_calls"] += 1
        try:
            new_sql, reasoning = asker.ask("refine_sql", prompt, _parse_repair, tag="repair")
        except GenerationFailed as exc:
            history.append(RepairAttempt(attempt, error, "", sql))
            error = f"repair response unusable: {exc.reason}"
            continue
        history.append(RepairAttempt(attempt, error, reasoning, sql))
        sql = new_sql
        outside = tables_outside(sql, subset)
        if outside:
            error = f"query references tables outside the allowed schema: {', '.join(outside)}"
            continue
        error = run(sql)
        if error is None:
            return replace(draft, sql=sql, repair_history=tuple(history))
    return Dropped(replace(draft, sql=sql, repair_history=tuple(history)), error)


def parse_classification(payload: Any) -> ComplexityLevel:
    return parse_level(payload["complexity_level"])


def classify_complexity(
    intent: str,
    sql: str,
    judge: Provider | Asker,
    *,
    templates: Mapping[str, str] | None = None,
    complexity_specs: Mapping[ComplexityLevel, ComplexitySpec] = DEFAULT_COMPLEXITY_SPECS,
) -> ComplexityLevel:
    """Label a (question or intent, SQL) pair with one of the four levels."""
    if not sql or not sql.strip():
        raise ValueError("sql must be non-empty")
    templates = templates or load_templates()
    prompt = render_template(
        templates["complexity_classification"],
        {"levels_block": levels_block(dict(complexity_specs)), "question": intent, "sql": sql},
    )
    asker = as_asker(judge, temperature=JUDGE_TEMPERATURE)
    return asker.ask("classify_complexity", prompt, parse_classification, tag="classify")
