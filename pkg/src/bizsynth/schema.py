"""Database introspection, LLM relevance scoring (0-3) and schema subset selection."""

from __future__ import annotations

import sqlite3
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .domain import BusinessLogicInstance, DomainSpec
from .errors import DbUnavailable, EmptySubset
from .llm import Asker, Provider, render_template
from .logic import as_asker
from .prompts import area_for, context_bindings, load_templates

RELEVANCE_SCORES = (0, 1, 2, 3)
DEFAULT_THRESHOLD = 2
DEFAULT_BATCH_SIZE = 25
DEFAULT_MAX_TABLES = 30


@dataclass(frozen=True)
class ColumnSummary:
    name: str
    data_type: str = ""
    is_foreign_key: bool = False
    references: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "data_type": self.data_type,
            "is_foreign_key": self.is_foreign_key,
            "references": self.references,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ColumnSummary:
        return cls(data["name"], data.get("data_type", ""), bool(data.get("is_foreign_key")), data.get("references"))


@dataclass(frozen=True)
class TableSummary:
    table_name: str
    columns: tuple[ColumnSummary, ...]
    row_count_hint: int | None = None
    description: str | None = None

    def __post_init__(self) -> None:
        if not self.table_name:
            raise ValueError("table_name must be non-empty")
        object.__setattr__(self, "columns", tuple(self.columns))
        if not self.columns:
            raise ValueError(f"table {self.table_name} has no columns")

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def to_dict(self) -> dict[str, Any]:
        return {
            "table_name": self.table_name,
            "columns": [c.to_dict() for c in self.columns],
            "row_count_hint": self.row_count_hint,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> TableSummary:
        return cls(
            data["table_name"],
            tuple(ColumnSummary.from_dict(c) for c in data["columns"]),
            data.get("row_count_hint"),
            data.get("description"),
        )


@dataclass(frozen=True)
class TableRelevance:
    table_name: str
    score: int
    reason: str = ""

    def __post_init__(self) -> None:
        if isinstance(self.score, bool) or self.score not in RELEVANCE_SCORES:
            raise ValueError(f"relevance score for {self.table_name} must be one of 0-3, got {self.score!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"table_name": self.table_name, "score": self.score, "reason": self.reason}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> TableRelevance:
        return cls(data["table_name"], data["score"], data.get("reason", ""))


@dataclass(frozen=True)
class SchemaSubset:
    instance_id: str
    tables: tuple[TableSummary, ...]
    relevance: tuple[TableRelevance, ...]
    threshold: int = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        scores = {r.table_name: r.score for r in self.relevance}
        for t in self.tables:
            if scores.get(t.table_name, -1) < self.threshold:
                raise ValueError(f"table {t.table_name} retained below threshold {self.threshold}")

    @property
    def table_names(self) -> list[str]:
        return [t.table_name for t in self.tables]

    def identifiers(self) -> set[str]:
        """Every retained table and column name."""
        names = set(self.table_names)
        for t in self.tables:
            names.update(t.column_names)
        return names

    def to_dict(self) -> dict[str, Any]:
        return {
            "instance_id": self.instance_id,
            "threshold": self.threshold,
            "tables": [t.to_dict() for t in self.tables],
            "relevance": [r.to_dict() for r in self.relevance],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> SchemaSubset:
        return cls(
            data["instance_id"],
            tuple(TableSummary.from_dict(t) for t in data["tables"]),
            tuple(TableRelevance.from_dict(r) for r in data["relevance"]),
            data.get("threshold", DEFAULT_THRESHOLD),
        )


def _quote(identifier: str) -> str:
    return '"' + identifier.replace('"', '""') + '"'


def describe_table(name: str, columns: Sequence[ColumnSummary]) -> str:
    """Mechanical description from column names; no LLM involved."""
    words = name.replace("_", " ")
    links = sorted({c.references.split(".")[0] for c in columns if c.references})
    text = f"Records of {words} with fields: " + ", ".join(c.name for c in columns) + "."
    if links:
        text += " Links to " + ", ".join(links) + "."
    return text


def introspect(db: Any) -> list[TableSummary]:
    """One summary per user table of a SQLite executor, foreign keys resolved."""
    try:
        with db.connect() as conn:
            names = [
                r[0]
                for r in conn.execute(
                    "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name"
                )
            ]
            catalog = []
            for name in names:
                fks: dict[str, str] = {}
                for fk in conn.execute(f"PRAGMA foreign_key_list({_quote(name)})"):
                    # (id, seq, table, from, to, on_update, on_delete, match)
                    target_col = fk[4]
                    if target_col is None:
                        pk = [r[1] for r in conn.execute(f"PRAGMA table_info({_quote(fk[2])})") if r[5]]
                        target_col = pk[0] if pk else "rowid"
                    fks[fk[3]] = f"{fk[2]}.{target_col}"
                columns = tuple(
                    ColumnSummary(r[1], r[2] or "", r[1] in fks, fks.get(r[1]))
                    for r in conn.execute(f"PRAGMA table_info({_quote(name)})")
                )
                count = conn.execute(f"SELECT COUNT(*) FROM {_quote(name)}").fetchone()[0]
                catalog.append(TableSummary(name, columns, count, describe_table(name, columns)))
            return catalog
    except AttributeError as exc:
        raise DbUnavailable(f"executor does not support introspection: {exc}") from exc
    except sqlite3.Error as exc:
        raise DbUnavailable(str(exc)) from exc


def tables_block(tables: Sequence[TableSummary]) -> str:
    chunks = []
    for t in tables:
        head = f"Table: {t.table_name}"
        if t.row_count_hint is not None:
            head += f" (~{t.row_count_hint} rows)"
        lines = [head]
        if t.description:
            lines.append(f"Description: {t.description}")
        lines.append("Columns:")
        for c in t.columns:
            line = f"- {c.name}"
            if c.data_type:
                line += f" ({c.data_type})"
            if c.references:
                line += f" -> {c.references}"
            lines.append(line)
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks)


def parse_scores(payload: Any, batch: Sequence[TableSummary]) -> list[TableRelevance]:
    expected = [t.table_name for t in batch]
    found: dict[str, TableRelevance] = {}
    items = payload["scores"]
    if not isinstance(items, list):
        raise ValueError("scores must be a list")
    for item in items:
        name = item["table"]
        if name not in expected:
            raise ValueError(f"score for unknown table {name!r}")
        if name in found:
            raise ValueError(f"duplicate score for table {name!r}")
        found[name] = TableRelevance(name, item["score"], str(item.get("reason", "")))
    missing = [n for n in expected if n not in found]
    if missing:
        raise ValueError(f"missing scores for {missing}")
    return [found[n] for n in expected]


def score_tables(
    instance: BusinessLogicInstance,
    catalog: Sequence[TableSummary],
    llm: Provider | Asker,
    batch_size: int = DEFAULT_BATCH_SIZE,
    *,
    spec: DomainSpec,
    templates: Mapping[str, str] | None = None,
    workers: int = 1,
) -> list[TableRelevance]:
    """Score every catalog table, ``batch_size`` tables per prompt, in catalog order."""
    if not catalog:
        raise ValueError("catalog must be non-empty")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    templates = templates or load_templates()
    asker = as_asker(llm)
    base = context_bindings(spec, area_for(spec, instance.persona), instance)
    batches = [list(catalog[i : i + batch_size]) for i in range(0, len(catalog), batch_size)]

    def run(batch: list[TableSummary]) -> list[TableRelevance]:
        prompt = render_template(templates["schema_selection"], {**base, "tables_block": tables_block(batch)})
        return asker.ask("score_tables", prompt, lambda p: parse_scores(p, batch), tag="scores")

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run, batches))
    return [r for batch in results for r in batch]


def select_subset(
    instance_id: str,
    catalog: Sequence[TableSummary],
    relevance: Sequence[TableRelevance],
    threshold: int = DEFAULT_THRESHOLD,
    max_tables: int | None = DEFAULT_MAX_TABLES,
) -> SchemaSubset:
    scores = {r.table_name: r.score for r in relevance}
    missing = [t.table_name for t in catalog if t.table_name not in scores]
    if missing:
        raise ValueError(f"relevance does not cover tables {missing}")
    kept = sorted(
        (t for t in catalog if scores[t.table_name] >= threshold),
        key=lambda t: (-scores[t.table_name], t.table_name),
    )
    if max_tables is not None:
        kept = kept[:max_tables]
    if not kept:
        raise EmptySubset(f"no table scored >= {threshold} for instance {instance_id}")
    return SchemaSubset(instance_id, tuple(kept), tuple(relevance), threshold)
