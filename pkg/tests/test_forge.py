from __future__ import annotations

import json

import pytest

from bizsynth.domain import ComplexityLevel
from bizsynth.errors import GenerationFailed
from bizsynth.executor import ExecutionOutcome, ScriptedExecutor
from bizsynth.forge import (
    EMPTY_RESULT_MESSAGE,
    Dropped,
    QueryDraft,
    RefinePolicy,
    classify_complexity,
    cte_names,
    generate_drafts,
    referenced_tables,
    refine_until_executable,
    tables_outside,
)
from bizsynth.llm import ScriptedProvider
from bizsynth.schema import ColumnSummary, SchemaSubset, TableRelevance, TableSummary


def _subset(*names, instance_id="inst-1") -> SchemaSubset:
    tables = tuple(TableSummary(n, (ColumnSummary("id", "INTEGER"),)) for n in names)
    return SchemaSubset(instance_id, tables, tuple(TableRelevance(n, 3) for n in names), 2)


@pytest.mark.parametrize(
    "sql, expected",
    [
        ("SELECT * FROM orders o JOIN stores s ON s.id = o.store_id", {"orders", "stores"}),
        ("WITH t AS (SELECT * FROM orders) SELECT * FROM t, regions", {"orders", "regions"}),
        ('SELECT "x" FROM "Order Items" WHERE id IN (SELECT id FROM returns)', {"order items", "returns"}),
        ("SELECT 'FROM fake' AS s FROM stores", {"stores"}),
        ("SELECT strftime('%Y', d) FROM orders -- FROM ghost\n", {"orders"}),
    ],
)
def test_referenced_tables(sql, expected):
    assert {t.lower() for t in referenced_tables(sql)} == expected


def test_cte_names_and_outside():
    sql = "WITH a AS (SELECT 1), b AS (SELECT * FROM a) SELECT * FROM b JOIN orders ON 1"
    assert cte_names(sql) == {"a", "b"}
    assert tables_outside(sql, _subset("orders")) == []
    assert tables_outside("SELECT * FROM customers", _subset("orders")) == ["customers"]


def _queries(n, table="orders"):
    return {"queries": [{"intent_complexity": "derived_metric", "intent": f"i{k}", "sql": f"SELECT {k} FROM {table}"} for k in range(n)]}


def test_generate_drafts(instance, spec):
    llm = ScriptedProvider(lambda req: json.dumps(_queries(3)))
    drafts = generate_drafts(instance, _subset("orders"), ComplexityLevel.DERIVED_METRIC, 3, llm, spec=spec)
    assert [d.complexity for d in drafts] == [ComplexityLevel.DERIVED_METRIC] * 3
    assert len({d.id for d in drafts}) == 3
    assert llm.calls[0].tag == "sql:derived_metric"
    assert "Generate 3 diverse analytic queries." in llm.calls[0].user_prompt
    again = generate_drafts(instance, _subset("orders"), ComplexityLevel.DERIVED_METRIC, 3, llm, spec=spec)
    assert [d.id for d in again] == [d.id for d in drafts]


def test_generate_drafts_rejects_outside_tables(instance, spec):
    llm = ScriptedProvider(lambda req: json.dumps(_queries(3, "customers")))
    with pytest.raises(GenerationFailed):
        generate_drafts(instance, _subset("orders"), ComplexityLevel.DERIVED_METRIC, 3, llm, spec=spec)


def test_generate_drafts_precondition(instance, spec):
    with pytest.raises(ValueError):
        generate_drafts(instance, _subset("orders"), ComplexityLevel.DERIVED_METRIC, 0, ScriptedProvider(lambda r: "{}"), spec=spec)


# --- repair loop ---------------------------------------------------------------------------------


def _draft(sql="SELECT COUNT(*) FROM orderz") -> QueryDraft:
    return QueryDraft("d1", "inst-1", ComplexityLevel.SINGLE_METRIC, "count orders", sql)


def _refine(db, llm, spec, instance, **policy):
    return refine_until_executable(_draft(), instance, _subset("orders"), db, llm, 3, spec=spec, policy=RefinePolicy(**policy))


def test_executable_draft_untouched(spec, instance):
    llm = ScriptedProvider(lambda r: "{}")
    out = _refine(ScriptedExecutor([ExecutionOutcome.success([(1,)])]), llm, spec, instance)
    assert out == _draft() and llm.calls == []


def test_repair_prompt_carries_error(spec, instance):
    db = ScriptedExecutor([ExecutionOutcome.failure("no such table: orderz"), ExecutionOutcome.success([(1,)])])
    llm = ScriptedProvider(lambda r: json.dumps({"reasoning": "typo", "sql": "SELECT COUNT(*) FROM orders"}))
    out = _refine(db, llm, spec, instance)
    assert out.sql == "SELECT COUNT(*) FROM orders"
    assert out.repair_history[0].error == "no such table: orderz"
    assert out.repair_history[0].sql_before == "SELECT COUNT(*) FROM orderz"
    prompt = llm.calls[0].user_prompt
    assert "PREVIOUS SQL:\nSELECT COUNT(*) FROM orderz\n\nERROR MESSAGE:\nno such table: orderz" in prompt


def test_malformed_reply_consumes_attempt(spec, instance):
    replies = iter(["not json", json.dumps({"sql": "SELECT 1 FROM orders"})])
    llm = ScriptedProvider(lambda r: next(replies))
    db = ScriptedExecutor([ExecutionOutcome.failure("bad"), ExecutionOutcome.success([(1,)])])
    out = _refine(db, llm, spec, instance)
    assert isinstance(out, QueryDraft)
    assert len(llm.calls) == 2 and len(out.repair_history) == 2
    assert len(db.calls) == 2


def test_outside_table_is_not_executed(spec, instance):
    llm = ScriptedProvider(lambda r: json.dumps({"sql": "SELECT 1 FROM customers"}))
    db = ScriptedExecutor([ExecutionOutcome.failure("bad")])
    out = _refine(db, llm, spec, instance)
    assert isinstance(out, Dropped)
    assert len(db.calls) == 1
    assert "outside the allowed schema" in out.final_error


def test_empty_result_policy(spec, instance):
    llm = ScriptedProvider(lambda r: json.dumps({"sql": "SELECT 1 FROM orders"}))
    db = ScriptedExecutor([ExecutionOutcome.success([])])
    assert isinstance(_refine(db, llm, spec, instance), QueryDraft)
    dropped = _refine(db, llm, spec, instance, empty_result_is_failure=True)
    assert isinstance(dropped, Dropped) and dropped.final_error == EMPTY_RESULT_MESSAGE


# --- classification ---------------------------------------------------------------------------------


def test_classify():
    llm = ScriptedProvider(lambda r: json.dumps({"complexity_level": "compositional_task", "explanation": ""}))
    assert classify_complexity("q", "SELECT 1", llm) is ComplexityLevel.COMPOSITIONAL_TASK
    assert llm.calls[0].temperature == 0.0


def test_classify_invalid_level():
    with pytest.raises(GenerationFailed):
        classify_complexity("q", "SELECT 1", ScriptedProvider(lambda r: '{"complexity_level": "level_5"}'))
    with pytest.raises(ValueError):
        classify_complexity("q", "  ", ScriptedProvider(lambda r: "{}"))
