from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bizsynth.domain import ComplexityLevel
from bizsynth.errors import GenerationFailed
from bizsynth.forge import QueryDraft
from bizsynth.llm import ScriptedProvider
from bizsynth.questions import QuestionRecord, leaked_identifiers, sql_to_question
from bizsynth.schema import ColumnSummary, SchemaSubset, TableRelevance, TableSummary

SUBSET = SchemaSubset(
    "inst-1",
    (TableSummary("Opportunity", (ColumnSummary("StageName", "TEXT"), ColumnSummary("Amount", "REAL"), ColumnSummary("Id", "TEXT"))),),
    (TableRelevance("Opportunity", 3),),
    2,
)
DRAFT = QueryDraft("d", "inst-1", ComplexityLevel.SINGLE_METRIC, "total pipeline", "SELECT SUM(Amount) FROM Opportunity")
GOOD = "What is the total value of deals we closed this quarter across every sales team?"


def _ask(payload, instance, spec):
    llm = ScriptedProvider(lambda r: json.dumps(payload))
    return sql_to_question(DRAFT, instance, SUBSET, llm, spec=spec), llm


def test_question_from_fixture(instance, spec):
    rec, llm = _ask({"question": GOOD, "paraphrases": ["How much did we close?", "Closed total this quarter?"]}, instance, spec)
    assert rec == QuestionRecord(GOOD, ("How much did we close?", "Closed total this quarter?"))
    assert "SQL QUERY INTENT (HINT):\ntotal pipeline" in llm.calls[0].user_prompt


def test_leaked_column_rejected(instance, spec):
    bad = "What is the StageName breakdown of deals we closed this quarter across teams?"
    with pytest.raises(GenerationFailed):
        _ask({"question": bad, "paraphrases": ["a", "b"]}, instance, spec)


def test_one_paraphrase_rejected(instance, spec):
    with pytest.raises(GenerationFailed):
        _ask({"question": GOOD, "paraphrases": ["only one"]}, instance, spec)


def test_short_question_rejected(instance, spec):
    with pytest.raises(GenerationFailed):
        _ask({"question": "Total deals?", "paraphrases": ["a", "b"]}, instance, spec)


def test_leak_rules():
    ids = {"StageName", "Amount", "Id", "order_items"}
    assert leaked_identifiers("show stagename by week", ids) == ["StageName"]
    assert leaked_identifiers("the amount we billed", ids) == []  # allowlisted English word
    assert leaked_identifiers("Id of each deal", ids) == []  # shorter than four characters
    assert leaked_identifiers("StageNames per rep", ids) == []  # whole words only
    assert leaked_identifiers("rows in order_items", ids) == ["order_items"]


@given(st.lists(st.from_regex(r"[a-z][a-z_]{3,9}", fullmatch=True), min_size=1, max_size=5), st.text(" abcxyz", max_size=30))
def test_leak_finds_inserted_identifier(idents, filler):
    ident = idents[0]
    question = f"{filler} {ident} {filler}"
    assert (ident in leaked_identifiers(question, idents, allowlist=())) is True
