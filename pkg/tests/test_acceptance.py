"""Acceptance suite: one test group per criterion, tolerances pinned below.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion.
"""

from __future__ import annotations

import json
import math
import random
import time
from collections import Counter
from fractions import Fraction
from pathlib import Path

import pytest

from bizsynth.bench import (
    INVALID,
    MATCH,
    MISMATCH,
    PredictionRecord,
    canonicalize,
    execution_accuracy,
    render_bench_table,
    run_react,
    run_single_shot,
    score_run,
)
from bizsynth.config import BenchParams, LogicParams, SynthParams, config_from_dict, load_config
from bizsynth.dataset import read_jsonl, read_samples, write_samples
from bizsynth.demo import DemoAuthor, demo_config
from bizsynth.domain import ALL_LEVELS, ComplexityLevel
from bizsynth.errors import GenerationFailed, ParseError
from bizsynth.executor import ExecutionOutcome, ScriptedExecutor, SqliteExecutor, render_outcome
from bizsynth.forge import Dropped, QueryDraft, RefinePolicy, refine_until_executable
from bizsynth.judge import complexity_diversity, weighted_score
from bizsynth.llm import ScriptedProvider
from bizsynth.pipeline import Pipeline
from bizsynth.questions import leaked_identifiers
from bizsynth.schema import ColumnSummary, SchemaSubset, TableRelevance, TableSummary, select_subset

# Pinned tolerances and budgets.
SCORE_TOL = 1e-12
ENTROPY_TOL = 1e-9
RANDOM_TRIALS = 1000
MAX_ATTEMPTS = 3
DEMO_SECONDS = 30.0
BUDGET_SECONDS = 60.0
EXPECTED_SAMPLES = 240


# --- 1. score formula ------------------------------------------------------------------


def _score_oracle(ne: int, ng: int, na: int, np_: int) -> Fraction:
    # exact rational recomputation, independent of the float weights table
    return (Fraction(ne) + Fraction(3, 4) * ng + Fraction(1, 2) * na + Fraction(1, 4) * np_) / (ne + ng + na + np_)


@pytest.mark.criterion(1, "weighted rating score formula")
def test_c1_fixed_points():
    assert weighted_score(2, 1, 1, 0) == 0.8125
    assert weighted_score(7, 0, 0, 0) == 1.0
    assert weighted_score(0, 0, 0, 5) == 0.25


@pytest.mark.criterion(1, "weighted rating score formula")
def test_c1_random_counts_match_oracle():
    rng = random.Random(1)
    for _ in range(RANDOM_TRIALS):
        counts = [rng.randint(0, 500) for _ in range(4)]
        if sum(counts) == 0:
            counts[0] = 1
        assert abs(weighted_score(*counts) - float(_score_oracle(*counts))) <= SCORE_TOL


# --- 2. entropy ----------------------------------------------------------------------


def _entropy_oracle(labels: list[ComplexityLevel]) -> float:
    # brute force: log base 2 over observed labels, divided by log2(4) = 2
    n = len(labels)
    h = 0.0
    for lvl in set(labels):
        c = sum(1 for x in labels if x == lvl)
        h += -(c / n) * math.log2(c / n)
    return h / 2.0


@pytest.mark.criterion(2, "normalized entropy diversity metric")
def test_c2_fixed_points():
    assert complexity_diversity(list(ALL_LEVELS) * 5) == 1.0
    assert complexity_diversity([ComplexityLevel.DERIVED_METRIC] * 9) == 0.0
    two = [ComplexityLevel.SINGLE_METRIC] * 5 + [ComplexityLevel.COMPOSITIONAL_TASK] * 5
    assert abs(complexity_diversity(two) - 0.5) <= ENTROPY_TOL


@pytest.mark.criterion(2, "normalized entropy diversity metric")
def test_c2_random_multisets_match_oracle():
    rng = random.Random(2)
    for _ in range(300):
        size = rng.randint(1, 1000)
        weights = [rng.random() for _ in ALL_LEVELS]
        labels = rng.choices(ALL_LEVELS, weights=weights, k=size)
        assert abs(complexity_diversity(labels) - _entropy_oracle(labels)) <= ENTROPY_TOL


# --- 3. schema selection ----------------------------------------------------------------

FIXTURE_SCORES = {
    "accounts": 3, "opportunities": 3, "users": 2, "campaigns": 2, "leads": 2,
    "audit_log": 0, "tasks": 1, "products": 2, "quotes": 1, "zz_tmp": 3,
}


def _catalog() -> list[TableSummary]:
    return [TableSummary(n, (ColumnSummary("id", "INTEGER"),)) for n in sorted(FIXTURE_SCORES, reverse=True)]


def _relevance() -> list[TableRelevance]:
    return [TableRelevance(n, s) for n, s in FIXTURE_SCORES.items()]


@pytest.mark.criterion(3, "schema relevance selection")
def test_c3_threshold_two_order():
    subset = select_subset("i", _catalog(), _relevance(), threshold=2)
    assert subset.table_names == [
        "accounts", "opportunities", "zz_tmp", "campaigns", "leads", "products", "users",
    ]


@pytest.mark.criterion(3, "schema relevance selection")
def test_c3_threshold_monotonic():
    kept = []
    for t in range(4):
        kept.append(set(select_subset("i", _catalog(), _relevance(), threshold=t, max_tables=None).table_names))
        assert kept[-1] == {n for n, s in FIXTURE_SCORES.items() if s >= t}
    for lower, higher in zip(kept, kept[1:]):
        assert higher <= lower


# --- 4. refinement budget -------------------------------------------------------------------


def _repair_llm() -> ScriptedProvider:
    return ScriptedProvider(lambda req: json.dumps({"reasoning": "fix", "sql": "SELECT 1 FROM orders"}))


def _subset() -> SchemaSubset:
    t = TableSummary("orders", (ColumnSummary("order_id", "INTEGER"),))
    return SchemaSubset("inst-1", (t,), (TableRelevance("orders", 3),), 2)


def _draft() -> QueryDraft:
    return QueryDraft("d1", "inst-1", ComplexityLevel.SINGLE_METRIC, "count orders", "SELECT COUNT(*) FROM orderz")


@pytest.mark.criterion(4, "execution-guided repair budget")
@pytest.mark.parametrize("k", [0, 1, 2])
def test_c4_fail_k_then_succeed(k, spec, instance):
    script = [ExecutionOutcome.failure(f"error {i}") for i in range(k)] + [ExecutionOutcome.success([(1,)])]
    db = ScriptedExecutor(script)
    llm = _repair_llm()
    result = refine_until_executable(_draft(), instance, _subset(), db, llm, MAX_ATTEMPTS, spec=spec)
    assert isinstance(result, QueryDraft)
    assert len(result.repair_history) == k
    assert len(llm.calls) == k


@pytest.mark.criterion(4, "execution-guided repair budget")
def test_c4_always_failing_drops(spec, instance):
    db = ScriptedExecutor([ExecutionOutcome.failure("no such table")])
    llm = _repair_llm()
    policy = RefinePolicy(max_attempts=MAX_ATTEMPTS)
    result = refine_until_executable(_draft(), instance, _subset(), db, llm, MAX_ATTEMPTS, spec=spec, policy=policy)
    assert isinstance(result, Dropped)
    assert len(llm.calls) == MAX_ATTEMPTS
    assert policy.stats["repair_calls"] == MAX_ATTEMPTS


# --- 5. EX comparator ---------------------------------------------------------------------


@pytest.mark.criterion(5, "execution accuracy comparator")
def test_c5_gold_self_consistency(demo_run, demo_pack):
    db = SqliteExecutor(demo_pack / "retail.db")
    samples = read_samples(demo_run / "dataset.jsonl")
    assert samples
    for s in samples:
        assert execution_accuracy(s.sql, s.sql, db) == MATCH, s.id


def _cell(rng: random.Random):
    kind = rng.randrange(5)
    if kind == 0:
        return None
    if kind == 1:
        return rng.randint(-3, 3)
    if kind == 2:
        return rng.randint(-6, 6) / 2
    if kind == 3:
        return rng.choice(["", "a", "b", " a", "b "])
    return rng.choice(["x", "y"])


def _oracle_equal(a, b) -> bool:
    # naive: normalize each cell, sort rows with a total key, compare lists
    def norm(v):
        if v is None:
            return (0, "")
        if isinstance(v, (int, float)):
            return (1, float(v))
        return (2, v.strip())

    return sorted(tuple(norm(v) for v in r) for r in a) == sorted(tuple(norm(v) for v in r) for r in b)


@pytest.mark.criterion(5, "execution accuracy comparator")
def test_c5_multiset_agrees_with_oracle():
    rng = random.Random(5)
    agree_true = 0
    for _ in range(RANDOM_TRIALS):
        width = rng.randint(1, 3)
        a = [tuple(_cell(rng) for _ in range(width)) for _ in range(rng.randint(0, 5))]
        b = list(a)
        rng.shuffle(b)
        if rng.random() < 0.5 and b:
            i = rng.randrange(len(b))
            row = list(b[i])
            row[rng.randrange(width)] = _cell(rng)
            b[i] = tuple(row)
        expected = _oracle_equal(a, b)
        agree_true += expected
        assert (canonicalize(a) == canonicalize(b)) == expected
    assert agree_true > RANDOM_TRIALS // 3  # both outcomes exercised


@pytest.mark.criterion(5, "execution accuracy comparator")
def test_c5_order_by_flips_sensitivity(retail_db):
    db = SqliteExecutor(retail_db)
    asc = "SELECT region_name FROM regions ORDER BY region_name"
    desc = "SELECT region_name FROM regions ORDER BY region_name DESC"
    unordered = "SELECT region_name FROM regions"
    assert execution_accuracy(asc, desc, db) == MISMATCH
    assert execution_accuracy(unordered, desc, db) == MATCH
    assert execution_accuracy(asc, "SELECT nope FROM regions", db) == INVALID


# --- 6. end-to-end determinism ------------------------------------------------------------


def _files(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.criterion(6, "demo end-to-end determinism")
def test_c6_demo_determinism(demo_pack, tmp_path):
    started = time.perf_counter()
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        Pipeline(load_config(demo_pack / "config.yaml", out_dir=out)).run_all()
        outs.append(out)
    assert time.perf_counter() - started < DEMO_SECONDS

    first, second = _files(outs[0]), _files(outs[1])
    assert first.keys() == second.keys()
    assert [k for k in first if first[k] != second[k]] == []

    samples = read_samples(outs[0] / "dataset.jsonl")
    counts = Counter(s.complexity for s in samples)
    assert set(counts) == set(ALL_LEVELS)
    assert len(set(counts.values())) == 1
    assert complexity_diversity([s.complexity for s in samples]) == 1.0
    assert json.loads((outs[0] / "quality_report.json").read_text())["complexity_diversity"] == 1.0

    subsets = {d["instance_id"]: SchemaSubset.from_dict(d) for d in json.loads((outs[0] / "subsets.json").read_text())}
    violations = [s.id for s in samples if leaked_identifiers(s.question, subsets[s.instance_id].identifiers())]
    assert violations == []


# --- 7. dataset round trip ---------------------------------------------------------------


@pytest.mark.criterion(7, "dataset JSONL round trip")
def test_c7_round_trip_identity(demo_run, tmp_path):
    src = demo_run / "dataset.jsonl"
    samples = read_samples(src)
    dst = tmp_path / "copy.jsonl"
    write_samples(dst, samples)
    assert read_samples(dst) == samples
    assert dst.read_bytes() == src.read_bytes()


@pytest.mark.criterion(7, "dataset JSONL round trip")
def test_c7_corrupt_line_number(demo_run, tmp_path):
    lines = (demo_run / "dataset.jsonl").read_text(encoding="utf-8").splitlines()
    lines[36] = lines[36][:-5]
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ParseError) as err:
        read_samples(bad)
    assert err.value.line == 37


# --- 8. bench oracles -----------------------------------------------------------------------


def _bench_set(demo_run, per_level: int = 4):
    samples = sorted(read_samples(demo_run / "dataset.jsonl"), key=lambda s: s.id)
    out = []
    for lvl in ALL_LEVELS:
        out.extend([s for s in samples if s.complexity is lvl][:per_level])
    return out


def _predict(samples, answer) -> dict[str, PredictionRecord]:
    out = {}
    for s in samples:
        model = ScriptedProvider(lambda req, sql=answer(s): f"```sql\n{sql}\n```")
        out[s.id] = run_single_shot(s, "(schema)", model)
    return out


@pytest.mark.criterion(8, "bench harness oracles")
def test_c8_gold_echo_and_invalid(demo_run, demo_pack):
    db = SqliteExecutor(demo_pack / "retail.db")
    samples = _bench_set(demo_run)
    gold = score_run(_predict(samples, lambda s: s.sql), samples, db, model_name="echo")
    assert gold.overall_accuracy == 1.0
    assert gold.per_level_accuracy == {lvl: 1.0 for lvl in ALL_LEVELS}
    bad = score_run(_predict(samples, lambda s: "SELECT * FROM no_such_table"), samples, db)
    assert bad.overall_accuracy == 0.0
    assert set(bad.verdicts.values()) == {INVALID}


@pytest.mark.criterion(8, "bench harness oracles")
def test_c8_half_correct_breakdown(demo_run, demo_pack):
    db = SqliteExecutor(demo_pack / "retail.db")
    samples = _bench_set(demo_run)
    # correct on 4/4, 3/4, 1/4 and 0/4 of the levels in order: 8 of 16 overall
    right_per_level = dict(zip(ALL_LEVELS, (4, 3, 1, 0)))
    correct = set()
    for lvl, n in right_per_level.items():
        correct.update(s.id for s in [x for x in samples if x.complexity is lvl][:n])
    result = score_run(_predict(samples, lambda s: s.sql if s.id in correct else "SELECT -1 AS wrong"), samples, db, model_name="half")
    assert result.overall_accuracy == 0.5
    assert result.per_level_accuracy == {
        ComplexityLevel.SINGLE_METRIC: 1.0,
        ComplexityLevel.COMPARATIVE_METRIC: 0.75,
        ComplexityLevel.DERIVED_METRIC: 0.25,
        ComplexityLevel.COMPOSITIONAL_TASK: 0.0,
    }
    row = [c.strip() for c in render_bench_table([result]).splitlines()[2].split(" | ")]
    assert row == ["half", "100.00", "75.00", "25.00", "0.00", "50.00"]


# --- 9. ReAct contract -----------------------------------------------------------------------


def _agent(steps: list[dict]) -> ScriptedProvider:
    box = {"i": 0}

    def respond(req):
        step = steps[min(box["i"], len(steps) - 1)]
        box["i"] += 1
        return json.dumps(step)

    return ScriptedProvider(respond)


@pytest.mark.criterion(9, "ReAct episode contract")
def test_c9_terminates_on_respond(demo_run, retail_db):
    sample = read_samples(demo_run / "dataset.jsonl")[0]
    db = SqliteExecutor(retail_db)
    probe = "SELECT COUNT(*) FROM orders"
    model = _agent([
        {"thought": "look", "action": "execute", "payload": probe},
        {"thought": "again", "action": "execute", "payload": sample.sql},
        {"thought": "done", "action": "respond", "payload": f"```sql\n{sample.sql}\n```"},
        {"thought": "never", "action": "execute", "payload": probe},
    ])
    rec = run_react(sample, "(schema)", model, db, max_steps=10)
    assert [s.action for s in rec.transcript] == ["execute", "execute", "respond"]
    assert len(model.calls) == 3
    assert not rec.budget_exhausted
    assert rec.predicted_sql == sample.sql
    assert rec.transcript[0].observation == render_outcome(db.execute(probe))
    assert rec.transcript[1].observation == render_outcome(db.execute(sample.sql))


@pytest.mark.criterion(9, "ReAct episode contract")
def test_c9_stops_at_max_steps(demo_run, retail_db):
    sample = read_samples(demo_run / "dataset.jsonl")[0]
    model = _agent([{"thought": "keep going", "action": "execute", "payload": "SELECT 1"}])
    rec = run_react(sample, "(schema)", model, SqliteExecutor(retail_db), max_steps=4)
    assert rec.budget_exhausted
    assert len(rec.transcript) == 4
    assert len(model.calls) == 4
    assert rec.predicted_sql == "SELECT 1"


@pytest.mark.criterion(9, "ReAct episode contract")
def test_c9_unknown_action_raises(demo_run, retail_db):
    sample = read_samples(demo_run / "dataset.jsonl")[0]
    model = _agent([{"thought": "hmm", "action": "browse", "payload": "x"}])
    with pytest.raises(GenerationFailed):
        run_react(sample, "(schema)", model, SqliteExecutor(retail_db), max_steps=5)


# --- 10. budget at default configuration --------------------------------------------------------


class _NeverFails(SqliteExecutor):
    """Keeps introspection real but accepts every query."""

    def execute(self, sql, row_limit=1000, timeout=30.0):
        return ExecutionOutcome.success([(1,)], ("value",))


@pytest.mark.criterion(10, "default budget yields 240 samples")
def test_c10_default_budget(demo_pack, tmp_path):
    assert (LogicParams().instances, SynthParams().queries_per_level, len(SynthParams().levels)) == (20, 3, 4)
    raw = demo_config()
    for section in ("model_logic", "synthesize", "judge"):
        raw.pop(section)
    raw["bench"] = {"candidates": BenchParams().candidates}
    raw["database"]["path"] = str(demo_pack / "retail.db")
    config = config_from_dict(raw, tmp_path, out_dir=tmp_path / "out")
    author = DemoAuthor()
    pipe = Pipeline(config, providers={"generator": ScriptedProvider(author, model_name="mock-gen")})
    pipe.executor = lambda: _NeverFails(config.database_path)
    started = time.perf_counter()
    instances = pipe.model_logic()
    samples = pipe.synthesize()
    assert time.perf_counter() - started < BUDGET_SECONDS
    assert len(instances) == 20
    assert len(samples) == EXPECTED_SAMPLES
    assert pipe.manifest.counts["dropped"] == 0
    assert len(read_jsonl(tmp_path / "out" / "dataset.jsonl")) == EXPECTED_SAMPLES
