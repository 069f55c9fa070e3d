from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bizsynth.dataset import DatasetSample
from bizsynth.domain import ComplexityLevel, RatingLevel
from bizsynth.errors import EmptyInput, GenerationFailed
from bizsynth.judge import (
    IMPERFECT,
    PERFECT,
    RUBRICS,
    CriterionRating,
    Dimension,
    JudgeReport,
    aggregate,
    canonical_criterion,
    complexity_diversity,
    judge,
    quality_report,
    verify_sample,
    weighted_score,
)
from bizsynth.llm import ScriptedProvider

E, G, A, P = RatingLevel.EXCELLENT, RatingLevel.GOOD, RatingLevel.AVERAGE, RatingLevel.POOR


def _sample(sid="s1", level=ComplexityLevel.SINGLE_METRIC) -> DatasetSample:
    return DatasetSample(sid, "inst-1", "Store Manager", "Weekly Review", level, "intent", "SELECT 1", "How many orders did we take?")


def _report(sid, dim, levels) -> JudgeReport:
    return JudgeReport(sid, dim, tuple(CriterionRating(n, l) for n, l in zip(RUBRICS[dim], levels)))


def _reply(criteria_levels: dict[str, str]) -> ScriptedProvider:
    text = json.dumps({k: {"level": v, "explanation": "x"} for k, v in criteria_levels.items()})
    return ScriptedProvider(lambda r: text)


def test_judge_realism_fixture():
    llm = _reply({"Business Relevance": "Excellent", "Business Language": "Good", "Natural Expression": "Good", "Decision Value": "Average"})
    rep = judge(_sample(), "question_realism", None, None, llm, domain_name="Retail")
    assert [r.level for r in rep.ratings] == [E, G, G, A]
    assert [r.criterion_name for r in rep.ratings] == list(RUBRICS[Dimension.QUESTION_REALISM])
    assert llm.calls[0].temperature == 0.0


def test_judge_template_names_map_to_rubric():
    names = ["Result Completeness", "Constraint Fidelity", "Structural Alignment", "Unnecessary Complexity"]
    rep = judge(_sample(), Dimension.QUESTION_SQL_ALIGNMENT, None, "Table: t", _reply(dict.fromkeys(names, "Excellent")), domain_name="Retail")
    assert [r.criterion_name for r in rep.ratings] == list(RUBRICS[Dimension.QUESTION_SQL_ALIGNMENT])
    assert canonical_criterion("constraint fidelity") == "Constraint Consistency"


@pytest.mark.parametrize(
    "payload",
    [
        {"Business Relevance": "Excellent", "Business Language": "Good", "Natural Expression": "Good"},
        {"Business Relevance": "Outstanding", "Business Language": "Good", "Natural Expression": "Good", "Decision Value": "Good"},
    ],
)
def test_judge_invalid(payload):
    with pytest.raises(GenerationFailed):
        judge(_sample(), "question_realism", None, None, _reply(payload), domain_name="Retail")


def test_judge_persona_needs_context():
    with pytest.raises(ValueError):
        judge(_sample(), "persona_question_alignment", None, None, _reply({}), domain_name="Retail")


def test_judge_majority_over_passes(instance):
    replies = iter([
        {"Role Responsibility": "Good", "Scenario Relevance": "Excellent", "Practical Value": "Poor", "Role Language": "Excellent"},
        {"Role Responsibility": "Good", "Scenario Relevance": "Good", "Practical Value": "Good", "Role Language": "Excellent"},
        {"Role Responsibility": "Excellent", "Scenario Relevance": "Good", "Practical Value": "Excellent", "Role Language": "Excellent"},
    ])
    llm = ScriptedProvider(lambda r: json.dumps({k: {"level": v} for k, v in next(replies).items()}))
    rep = judge(_sample(), "persona_question_alignment", instance, None, llm, domain_name="Retail", passes=3)
    # majorities: G, G, none (P/G/E -> median G), E
    assert [r.level for r in rep.ratings] == [G, G, G, E]


# --- scores --------------------------------------------------------------------------------------


def test_score_examples():
    rep = _report("s1", Dimension.QUESTION_REALISM, [E, E, G, A])
    summary = aggregate([rep], Dimension.QUESTION_REALISM)
    assert (summary.n_excellent, summary.n_good, summary.n_average, summary.n_poor) == (2, 1, 1, 0)
    assert summary.score == 0.8125
    assert weighted_score(4, 0, 0, 0) == 1.0
    assert weighted_score(0, 0, 0, 4) == 0.25
    with pytest.raises(EmptyInput):
        weighted_score(0, 0, 0, 0)


def test_pooled_score_matches_hand_count():
    dim = Dimension.QUESTION_SQL_ALIGNMENT
    reports = [_report("a", dim, [E, E, E, G]), _report("b", dim, [A, P, E, G]), _report("c", dim, [E, E, E, E])]
    # pooled: 8 E, 2 G, 1 A, 1 P over 12
    expected = Fraction(8 * 4 + 2 * 3 + 1 * 2 + 1 * 1, 4 * 12)
    assert aggregate(reports, dim).score == float(expected)
    # pooled differs from the mean of per-sample scores only when sample sizes differ; here they agree
    assert aggregate(reports, dim).score == pytest.approx((0.9375 + 0.625 + 1.0) / 3, abs=1e-15)


@given(st.lists(st.lists(st.sampled_from([E, G, A, P]), min_size=4, max_size=4), min_size=1, max_size=30))
def test_score_bounds_and_pooling(rows):
    dim = Dimension.QUESTION_REALISM
    reports = [_report(str(i), dim, r) for i, r in enumerate(rows)]
    s = aggregate(reports, dim)
    assert 0.25 <= s.score <= 1.0
    assert s.n_excellent + s.n_good + s.n_average + s.n_poor == 4 * len(rows)


def test_entropy_examples():
    levels = list(ComplexityLevel)
    assert complexity_diversity(levels) == 1.0
    assert complexity_diversity([levels[0]] * 4) == 0.0
    assert complexity_diversity([levels[0]] * 5 + [levels[2]] * 5) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(EmptyInput):
        complexity_diversity([])


@given(st.lists(st.sampled_from(list(ComplexityLevel)), min_size=1, max_size=200))
def test_entropy_bounds_and_permutation(labels):
    v = complexity_diversity(labels)
    assert 0.0 <= v <= 1.0
    assert complexity_diversity(list(reversed(labels))) == v


def test_verify_sample():
    s = _sample()
    all_e = [_report("s1", d, [E] * 4) for d in Dimension]
    assert verify_sample(s, all_e) == PERFECT
    one_g = all_e[:2] + [_report("s1", Dimension.PERSONA_QUESTION_ALIGNMENT, [E, E, E, G])]
    assert verify_sample(s, one_g) == IMPERFECT
    with pytest.raises(ValueError):
        verify_sample(s, [])


def test_quality_report_all_excellent():
    samples = [_sample(f"s{i}", lvl) for i, lvl in enumerate(ComplexityLevel)]
    reports = [_report(s.id, d, [E] * 4) for s in samples for d in Dimension]
    rep = quality_report(samples, reports, list(Dimension))
    assert all(v["score"] == 1.0 for v in rep["overall"].values())
    assert rep["num_perfect"] == 4
    assert rep["complexity_diversity"] == 1.0
    assert set(rep["per_level"]) == {lvl.value for lvl in ComplexityLevel}
