"""LLM-as-a-judge rubrics, weighted rating aggregation and complexity diversity."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from .dataset import DatasetSample
from .domain import (
    ALL_LEVELS,
    BusinessLogicInstance,
    ComplexityLevel,
    RatingLevel,
    parse_rating,
    rating_weight,
)
from .errors import EmptyInput
from .llm import JUDGE_TEMPERATURE, Asker, Provider, render_template
from .logic import as_asker
from .prompts import load_templates, persona_block, scenario_block, tasks_block

PERFECT = "perfect"
IMPERFECT = "imperfect"


class Dimension(str, Enum):
    QUESTION_SQL_ALIGNMENT = "question_sql_alignment"
    QUESTION_REALISM = "question_realism"
    PERSONA_QUESTION_ALIGNMENT = "persona_question_alignment"

    @property
    def title(self) -> str:
        return DIMENSION_TITLES[self]


DIMENSION_TITLES = {
    Dimension.QUESTION_SQL_ALIGNMENT: "Question-SQL Alignment",
    Dimension.QUESTION_REALISM: "Question Realism",
    Dimension.PERSONA_QUESTION_ALIGNMENT: "Question-Persona Alignment",
}

RUBRICS: dict[Dimension, tuple[str, ...]] = {
    Dimension.QUESTION_SQL_ALIGNMENT: (
        "Result Completeness",
        "Constraint Consistency",
        "Structural Consistency",
        "Unnecessary Complexity",
    ),
    Dimension.QUESTION_REALISM: (
        "Business Relevance",
        "Business Language",
        "Expression Naturalness",
        "Decision Value",
    ),
    Dimension.PERSONA_QUESTION_ALIGNMENT: (
        "Role Responsibility",
        "Scenario Relevance",
        "Practical Value",
        "Role Language",
    ),
}

# Names used by the judge prompt templates that differ from the rubric names.
CRITERION_SYNONYMS: dict[str, str] = {
    "Constraint Fidelity": "Constraint Consistency",
    "Structural Alignment": "Structural Consistency",
    "Natural Expression": "Expression Naturalness",
}

TEMPLATE_FOR = {
    Dimension.QUESTION_SQL_ALIGNMENT: "judge_question_sql_alignment",
    Dimension.QUESTION_REALISM: "judge_question_realism",
    Dimension.PERSONA_QUESTION_ALIGNMENT: "judge_persona_question_alignment",
}


def parse_dimension(raw: str | Dimension) -> Dimension:
    if isinstance(raw, Dimension):
        return raw
    token = re.sub(r"[\s\-–_]+", "_", raw.strip().lower())
    for d in Dimension:
        if d.value == token:
            return d
    raise ValueError(f"unknown judge dimension {raw!r}")


def _key(name: str) -> str:
    return re.sub(r"[^a-z]", "", name.lower())


_CANON: dict[str, str] = {}
for _names in RUBRICS.values():
    for _n in _names:
        _CANON[_key(_n)] = _n
for _alias, _target in CRITERION_SYNONYMS.items():
    _CANON[_key(_alias)] = _target


def canonical_criterion(name: str) -> str | None:
    return _CANON.get(_key(name))


@dataclass(frozen=True)
class CriterionRating:
    criterion_name: str
    level: RatingLevel
    explanation: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"criterion_name": self.criterion_name, "level": self.level.value, "explanation": self.explanation}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> CriterionRating:
        return cls(data["criterion_name"], parse_rating(data["level"]), data.get("explanation", ""))


@dataclass(frozen=True)
class JudgeReport:
    sample_id: str
    dimension: Dimension
    ratings: tuple[CriterionRating, ...]
    judge_model: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "ratings", tuple(self.ratings))
        names = [r.criterion_name for r in self.ratings]
        expected = RUBRICS[self.dimension]
        if len(names) != 4 or sorted(names) != sorted(expected):
            raise ValueError(f"{self.dimension.value} report needs exactly the criteria {list(expected)}, got {names}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "dimension": self.dimension.value,
            "judge_model": self.judge_model,
            "ratings": [r.to_dict() for r in self.ratings],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> JudgeReport:
        return cls(
            data["sample_id"],
            parse_dimension(data["dimension"]),
            tuple(CriterionRating.from_dict(r) for r in data["ratings"]),
            data.get("judge_model", ""),
        )


def parse_judgement(payload: Any, dimension: Dimension) -> list[CriterionRating]:
    if not isinstance(payload, dict):
        raise ValueError("judge output must be a JSON object")
    expected = RUBRICS[dimension]
    found: dict[str, CriterionRating] = {}
    for key, value in payload.items():
        name = canonical_criterion(key)
        if name is None or name not in expected:
            continue
        if name in found:
            raise ValueError(f"criterion {name!r} rated twice")
        if isinstance(value, dict):
            level, explanation = value["level"], str(value.get("explanation", ""))
        else:
            level, explanation = value, ""
        found[name] = CriterionRating(name, parse_rating(level), explanation)
    missing = [n for n in expected if n not in found]
    if missing:
        raise ValueError(f"missing criteria {missing}")
    return [found[n] for n in expected]


def _combine(passes: list[list[CriterionRating]]) -> list[CriterionRating]:
    """Per-criterion majority; without a majority the median level wins."""
    if len(passes) == 1:
        return passes[0]
    out = []
    for i, first in enumerate(passes[0]):
        levels = [p[i].level for p in passes]
        level, votes = Counter(levels).most_common(1)[0]
        if votes * 2 <= len(levels):
            ranked = sorted(levels, key=rating_weight)
            level = ranked[len(ranked) // 2]
        chosen = next(p[i] for p in passes if p[i].level == level)
        out.append(CriterionRating(first.criterion_name, level, chosen.explanation))
    return out


def judge(
    sample: DatasetSample,
    dimension: Dimension | str,
    context: BusinessLogicInstance | None,
    schema_text: str | None,
    llm: Provider | Asker,
    *,
    domain_name: str,
    templates: Mapping[str, str] | None = None,
    db_engine_name: str = "SQLite",
    passes: int = 1,
) -> JudgeReport:
    dimension = parse_dimension(dimension)
    if dimension is Dimension.PERSONA_QUESTION_ALIGNMENT and context is None:
        raise ValueError("persona dimension requires the business logic instance")
    if dimension is Dimension.QUESTION_SQL_ALIGNMENT and not schema_text:
        raise ValueError("alignment dimension requires schema text")
    if passes < 1:
        raise ValueError("passes must be >= 1")
    templates = templates or load_templates()
    bindings = {"DOMAIN_NAME": domain_name, "question": sample.question}
    if dimension is Dimension.QUESTION_SQL_ALIGNMENT:
        bindings.update(db_engine_name=db_engine_name, schema_str=schema_text or "", sql=sample.sql)
    elif dimension is Dimension.PERSONA_QUESTION_ALIGNMENT:
        assert context is not None
        bindings.update(
            persona_block=persona_block(context.persona),
            scenario_block=scenario_block(context.scenario),
            tasks_block=tasks_block(context.workflow),
        )
    prompt = render_template(templates[TEMPLATE_FOR[dimension]], bindings)
    asker = as_asker(llm, temperature=JUDGE_TEMPERATURE)
    results = []
    for k in range(passes):
        tag = f"judge:{dimension.value}" if passes == 1 else f"judge:{dimension.value}:{k}"
        results.append(asker.ask(f"judge[{dimension.value}]", prompt, lambda p: parse_judgement(p, dimension), tag=tag))
    return JudgeReport(sample.id, dimension, tuple(_combine(results)), asker.provider.model_name)


# --- aggregation -------------------------------------------------------------------


def weighted_score(n_excellent: int, n_good: int, n_average: int, n_poor: int) -> float:
    total = n_excellent + n_good + n_average + n_poor
    if total <= 0:
        raise EmptyInput("no ratings to score")
    weighted = (
        rating_weight(RatingLevel.EXCELLENT) * n_excellent
        + rating_weight(RatingLevel.GOOD) * n_good
        + rating_weight(RatingLevel.AVERAGE) * n_average
        + rating_weight(RatingLevel.POOR) * n_poor
    )
    return weighted / total


@dataclass(frozen=True)
class ScoreSummary:
    dimension: Dimension
    n_excellent: int
    n_good: int
    n_average: int
    n_poor: int
    score: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "dimension": self.dimension.value,
            "n_excellent": self.n_excellent,
            "n_good": self.n_good,
            "n_average": self.n_average,
            "n_poor": self.n_poor,
            "score": self.score,
        }


def aggregate(reports: Iterable[JudgeReport], dimension: Dimension | str) -> ScoreSummary:
    """Pool every criterion rating of ``dimension`` and apply the weighted average."""
    dimension = parse_dimension(dimension)
    counts: Counter[RatingLevel] = Counter()
    for report in reports:
        if report.dimension is dimension:
            counts.update(r.level for r in report.ratings)
    if not counts:
        raise EmptyInput(f"no {dimension.value} reports")
    ne, ng, na, np_ = (counts[RatingLevel.EXCELLENT], counts[RatingLevel.GOOD], counts[RatingLevel.AVERAGE], counts[RatingLevel.POOR])
    return ScoreSummary(dimension, ne, ng, na, np_, weighted_score(ne, ng, na, np_))


def sample_score(report: JudgeReport) -> float:
    return sum(rating_weight(r.level) for r in report.ratings) / len(report.ratings)


def complexity_diversity(labels: Sequence[ComplexityLevel]) -> float:
    """Shannon entropy of the level distribution divided by log(4)."""
    if not labels:
        raise EmptyInput("no complexity labels")
    counts = Counter(labels)
    total = len(labels)
    h = 0.0
    for level in ALL_LEVELS:
        p = counts.get(level, 0) / total
        if p > 0:
            h -= p * math.log(p)
    value = h / math.log(len(ALL_LEVELS))
    return min(1.0, max(0.0, value))


def verify_sample(sample: DatasetSample, reports: Sequence[JudgeReport]) -> str:
    """``perfect`` iff every rating in every report for this sample is Excellent."""
    mine = [r for r in reports if r.sample_id == sample.id]
    if not mine:
        raise ValueError(f"no judge reports for sample {sample.id}")
    ok = all(r.level is RatingLevel.EXCELLENT for rep in mine for r in rep.ratings)
    return PERFECT if ok else IMPERFECT


# --- reports -------------------------------------------------------------------------


def quality_report(
    samples: Sequence[DatasetSample],
    reports: Sequence[JudgeReport],
    dimensions: Sequence[Dimension],
    classified: Mapping[str, ComplexityLevel] | None = None,
) -> dict[str, Any]:
    by_id = {s.id: s for s in samples}
    overall = {d.value: aggregate(reports, d).to_dict() for d in dimensions if any(r.dimension is d for r in reports)}
    per_level: dict[str, dict[str, Any]] = {}
    for level in ALL_LEVELS:
        level_reports = [r for r in reports if r.sample_id in by_id and by_id[r.sample_id].complexity is level]
        row = {}
        for d in dimensions:
            if any(r.dimension is d for r in level_reports):
                row[d.value] = aggregate(level_reports, d).to_dict()
        if row:
            per_level[level.value] = row
    verdicts = {s.id: verify_sample(s, reports) for s in samples if any(r.sample_id == s.id for r in reports)}
    out: dict[str, Any] = {
        "num_samples": len(samples),
        "dimensions": [d.value for d in dimensions],
        "overall": overall,
        "per_level": per_level,
        "complexity_diversity": complexity_diversity([s.complexity for s in samples]) if samples else None,
        "num_perfect": sum(v == PERFECT for v in verdicts.values()),
        "verdicts": verdicts,
    }
    if classified:
        labels = [classified[s.id] for s in samples if s.id in classified]
        out["complexity_diversity_classified"] = complexity_diversity(labels) if labels else None
        out["classified_levels"] = {k: v.value for k, v in classified.items()}
    return out


def render_quality_table(report: Mapping[str, Any]) -> str:
    dims = [parse_dimension(d) for d in report["dimensions"]]
    header = ["Complexity Level"] + [f"{d.title} (%)" for d in dims]
    rows = []
    for level in ALL_LEVELS:
        row = report["per_level"].get(level.value)
        if not row:
            continue
        rows.append([level.value] + [f"{100 * row[d.value]['score']:.2f}" if d.value in row else "-" for d in dims])
    rows.append(["overall"] + [f"{100 * report['overall'][d.value]['score']:.2f}" if d.value in report["overall"] else "-" for d in dims])
    lines = [_table(header, rows)]
    if report.get("complexity_diversity") is not None:
        lines.append(f"complexity diversity (dataset labels): {report['complexity_diversity']:.4f}")
    if report.get("complexity_diversity_classified") is not None:
        lines.append(f"complexity diversity (judge labels): {report['complexity_diversity_classified']:.4f}")
    lines.append(f"perfect samples: {report['num_perfect']} / {len(report['verdicts'])}")
    return "\n".join(lines) + "\n"


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    fmt = lambda r: " | ".join(str(c).ljust(w) for c, w in zip(r, widths))  # noqa: E731
    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([fmt(header), sep] + [fmt(r) for r in rows])
