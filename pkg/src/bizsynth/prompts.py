"""Prompt template set and the text blocks that fill its placeholders."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .domain import ALL_LEVELS, BusinessLogicInstance, ComplexityLevel, DomainSpec, FunctionalArea, Kpi, Persona, WorkflowTask, WorkScenario

TEMPLATE_NAMES = (
    "persona",
    "scenario",
    "workflow",
    "schema_selection",
    "sql_generation",
    "sql_refinement",
    "sql_to_question",
    "judge_question_sql_alignment",
    "judge_question_realism",
    "judge_persona_question_alignment",
    "complexity_classification",
    "bench_single_shot",
    "bench_react",
)


def load_templates(override_dir: Path | None = None) -> dict[str, str]:
    """Bundled templates, with any same-named ``<name>.txt`` in ``override_dir`` taking precedence."""
    bundled = resources.files("bizsynth") / "templates"
    out = {name: (bundled / f"{name}.txt").read_text(encoding="utf-8") for name in TEMPLATE_NAMES}
    if override_dir is not None:
        for name in TEMPLATE_NAMES:
            path = Path(override_dir) / f"{name}.txt"
            if path.exists():
                out[name] = path.read_text(encoding="utf-8")
    return out


@dataclass(frozen=True)
class ComplexitySpec:
    level: ComplexityLevel
    title: str
    definition_text: str
    example_question: str


DEFAULT_COMPLEXITY_SPECS: dict[ComplexityLevel, ComplexitySpec] = {
    ComplexityLevel.SINGLE_METRIC: ComplexitySpec(
        ComplexityLevel.SINGLE_METRIC,
        "Single Metric Analysis",
        "The simplest level, where questions request a single metric or a list of entities "
        "under straightforward filtering conditions",
        "How many demo meetings did active SDRs book last week?",
    ),
    ComplexityLevel.COMPARATIVE_METRIC: ComplexitySpec(
        ComplexityLevel.COMPARATIVE_METRIC,
        "Comparative Metric Analysis",
        "Questions that compare the same metric across a single analytical dimension, "
        "such as time, region, or category",
        "For the current quarter, what are the total outbound-sourced pipeline dollars created by region?",
    ),
    ComplexityLevel.DERIVED_METRIC: ComplexitySpec(
        ComplexityLevel.DERIVED_METRIC,
        "Derived Metric Analysis",
        "Questions that compute derived indicators or apply explicit business logic, "
        "such as ratios, percentages, or rule-based subsets",
        "What percentage of primary partner co-sell opportunities are in Commit or already Closed-Won?",
    ),
    ComplexityLevel.COMPOSITIONAL_TASK: ComplexitySpec(
        ComplexityLevel.COMPOSITIONAL_TASK,
        "Compositional Task Analysis",
        "The highest complexity level, where questions combine multiple analytical operations "
        "within a single query, such as jointly comparing, ranking, and segmenting results",
        "Which five region–product-family combinations generated the highest closed-won revenue, "
        "and what were their revenue totals?",
    ),
}

assert set(DEFAULT_COMPLEXITY_SPECS) == set(ALL_LEVELS)


def complexity_block(spec: ComplexitySpec) -> str:
    return (
        f"Level: {spec.level.value} ({spec.title})\n"
        f"Definition: {spec.definition_text}.\n"
        f"Example question: \"{spec.example_question}\""
    )


def levels_block(specs: dict[ComplexityLevel, ComplexitySpec] = DEFAULT_COMPLEXITY_SPECS) -> str:
    return "\n".join(
        f"- {level.value} ({specs[level].title}): {specs[level].definition_text}. "
        f"Example: \"{specs[level].example_question}\""
        for level in ALL_LEVELS
    )


def _bullets(items: tuple[str, ...] | list[str]) -> str:
    return "\n".join(f"- {item}" for item in items)


def persona_block(persona: Persona) -> str:
    lines = [
        f"Name: {persona.name}",
        f"Department: {persona.department}" if persona.department else None,
        f"Seniority: {persona.seniority.value}",
        f"Role summary: {persona.role_summary}" if persona.role_summary else None,
        "Primary goals:",
        _bullets(persona.primary_goals),
        "Pain points:",
        _bullets(persona.pain_points),
        "Primary KPIs:",
        _bullets(persona.primary_kpis),
    ]
    return "\n".join(line for line in lines if line is not None)


def scenario_block(scenario: WorkScenario) -> str:
    lines = [f"Name: {scenario.name}", f"Description: {scenario.description}"]
    if scenario.frequency:
        lines.append(f"Frequency: {scenario.frequency}")
    return "\n".join(lines)


def tasks_block(tasks: tuple[WorkflowTask, ...]) -> str:
    ordered = sorted(tasks, key=lambda t: t.order_index)
    return "\n".join(
        f"{t.order_index + 1}. {t.name}" + (f": {t.description}" if t.description else "") for t in ordered
    )


def kpis_block(kpis: tuple[Kpi, ...]) -> str:
    if not kpis:
        return "(none listed)"
    out = []
    for k in kpis:
        line = f"- {k.name}"
        if k.description:
            line += f": {k.description}"
        if k.formula_or_logic:
            line += f" (logic: {k.formula_or_logic})"
        out.append(line)
    return "\n".join(out)


def context_bindings(
    spec: DomainSpec,
    area: FunctionalArea,
    instance: BusinessLogicInstance | None = None,
    *,
    db_engine_name: str = "SQLite",
) -> dict[str, str]:
    """Bindings shared by every instance-conditioned template."""
    out = {
        "domain_name": spec.domain_name,
        "DOMAIN_NAME": spec.domain_name,
        "functional_area_name": area.name,
        "functional_area_desc": area.description,
        "db_engine_name": db_engine_name,
    }
    if instance is not None:
        out.update(
            persona=persona_block(instance.persona),
            persona_block=persona_block(instance.persona),
            scenario=scenario_block(instance.scenario),
            scenario_block=scenario_block(instance.scenario),
            tasks_block=tasks_block(instance.workflow),
            kpis_block=kpis_block(instance.kpis),
        )
    return out


def area_for(spec: DomainSpec, persona: Persona) -> FunctionalArea:
    """The functional area a persona was generated for, or the first one if unknown."""
    for area in spec.functional_areas:
        if area.name == persona.department:
            return area
    return spec.functional_areas[0]
