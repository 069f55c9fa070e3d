"""Hierarchical business-logic generation: personas, work scenarios, workflows, instances."""

from __future__ import annotations

import random
import uuid
from typing import Any, Mapping, Sequence

from .domain import (
    BusinessLogicInstance,
    DomainSpec,
    FunctionalArea,
    Kpi,
    Persona,
    Seniority,
    WorkflowTask,
    WorkScenario,
)
from .llm import Asker, Provider, render_template
from .prompts import area_for, context_bindings, load_templates, persona_block, scenario_block

SCENARIO_RANGE = (3, 5)
TASK_RANGE = (5, 8)
KPI_RANGE = (5, 15)

ID_NAMESPACE = uuid.UUID("6f1c2a52-3d0e-4f7b-9a51-0c7f1f3b2d11")


def as_asker(llm: Provider | Asker, **kwargs: Any) -> Asker:
    return llm if isinstance(llm, Asker) else Asker(llm, **kwargs)


def stable_id(*parts: object) -> str:
    """Run-scoped UUID derived from its parts, so reruns reproduce identifiers."""
    return str(uuid.uuid5(ID_NAMESPACE, "\x1f".join(str(p) for p in parts)))


def _list_of_dicts(value: Any, name: str) -> list[dict[str, Any]]:
    if not isinstance(value, list) or not all(isinstance(v, dict) for v in value):
        raise ValueError(f"{name} must be a list of objects")
    return value


def _in_range(n: int, bounds: tuple[int, int], what: str) -> None:
    lo, hi = bounds
    if not lo <= n <= hi:
        raise ValueError(f"expected {lo}-{hi} {what}, got {n}")


def parse_personas(payload: Any, area: FunctionalArea, num_personas: int) -> list[Persona]:
    items = _list_of_dicts(payload["personas"], "personas")
    personas = []
    for item in items:
        seniority = item.get("seniority", item.get("seniority_level"))
        if seniority is None:
            raise ValueError(f"persona {item.get('name')!r} lacks a seniority")
        personas.append(
            Persona(
                name=item.get("name"),
                seniority=seniority,
                role_summary=item.get("role_summary", ""),
                primary_goals=item.get("primary_goals"),
                pain_points=item.get("pain_points"),
                primary_kpis=item.get("primary_kpis"),
                department=area.name,
            )
        )
    if len(personas) != num_personas:
        raise ValueError(f"expected {num_personas} personas, got {len(personas)}")
    if num_personas >= len(Seniority):
        missing = set(Seniority) - {p.seniority for p in personas}
        if missing:
            raise ValueError(f"seniority coverage unmet, missing {sorted(m.value for m in missing)}")
    return personas


def generate_personas(
    spec: DomainSpec,
    area: FunctionalArea,
    num_personas: int,
    llm: Provider | Asker,
    *,
    templates: Mapping[str, str] | None = None,
) -> list[Persona]:
    if num_personas < 1:
        raise ValueError("num_personas must be >= 1")
    templates = templates or load_templates()
    bindings = context_bindings(spec, area)
    bindings["num_personas"] = str(num_personas)
    prompt = render_template(templates["persona"], bindings)
    return as_asker(llm).ask(
        "generate_personas",
        prompt,
        lambda payload: parse_personas(payload, area, num_personas),
        tag=f"personas:{area.name}",
    )


def parse_scenarios(payload: Any) -> list[WorkScenario]:
    items = _list_of_dicts(payload["work_scenarios"], "work_scenarios")
    # The template nests scenarios under a per-persona wrapper; accept the flat form too.
    if items and "work_scenarios" in items[0]:
        flat: list[dict[str, Any]] = []
        for wrapper in items:
            flat.extend(_list_of_dicts(wrapper["work_scenarios"], "work_scenarios"))
        items = flat
    scenarios = [WorkScenario(i.get("name"), i.get("description"), i.get("frequency", "")) for i in items]
    _in_range(len(scenarios), SCENARIO_RANGE, "work scenarios")
    return scenarios


def generate_scenarios(
    persona: Persona,
    spec: DomainSpec,
    llm: Provider | Asker,
    *,
    templates: Mapping[str, str] | None = None,
) -> list[WorkScenario]:
    templates = templates or load_templates()
    area = area_for(spec, persona)
    bindings = context_bindings(spec, area)
    bindings["persona"] = persona_block(persona)
    prompt = render_template(templates["scenario"], bindings)
    return as_asker(llm).ask("generate_scenarios", prompt, parse_scenarios, tag=f"scenarios:{persona.name}")


def parse_workflow(payload: Any) -> tuple[list[WorkflowTask], list[Kpi]]:
    tasks = [
        WorkflowTask(t.get("name"), t.get("description", ""), i)
        for i, t in enumerate(_list_of_dicts(payload["tasks"], "tasks"))
    ]
    kpis = [
        Kpi(k.get("name"), k.get("description", ""), k.get("formula_or_logic", ""))
        for k in _list_of_dicts(payload["related_kpis"], "related_kpis")
    ]
    _in_range(len(tasks), TASK_RANGE, "workflow tasks")
    _in_range(len(kpis), KPI_RANGE, "KPIs")
    return tasks, kpis


def generate_workflow(
    persona: Persona,
    scenario: WorkScenario,
    spec: DomainSpec,
    llm: Provider | Asker,
    *,
    templates: Mapping[str, str] | None = None,
) -> tuple[list[WorkflowTask], list[Kpi]]:
    templates = templates or load_templates()
    bindings = context_bindings(spec, area_for(spec, persona))
    bindings["persona"] = persona_block(persona)
    bindings["scenario"] = scenario_block(scenario)
    prompt = render_template(templates["workflow"], bindings)
    return as_asker(llm).ask(
        "generate_workflow", prompt, parse_workflow, tag=f"workflow:{persona.name}:{scenario.name}"
    )


def assemble_instances(
    personas: Sequence[Persona],
    scenarios: Mapping[int, Sequence[WorkScenario]],
    workflows: Mapping[tuple[int, int], tuple[Sequence[WorkflowTask], Sequence[Kpi]]],
    limit: int,
    seed: int = 0,
) -> list[BusinessLogicInstance]:
    """Pair personas with scenarios, one scenario per persona per round.

    ``scenarios`` is keyed by persona index and ``workflows`` by
    ``(persona index, scenario index)``. Persona order and each persona's scenario
    order are shuffled with ``seed``; round ``r`` takes the ``r``-th scenario of every
    persona, so personas are exhausted before any repeats.
    """
    if limit <= 0:
        return []
    rng = random.Random(seed)
    order = list(range(len(personas)))
    rng.shuffle(order)
    queues: dict[int, list[int]] = {}
    for i in order:
        picks = list(range(len(scenarios.get(i, ()))))
        rng.shuffle(picks)
        queues[i] = picks

    selected: list[tuple[int, int]] = []
    round_no = 0
    while len(selected) < limit:
        progressed = False
        for i in order:
            if round_no < len(queues[i]):
                selected.append((i, queues[i][round_no]))
                progressed = True
                if len(selected) == limit:
                    break
        if not progressed:
            break
        round_no += 1

    instances = []
    for i, j in selected:
        if (i, j) not in workflows:
            raise KeyError(f"no workflow for persona {i} scenario {j}")
        tasks, kpis = workflows[(i, j)]
        scenario = scenarios[i][j]
        instances.append(
            BusinessLogicInstance(
                id=stable_id("instance", seed, i, j, personas[i].name, scenario.name),
                persona=personas[i],
                scenario=scenario,
                workflow=tuple(tasks),
                kpis=tuple(kpis),
            )
        )
    return instances
