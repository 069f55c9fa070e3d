"""Shared vocabulary: personas, scenarios, workflows, complexity and rating levels."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Any

from .errors import UnknownLevel, UnknownSeniority


def _norm_token(raw: str) -> str:
    return re.sub(r"[\s\-_]+", "_", raw.strip().lower())


class Seniority(str, Enum):
    INDIVIDUAL_CONTRIBUTOR = "individual_contributor"
    MANAGER = "manager"
    DIRECTOR = "director"
    EXECUTIVE = "executive"


def parse_seniority(raw: str) -> Seniority:
    """Parse a seniority label, ignoring case and ``_``/``-``/space differences."""
    if not isinstance(raw, str):
        raise UnknownSeniority(f"seniority must be text, got {type(raw).__name__}")
    token = _norm_token(raw)
    for value in Seniority:
        if value.value == token:
            return value
    raise UnknownSeniority(f"unknown seniority {raw!r}")


class ComplexityLevel(str, Enum):
    SINGLE_METRIC = "single_metric"
    COMPARATIVE_METRIC = "comparative_metric"
    DERIVED_METRIC = "derived_metric"
    COMPOSITIONAL_TASK = "compositional_task"

    @property
    def rank(self) -> int:
        return _LEVEL_ORDER.index(self)

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, ComplexityLevel):
            return NotImplemented
        return self.rank < other.rank

    def __le__(self, other: object) -> bool:
        if not isinstance(other, ComplexityLevel):
            return NotImplemented
        return self.rank <= other.rank

    def __gt__(self, other: object) -> bool:
        if not isinstance(other, ComplexityLevel):
            return NotImplemented
        return self.rank > other.rank

    def __ge__(self, other: object) -> bool:
        if not isinstance(other, ComplexityLevel):
            return NotImplemented
        return self.rank >= other.rank


_LEVEL_ORDER = list(ComplexityLevel)
ALL_LEVELS: tuple[ComplexityLevel, ...] = tuple(_LEVEL_ORDER)


def parse_level(raw: str) -> ComplexityLevel:
    """Accepts ``derived_metric``, ``Derived Metric`` and ``Derived Metric Analysis``."""
    if isinstance(raw, ComplexityLevel):
        return raw
    if not isinstance(raw, str):
        raise UnknownLevel(f"complexity level must be text, got {raw!r}")
    token = _norm_token(raw)
    token = re.sub(r"_analysis$", "", token)
    for level in ComplexityLevel:
        if level.value == token:
            return level
    raise UnknownLevel(f"unknown complexity level {raw!r}")


def complexity_order(a: ComplexityLevel, b: ComplexityLevel) -> int:
    """Three-way comparison: -1 if ``a`` is simpler than ``b``, 0 if equal, 1 otherwise."""
    return (a.rank > b.rank) - (a.rank < b.rank)


class RatingLevel(str, Enum):
    EXCELLENT = "excellent"
    GOOD = "good"
    AVERAGE = "average"
    POOR = "poor"

    @property
    def weight(self) -> float:
        return RATING_WEIGHTS[self]


RATING_WEIGHTS: dict[RatingLevel, float] = {
    RatingLevel.EXCELLENT: 1.0,
    RatingLevel.GOOD: 0.75,
    RatingLevel.AVERAGE: 0.5,
    RatingLevel.POOR: 0.25,
}


def rating_weight(level: RatingLevel) -> float:
    return RATING_WEIGHTS[level]


def parse_rating(raw: str) -> RatingLevel:
    if isinstance(raw, RatingLevel):
        return raw
    if not isinstance(raw, str):
        raise ValueError(f"rating must be text, got {raw!r}")
    token = raw.strip().lower()
    for level in RatingLevel:
        if level.value == token:
            return level
    raise ValueError(f"unknown rating level {raw!r}")


# --- value objects -----------------------------------------------------------


def _text(value: Any, name: str, *, required: bool = True) -> str:
    if value is None:
        value = ""
    if not isinstance(value, str):
        raise ValueError(f"{name} must be text")
    value = value.strip()
    if required and not value:
        raise ValueError(f"{name} must be non-empty")
    return value


def _text_list(values: Any, name: str, *, required: bool = True) -> tuple[str, ...]:
    if isinstance(values, str) or not isinstance(values, (list, tuple)):
        raise ValueError(f"{name} must be a list of text")
    out = tuple(_text(v, name) for v in values)
    if required and not out:
        raise ValueError(f"{name} must be non-empty")
    return out


class _Value:
    """Mixin giving frozen dataclasses a plain-dict round trip."""

    def _set(self, name: str, value: Any) -> None:
        object.__setattr__(self, name, value)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):  # type: ignore[arg-type]
            out[f.name] = _plain(getattr(self, f.name))
        return out


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, _Value):
        return value.to_dict()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass(frozen=True)
class Persona(_Value):
    name: str
    seniority: Seniority
    role_summary: str
    primary_goals: tuple[str, ...]
    pain_points: tuple[str, ...]
    primary_kpis: tuple[str, ...]
    department: str = ""

    def __post_init__(self) -> None:
        self._set("name", _text(self.name, "persona.name"))
        if not isinstance(self.seniority, Seniority):
            self._set("seniority", parse_seniority(self.seniority))
        self._set("role_summary", _text(self.role_summary, "persona.role_summary", required=False))
        self._set("primary_goals", _text_list(self.primary_goals, "persona.primary_goals"))
        self._set("pain_points", _text_list(self.pain_points, "persona.pain_points"))
        self._set("primary_kpis", _text_list(self.primary_kpis, "persona.primary_kpis"))
        self._set("department", _text(self.department, "persona.department", required=False))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Persona:
        return cls(
            name=data.get("name"),
            seniority=data.get("seniority"),
            role_summary=data.get("role_summary", ""),
            primary_goals=data.get("primary_goals"),
            pain_points=data.get("pain_points"),
            primary_kpis=data.get("primary_kpis"),
            department=data.get("department", ""),
        )


@dataclass(frozen=True)
class WorkScenario(_Value):
    name: str
    description: str
    frequency: str = ""

    def __post_init__(self) -> None:
        self._set("name", _text(self.name, "scenario.name"))
        self._set("description", _text(self.description, "scenario.description"))
        self._set("frequency", _text(self.frequency, "scenario.frequency", required=False))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> WorkScenario:
        return cls(data.get("name"), data.get("description"), data.get("frequency", ""))


@dataclass(frozen=True)
class WorkflowTask(_Value):
    name: str
    description: str
    order_index: int

    def __post_init__(self) -> None:
        self._set("name", _text(self.name, "task.name"))
        self._set("description", _text(self.description, "task.description", required=False))
        if not isinstance(self.order_index, int) or isinstance(self.order_index, bool) or self.order_index < 0:
            raise ValueError("task.order_index must be an integer >= 0")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> WorkflowTask:
        return cls(data.get("name"), data.get("description", ""), data.get("order_index"))


@dataclass(frozen=True)
class Kpi(_Value):
    name: str
    description: str = ""
    formula_or_logic: str = ""

    def __post_init__(self) -> None:
        self._set("name", _text(self.name, "kpi.name"))
        self._set("description", _text(self.description, "kpi.description", required=False))
        self._set("formula_or_logic", _text(self.formula_or_logic, "kpi.formula_or_logic", required=False))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Kpi:
        return cls(data.get("name"), data.get("description", ""), data.get("formula_or_logic", ""))


@dataclass(frozen=True)
class BusinessLogicInstance(_Value):
    id: str
    persona: Persona
    scenario: WorkScenario
    workflow: tuple[WorkflowTask, ...]
    kpis: tuple[Kpi, ...] = ()
    approved: bool = True

    def __post_init__(self) -> None:
        self._set("id", _text(self.id, "instance.id"))
        self._set("workflow", tuple(self.workflow))
        self._set("kpis", tuple(self.kpis))
        if not self.workflow:
            raise ValueError("instance.workflow must be non-empty")
        check_contiguous(self.workflow)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> BusinessLogicInstance:
        return cls(
            id=data.get("id"),
            persona=Persona.from_dict(data["persona"]),
            scenario=WorkScenario.from_dict(data["scenario"]),
            workflow=tuple(WorkflowTask.from_dict(t) for t in data["workflow"]),
            kpis=tuple(Kpi.from_dict(k) for k in data.get("kpis", [])),
            approved=bool(data.get("approved", True)),
        )


def check_contiguous(tasks: tuple[WorkflowTask, ...] | list[WorkflowTask]) -> None:
    indices = sorted(t.order_index for t in tasks)
    if indices != list(range(len(indices))):
        raise ValueError(f"workflow order_index values must be contiguous from 0, got {indices}")


@dataclass(frozen=True)
class FunctionalArea(_Value):
    name: str
    description: str = ""

    def __post_init__(self) -> None:
        self._set("name", _text(self.name, "functional_area.name"))
        self._set("description", _text(self.description, "functional_area.description", required=False))


@dataclass(frozen=True)
class DomainSpec(_Value):
    domain_name: str
    functional_areas: tuple[FunctionalArea, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        self._set("domain_name", _text(self.domain_name, "domain_name"))
        areas = tuple(a if isinstance(a, FunctionalArea) else FunctionalArea(**a) for a in self.functional_areas)
        if not areas:
            raise ValueError("domain spec needs at least one functional area")
        self._set("functional_areas", areas)

    def area(self, name: str) -> FunctionalArea:
        for a in self.functional_areas:
            if a.name == name:
                return a
        raise KeyError(name)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DomainSpec:
        return cls(data.get("domain_name"), tuple(data.get("functional_areas") or ()))
