"""Deterministic stand-ins for the generator, judge and candidate models.

``DemoAuthor`` reads a rendered prompt, works out which template produced it and
answers from hand-written retail content and the query bank. ``DemoCandidate``
plays a Text-to-SQL model whose hit rate falls with complexity. Neither looks at
anything but the prompt text, so recorded fixtures replay exactly.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Any, Callable

from ..domain import ALL_LEVELS, ComplexityLevel, Seniority
from ..llm import ChatRequest
from .bank import BankEntry, entries_for, find_by_intent, find_by_question, find_by_sql

AREAS: dict[str, str] = {
    "Store Operations": "Runs the physical store network: staffing, service levels, store targets and day-to-day execution.",
    "Merchandising": "Owns the product assortment, category performance, pricing and promotional calendar.",
    "Customer Marketing": "Grows and retains shoppers through loyalty, online channels and campaigns.",
    "Supply Chain": "Keeps shelves stocked: replenishment, supplier performance and inventory health.",
}

_IC, _MGR, _DIR, _EXEC = (Seniority.INDIVIDUAL_CONTRIBUTOR, Seniority.MANAGER, Seniority.DIRECTOR, Seniority.EXECUTIVE)

PERSONAS: dict[str, list[tuple[str, Seniority, str]]] = {
    "Store Operations": [
        ("Store Operations Analyst", _IC, "Builds weekly store scorecards and flags locations drifting from plan."),
        ("Store Manager", _MGR, "Runs a single store, schedules staff and answers for its sales against target."),
        ("Director of Store Operations", _DIR, "Sets operating standards across regions and allocates labor budgets."),
        ("Chief Operating Officer", _EXEC, "Accountable for network profitability and the store footprint strategy."),
        ("Regional Operations Manager", _MGR, "Oversees a group of stores in one region and coaches their managers."),
    ],
    "Merchandising": [
        ("Merchandise Planner", _IC, "Plans seasonal buys and tracks sell-through by category."),
        ("Category Manager", _MGR, "Owns the range, pricing and promotions for a set of categories."),
        ("Director of Merchandising", _DIR, "Balances the assortment across categories and negotiates with suppliers."),
        ("Chief Merchandising Officer", _EXEC, "Sets assortment and pricing strategy for the whole business."),
        ("Pricing Analyst", _IC, "Monitors price points, discount depth and margin impact."),
    ],
    "Customer Marketing": [
        ("CRM Analyst", _IC, "Segments shoppers and measures loyalty and campaign response."),
        ("E-commerce Manager", _MGR, "Runs the online store and its conversion, basket and fulfilment metrics."),
        ("Director of Customer Marketing", _DIR, "Owns the loyalty program and the campaign calendar."),
        ("Chief Marketing Officer", _EXEC, "Sets brand and customer growth strategy across channels."),
        ("Loyalty Program Manager", _MGR, "Manages tier rules, member benefits and member engagement."),
    ],
    "Supply Chain": [
        ("Inventory Analyst", _IC, "Watches stock positions and reorder points by store and product."),
        ("Replenishment Manager", _MGR, "Schedules store replenishment and resolves stockouts."),
        ("Director of Supply Chain", _DIR, "Owns supplier performance, lead times and inventory investment."),
        ("VP of Supply Chain", _EXEC, "Accountable for availability, working capital and the supplier base."),
        ("Supplier Relationship Manager", _MGR, "Manages supplier scorecards and escalations."),
    ],
}

GOALS = {
    "Store Operations": ["Hit quarterly store revenue targets", "Keep cancellations and returns low"],
    "Merchandising": ["Grow category revenue and margin", "Run promotions that pay back"],
    "Customer Marketing": ["Grow online share of sales", "Increase loyalty member spend"],
    "Supply Chain": ["Keep products in stock", "Shorten supplier lead times"],
}
PAINS = {
    "Store Operations": ["Late visibility of underperforming stores", "Manual target tracking"],
    "Merchandising": ["Discount depth eroding margin", "Slow category performance reads"],
    "Customer Marketing": ["Fragmented view of shopper behaviour", "Hard to attribute campaign impact"],
    "Supply Chain": ["Stockouts discovered too late", "Damaged goods from some suppliers"],
}
KPI_NAMES = {
    "Store Operations": ["Net revenue vs target", "Cancellation rate", "Return rate"],
    "Merchandising": ["Gross margin %", "Units sold", "Discounted revenue share"],
    "Customer Marketing": ["Online order share", "Average order value", "Orders per loyalty tier"],
    "Supply Chain": ["Items below reorder point", "Damaged return refunds", "Supplier lead time"],
}

SCENARIOS: dict[str, list[tuple[str, str, str]]] = {
    "Store Operations": [
        ("Weekly Store Performance Review", "Review last week's sales and service results for each store.", "weekly"),
        ("Quarterly Target Tracking", "Check store revenue against quarterly goals and agree corrective actions.", "quarterly"),
        ("Holiday Trading Readiness", "Plan staffing and trading hours for the holiday peak from past demand.", "ad-hoc"),
        ("Returns and Refund Monitoring", "Track refunds and cancellations to spot service problems early.", "weekly"),
        ("Regional Sales Comparison", "Compare regions to share best practice and rebalance support.", "monthly"),
        ("Store Format Evaluation", "Assess how flagship, standard and outlet formats perform.", "quarterly"),
        ("Monthly Operations Briefing", "Prepare the monthly operations summary for leadership.", "monthly"),
    ],
    "Merchandising": [
        ("Seasonal Assortment Planning", "Decide the next season's range using category performance.", "quarterly"),
        ("Category Performance Review", "Review revenue, units and margin for each category.", "monthly"),
        ("Promotion Effectiveness Review", "Measure whether recent promotions grew profitable sales.", "ad-hoc"),
        ("Pricing and Margin Check", "Check discount depth and gross margin against plan.", "weekly"),
        ("Supplier Range Review", "Review which suppliers' products earn their shelf space.", "quarterly"),
        ("Markdown Planning", "Plan clearance markdowns for slow-selling lines.", "monthly"),
        ("Quarterly Merchandise Business Review", "Summarise category results for the executive team.", "quarterly"),
    ],
    "Customer Marketing": [
        ("Loyalty Program Health Check", "Review member counts and spend by loyalty tier.", "monthly"),
        ("Online Channel Performance Review", "Track online orders, basket value and channel share.", "weekly"),
        ("Campaign Results Readout", "Report what the latest campaign delivered in orders and revenue.", "ad-hoc"),
        ("Customer Segment Analysis", "Compare consumer and business shoppers' buying patterns.", "quarterly"),
        ("Holiday Campaign Planning", "Use last year's holiday results to plan this year's campaigns.", "ad-hoc"),
        ("Monthly Marketing Dashboard Review", "Walk through the monthly marketing scorecard.", "monthly"),
        ("Refund Experience Review", "Look at refunds and their reasons to improve the shopper experience.", "monthly"),
    ],
    "Supply Chain": [
        ("Weekly Replenishment Planning", "Set replenishment quantities per store from recent sales.", "weekly"),
        ("Stockout Risk Review", "Find products close to or below their reorder points.", "weekly"),
        ("Supplier Lead Time Review", "Compare suppliers on lead time and reliability.", "quarterly"),
        ("Year-End Inventory Count", "Reconcile year-end stock positions across stores.", "ad-hoc"),
        ("Demand Forecast Alignment", "Align next quarter's demand forecast with recent sales trends.", "monthly"),
        ("Quarterly Supply Review", "Summarise availability and supplier results for leadership.", "quarterly"),
        ("Damaged Goods Investigation", "Trace damaged returns back to products and suppliers.", "ad-hoc"),
    ],
}

TASKS = (
    ("Gather the latest figures", "Pull the numbers needed for the {s} from the reporting tools."),
    ("Compare against the prior period", "Set this period's results beside the previous one to see movement."),
    ("Break results down", "Split the headline numbers by region, store, category or channel."),
    ("Investigate outliers", "Dig into the stores, products or segments that moved most."),
    ("Agree actions with stakeholders", "Discuss findings with the owners who can act on them."),
    ("Share the outcome", "Circulate a short summary of the {s} and the agreed next steps."),
)

BASE_SCORES = {
    "orders": 3, "order_items": 3, "products": 2, "categories": 2, "stores": 2, "regions": 2,
    "customers": 1, "returns": 1, "promotions": 1, "suppliers": 1, "inventory_snapshots": 1,
    "employees": 1, "sales_targets": 1,
}
AREA_SCORES = {
    "Store Operations": {"sales_targets": 3, "returns": 2, "employees": 2},
    "Merchandising": {"promotions": 2, "suppliers": 2, "inventory_snapshots": 2},
    "Customer Marketing": {"customers": 3, "returns": 2, "promotions": 2},
    "Supply Chain": {"inventory_snapshots": 3, "suppliers": 3, "returns": 2},
}

JUDGE_CRITERIA = {
    "ROLE\nYou are a data science expert": ("Result Completeness", "Constraint Fidelity", "Structural Alignment", "Unnecessary Complexity"),
    "ROLE\nYou are a Senior Business Intelligence Lead": ("Business Relevance", "Business Language", "Natural Expression", "Decision Value"),
    "ROLE\nYou are a senior business analyst and": ("Role Responsibility", "Scenario Relevance", "Practical Value", "Role Language"),
}
# One in N judgements per dimension dips a single criterion to Good.
JUDGE_DIP_EVERY = {"Result Completeness": 17, "Business Relevance": 13, "Role Responsibility": 11}


def _h(*parts: str) -> int:
    return int(hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()[:12], 16)


def _grab(pattern: str, text: str) -> str | None:
    m = re.search(pattern, text, re.S)
    return m.group(1).strip() if m else None


def _lower_first(text: str) -> str:
    return text[:1].lower() + text[1:]


def _reply(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=1)


class DemoAuthor:
    """Callable for :class:`~bizsynth.llm.ScriptedProvider`; returns the raw reply text."""

    def __init__(self) -> None:
        self._routes: list[tuple[str, Callable[[str], str]]] = [
            ("Your task is to generate realistic job personas", self.personas),
            ("Your task is to identify the major work scenarios", self.scenarios),
            ("You are a senior business workflow architect.", self.workflow),
            ("Your task is to rate the relevance of each", self.scores),
            ("Your task is to FIX the SQL query.", self.repair),
            ("Your task is to generate realistic analytic SQL", self.drafts),
            ("Your task is to write ONE natural-language", self.question),
            ("grades the business reasoning depth", self.classify),
        ]

    def __call__(self, request: ChatRequest) -> str:
        prompt = request.system_prompt + "\n\n" + request.user_prompt
        for marker, criteria in JUDGE_CRITERIA.items():
            if prompt.startswith(marker):
                return self.judge(prompt, criteria)
        for marker, handler in self._routes:
            if marker in prompt:
                return handler(prompt)
        return "{}"

    # --- business logic ---

    def personas(self, prompt: str) -> str:
        area = _grab(r"FUNCTIONAL AREA:\n- Name: ([^\n]*)", prompt) or ""
        n = int(_grab(r"Generate (\d+) distinct personas", prompt) or 0)
        pool = PERSONAS.get(area) or PERSONAS["Store Operations"]
        out = []
        for k in range(n):
            title, seniority, summary = pool[k % len(pool)]
            if k >= len(pool):
                title = f"{title} {k // len(pool) + 1}"
            out.append({
                "name": title,
                "seniority": seniority.value,
                "role_summary": summary,
                "primary_goals": GOALS.get(area, GOALS["Store Operations"]),
                "pain_points": PAINS.get(area, PAINS["Store Operations"]),
                "primary_kpis": KPI_NAMES.get(area, KPI_NAMES["Store Operations"]),
            })
        return _reply({"personas": out})

    def scenarios(self, prompt: str) -> str:
        area = _grab(r"FUNCTIONAL AREA:\n- Name: ([^\n]*)", prompt) or ""
        name = _grab(r"PERSONA:\nName: ([^\n]*)", prompt) or ""
        pool = SCENARIOS.get(area) or SCENARIOS["Store Operations"]
        start = _h(name) % len(pool)
        picked = [pool[(start + k) % len(pool)] for k in range(5)]
        items = [{"name": n, "description": d, "frequency": f} for n, d, f in picked]
        return _reply({"work_scenarios": [{"persona_name": name, "work_scenarios": items}]})

    def workflow(self, prompt: str) -> str:
        area = _grab(r"FUNCTIONAL AREA:\n- Name: ([^\n]*)", prompt) or "Store Operations"
        scenario = _grab(r"WORK SCENARIO:\nName: ([^\n]*)", prompt) or "review"
        tasks = [{"name": n, "description": d.format(s=scenario.lower())} for n, d in TASKS]
        kpis = [
            {"name": k, "description": f"Tracked during the {scenario.lower()}.", "formula_or_logic": f"Aggregate of {k.lower()} for the period"}
            for k in KPI_NAMES.get(area, KPI_NAMES["Store Operations"])
        ]
        kpis += [
            {"name": "Net revenue", "description": "Completed-order sales after discounts.", "formula_or_logic": "sum(quantity x price x (1 - discount))"},
            {"name": "Completed orders", "description": "Orders not cancelled or returned.", "formula_or_logic": "count of completed orders"},
        ]
        return _reply({"tasks": tasks, "related_kpis": kpis})

    # --- schema and SQL ---

    def scores(self, prompt: str) -> str:
        area = _grab(r"FUNCTIONAL AREA:\n- Name: ([^\n]*)", prompt) or ""
        boosts = AREA_SCORES.get(area, {})
        out = []
        for table in re.findall(r"^Table: (\w+)", prompt, re.M):
            score = max(BASE_SCORES.get(table, 0), boosts.get(table, 0))
            reason = {3: "core facts for this scenario", 2: "supporting attributes", 1: "occasionally useful", 0: "no business relevance"}[score]
            out.append({"table": table, "score": score, "reason": reason})
        return _reply({"scores": out})

    def drafts(self, prompt: str) -> str:
        level = ComplexityLevel(_grab(r"Level: (\w+)", prompt) or "single_metric")
        n = int(_grab(r"Generate (\d+) diverse analytic queries", prompt) or 1)
        allowed = set(re.findall(r"^Table: (\w+)", prompt, re.M))
        persona = _grab(r"PERSONA:\nName: ([^\n]*)", prompt) or ""
        scenario = _grab(r"WORK SCENARIO:\nName: ([^\n]*)", prompt) or ""
        pool = [e for e in entries_for(level) if e.tables <= allowed]
        if not pool:
            return _reply({"queries": []})
        start = _h(persona, scenario, level.value) % len(pool)
        chosen = [pool[(start + k) % len(pool)] for k in range(n)]
        queries = [
            {"intent_complexity": level.value, "intent": e.intent, "sql": e.broken[0] if e.broken else e.sql}
            for e in chosen
        ]
        return _reply({"queries": queries})

    def repair(self, prompt: str) -> str:
        entry = find_by_intent(_grab(r"INTENT:\n(.*?)\n\nPREVIOUS SQL:", prompt) or "")
        previous = _grab(r"PREVIOUS SQL:\n(.*?)\n\nERROR MESSAGE:", prompt) or ""
        if entry is None:
            return _reply({"reasoning": "could not place the intent", "sql": previous})
        steps = list(entry.broken) + [entry.sql]
        nxt = steps[steps.index(previous) + 1] if previous in steps[:-1] else entry.sql
        return _reply({"reasoning": "fixed the column or clause named in the error", "sql": nxt})

    def question(self, prompt: str) -> str:
        entry = find_by_intent(_grab(r"SQL QUERY INTENT \(HINT\):\n(.*?)\n\nSQL QUERY:", prompt) or "")
        if entry is None:
            return "{}"
        scenario = _grab(r"WORK SCENARIO:\nName: ([^\n]*)", prompt) or "review"
        persona = _grab(r"PERSONA:\nName: ([^\n]*)", prompt) or "analyst"
        article = "an" if persona[:1].lower() in "aeiou" else "a"
        question = f"As {article} {persona} working on our {scenario.lower()}, {_lower_first(entry.question)}"
        return _reply({"question": question, "paraphrases": list(entry.paraphrases)})

    # --- judging ---

    def judge(self, prompt: str, criteria: tuple[str, ...]) -> str:
        question = _grab(r"QUESTION:\n(.*?)\n\n", prompt) or ""
        dip_every = JUDGE_DIP_EVERY[criteria[0]]
        h = _h(criteria[0], question)
        dipped = criteria[h // dip_every % len(criteria)] if h % dip_every == 0 else None
        return _reply({
            c: {"level": "Good" if c == dipped else "Excellent",
                "explanation": "minor wording gap" if c == dipped else "fully meets the criterion"}
            for c in criteria
        })

    def classify(self, prompt: str) -> str:
        entry = find_by_sql(_grab(r"SQL QUERY:\n(.*?)\n\nYou MUST", prompt) or "")
        level = entry.level.value if entry else ComplexityLevel.COMPOSITIONAL_TASK.value
        return _reply({"complexity_level": level, "explanation": "matches the level definition"})


DEFAULT_SKILL = {
    ComplexityLevel.SINGLE_METRIC: 90,
    ComplexityLevel.COMPARATIVE_METRIC: 75,
    ComplexityLevel.DERIVED_METRIC: 60,
    ComplexityLevel.COMPOSITIONAL_TASK: 40,
}


@dataclass
class DemoCandidate:
    """A candidate Text-to-SQL model that answers correctly ``skill[level]`` percent of the time."""

    name: str
    skill: dict[ComplexityLevel, int] = field(default_factory=lambda: dict(DEFAULT_SKILL))

    def answer(self, question: str) -> str:
        entry = find_by_question(question)
        if entry is None:
            return "SELECT NULL"
        h = _h(self.name, question)
        if h % 100 < self.skill[entry.level]:
            return entry.sql
        if h % 7 == 0:
            return entry.sql.replace("SELECT", "SELEC", 1)
        others = [e for e in entries_for(entry.level) if e.key != entry.key]
        return others[h % len(others)].sql

    def __call__(self, request: ChatRequest) -> str:
        prompt = request.system_prompt + "\n\n" + request.user_prompt
        question = _grab(r"QUESTION:\n(.*?)\n\n", prompt) or ""
        sql = self.answer(question)
        if "PREVIOUS STEPS:" not in prompt:
            return f"Here is the query.\n\n```sql\n{sql}\n```\n"
        history = _grab(r"PREVIOUS STEPS:\n(.*?)\n\nReply with", prompt) or "(none)"
        if history == "(none)":
            step = {"thought": "Run a query to check the numbers.", "action": "execute", "payload": sql}
        else:
            step = {"thought": "The result answers the question.", "action": "respond", "payload": sql}
        return _reply(step)


def level_names() -> list[str]:
    return [lvl.value for lvl in ALL_LEVELS]


__all__ = ["AREAS", "DemoAuthor", "DemoCandidate", "BankEntry", "level_names"]
