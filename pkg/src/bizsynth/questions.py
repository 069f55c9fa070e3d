"""SQL-to-question conversion with a schema-identifier leak check."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .domain import BusinessLogicInstance, DomainSpec
from .forge import QueryDraft
from .llm import Asker, Provider, render_template
from .logic import as_asker
from .prompts import area_for, context_bindings, load_templates
from .schema import SchemaSubset, tables_block

PARAPHRASE_COUNT = 2
MIN_QUESTION_WORDS = 8
MIN_IDENTIFIER_LENGTH = 4

# Identifiers that are also plain business English; banning them would rule out realistic questions.
DEFAULT_ALLOWLIST = frozenset(
    """
    account accounts active address amount amounts balance brand brands budget campaign campaigns category
    categories channel channels city cities code company companies contact contacts contract contracts cost costs
    country countries customer customers date dates deal deals department departments description discount
    discounts email employee employees event events first forecast forecasts inventory invoice invoices item items
    last lead leads level levels location locations margin member members month name names note notes opportunity
    opportunities order orders owner owners partner partners payment payments period phone price prices priority
    product products profit promotion promotions quantity quarter quota quotas rank rating reason refund refunds
    region regions rep reps return returns revenue role sale sales score segment segments shipment shipments size
    source stage stages state status store stores supplier suppliers target targets task tasks team teams territory
    tier title total type user users value vendor vendors week year
    """.split()
)


@dataclass(frozen=True)
class QuestionRecord:
    question: str
    paraphrases: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.question or not self.question.strip():
            raise ValueError("question must be non-empty")
        object.__setattr__(self, "question", self.question.strip())
        object.__setattr__(self, "paraphrases", tuple(p.strip() for p in self.paraphrases))


def leaked_identifiers(
    question: str,
    identifiers: Iterable[str],
    allowlist: Iterable[str] = DEFAULT_ALLOWLIST,
    min_length: int = MIN_IDENTIFIER_LENGTH,
) -> list[str]:
    """Schema identifiers that appear as whole words in ``question`` (case-insensitive)."""
    allowed = {a.lower() for a in allowlist}
    hits = []
    for ident in sorted(set(identifiers)):
        if len(ident) < min_length or ident.lower() in allowed:
            continue
        if re.search(rf"(?<![A-Za-z0-9_]){re.escape(ident)}(?![A-Za-z0-9_])", question, re.IGNORECASE):
            hits.append(ident)
    return hits


def parse_question(
    payload: Any,
    identifiers: set[str],
    allowlist: Iterable[str] = DEFAULT_ALLOWLIST,
    min_words: int = MIN_QUESTION_WORDS,
) -> QuestionRecord:
    question = payload["question"]
    paraphrases = payload["paraphrases"]
    if not isinstance(question, str) or not question.strip():
        raise ValueError("question must be non-empty text")
    if not isinstance(paraphrases, list) or len(paraphrases) != PARAPHRASE_COUNT:
        raise ValueError(f"expected exactly {PARAPHRASE_COUNT} paraphrases")
    if not all(isinstance(p, str) and p.strip() for p in paraphrases):
        raise ValueError("paraphrases must be non-empty text")
    if len(question.split()) < min_words:
        raise ValueError(f"question shorter than {min_words} words")
    leaks = leaked_identifiers(question, identifiers, allowlist)
    if leaks:
        raise ValueError(f"question mentions schema identifiers {leaks}")
    return QuestionRecord(question, tuple(paraphrases))


def sql_to_question(
    draft: QueryDraft,
    instance: BusinessLogicInstance,
    subset: SchemaSubset,
    llm: Provider | Asker,
    *,
    spec: DomainSpec,
    templates: Mapping[str, str] | None = None,
    allowlist: Iterable[str] = DEFAULT_ALLOWLIST,
    min_words: int = MIN_QUESTION_WORDS,
    db_engine_name: str = "SQLite",
) -> QuestionRecord:
    if draft.instance_id != instance.id or subset.instance_id != instance.id:
        raise ValueError("draft, instance and subset must share the same instance id")
    templates = templates or load_templates()
    allow = frozenset(allowlist)
    bindings = context_bindings(spec, area_for(spec, instance.persona), instance, db_engine_name=db_engine_name)
    bindings.update(tables_block=tables_block(subset.tables), intent=draft.intent, sql_text=draft.sql)
    prompt = render_template(templates["sql_to_question"], bindings)
    identifiers = subset.identifiers()
    return as_asker(llm).ask(
        "sql_to_question",
        prompt,
        lambda p: parse_question(p, identifiers, allow, min_words),
        tag="question",
    )
