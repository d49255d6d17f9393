"""Prompt plans for the seven prompting strategies, under a token budget."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .model import AlignError, EntityId, Kind, Ontology, PropertySignature, SubClass
from .verbalize import Order, humanize, verbalize_ontology

PROBLEM_DEFINITION = (
    "In this task, we are given two ontologies in the form of Relation(Subject, Object), "
    "which consist of classes and properties."
)
MAPPING_OBJECTIVE = (
    "Our objective is to provide ontology mapping for the provided ontologies "
    "based on their semantic similarities."
)
COMPLETE_OBJECTIVE = "Provide a complete and comprehensive matching of the ontologies"
ACCURATE_OBJECTIVE = "Match these two ontologies and provide the most accurate matching you can do"
BEST_MATCH_QUESTION = (
    "For a class/property in the first ontology, which class/property in ontology 2 is the best match?"
)
ONTOLOGY_1 = "Ontology 1:"
ONTOLOGY_2 = "Ontology 2:"
CONTINUED = "continued:"
ENTITY_QUERY = 'Which class/property in ontology 2 is the best match for the {kind} "{name}" of ontology 1?'

INSTRUCTIONS = (MAPPING_OBJECTIVE, COMPLETE_OBJECTIVE, ACCURATE_OBJECTIVE, BEST_MATCH_QUESTION)

TokenEstimator = Callable[[str], int]


def estimate_tokens(text: str) -> int:
    """Rough token count: one token per four characters, rounded up."""
    return math.ceil(len(text) / 4)


class TokenLimitExceeded(AlignError):
    def __init__(self, strategy: str, pair, tokens: int, limit: int, what: str):
        super().__init__(f"{strategy} {pair[0]}-{pair[1]}: {what} needs {tokens} tokens, limit {limit}")
        self.strategy = strategy
        self.pair = tuple(pair)
        self.tokens = tokens
        self.limit = limit


@dataclass(frozen=True)
class TokenBudget:
    max_tokens: int = 8192
    reserve_for_reply: int = 1024

    def __post_init__(self):
        if self.max_tokens <= 0 or self.reserve_for_reply <= 0:
            raise ValueError("token budget values must be positive")
        if self.reserve_for_reply >= self.max_tokens:
            raise ValueError("reserve_for_reply must be smaller than max_tokens")

    @classmethod
    def for_max(cls, max_tokens: int) -> "TokenBudget":
        # keep the default reply reserve unless it would eat the whole window
        return cls(max_tokens, min(1024, max(1, max_tokens // 8)))

    @property
    def message_limit(self) -> int:
        return self.max_tokens - self.reserve_for_reply


@dataclass(frozen=True)
class Strategy:
    id: str
    description: str
    objective_text: str
    layout: str  # "single", "two-step", "split", "per-entity"
    class_order: Order = Order.AS_PARSED
    # single-prompt designs keep their triple message whole
    splittable: bool = True


STRATEGIES: dict[str, Strategy] = {s.id: s for s in (
    Strategy("P1", "All information in a single prompt.", MAPPING_OBJECTIVE, "single", splittable=False),
    Strategy("P2", "Triples first, then a request for a complete matching.",
             COMPLETE_OBJECTIVE, "two-step", splittable=False),
    Strategy("P3", "Triples first, then a request for the most accurate matching.",
             ACCURATE_OBJECTIVE, "two-step", splittable=False),
    Strategy("P4", "Class triples and property triples in two consecutive prompts.",
             MAPPING_OBJECTIVE, "split", Order.CLASSES_THEN_PROPERTIES),
    Strategy("P5", "P4 layout with the most-accurate-matching objective.",
             ACCURATE_OBJECTIVE, "split", Order.CLASSES_THEN_PROPERTIES),
    Strategy("P6", "P4 layout with class triples ordered from the root classes down.",
             MAPPING_OBJECTIVE, "split", Order.ROOT_FIRST),
    Strategy("P7", "Ontologies in separate prompts, then one best-match query per "
             "class/property of ontology 1.", BEST_MATCH_QUESTION, "per-entity"),
)}


def list_strategies() -> list[Strategy]:
    return [STRATEGIES[f"P{i}"] for i in range(1, 8)]


def get_strategy(strategy_id: str) -> Strategy:
    try:
        return STRATEGIES[strategy_id.upper()]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy_id!r}; expected P1..P7") from None


@dataclass(frozen=True)
class Message:
    text: str
    token_estimate: int
    role: str = "user"
    # which ontology each triple line belongs to, in order; used by content checks
    triples: tuple[tuple[int, str], ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class PromptPlan:
    strategy: str
    pair: tuple[str, str]
    messages: tuple[Message, ...]

    @property
    def expects_responses(self) -> int:
        # every user turn gets a reply within one conversation
        return len(self.messages)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "pair": list(self.pair),
            "expects_responses": self.expects_responses,
            "messages": [{"role": m.role, "text": m.text, "token_estimate": m.token_estimate}
                         for m in self.messages],
        }

    def render(self) -> str:
        out = [f"# {self.strategy} {self.pair[0]}-{self.pair[1]} "
               f"({len(self.messages)} messages, {self.expects_responses} responses expected)"]
        for i, m in enumerate(self.messages, 1):
            out.append(f"--- message {i} [{m.role}] ~{m.token_estimate} tokens")
            out.append(m.text)
        return "\n".join(out) + "\n"


# A draft message is a list of (text, ontology index or None) lines.
_Draft = list[tuple[str, Optional[int]]]


def _block(header: str, idx: int, lines) -> _Draft:
    return [(header, None)] + [(line.text, idx) for line in lines]


def _entity_queries(o: Ontology) -> list[str]:
    ordered = [e for e in o.entities if e.kind is Kind.CLASS] + \
              [e for e in o.entities if e.kind is not Kind.CLASS]
    return [ENTITY_QUERY.format(kind=_kind_word(e), name=humanize(e.local)) for e in ordered]


def _kind_word(e: EntityId) -> str:
    return "class" if e.kind is Kind.CLASS else "property"


def build_prompts(strategy: str, a: Ontology, b: Ontology, budget: TokenBudget = TokenBudget(),
                  estimator: TokenEstimator = estimate_tokens,
                  labels: bool = False, force_split: bool = False) -> PromptPlan:
    """Lay out the conversation for ``strategy`` on the pair ``(a, b)``.

    Messages over ``budget.message_limit`` are split at line boundaries into
    consecutive ``continued:`` messages. Single-prompt strategies (P1-P3)
    keep their triple message whole unless ``force_split`` is set, and raise
    :class:`TokenLimitExceeded` instead.
    """
    st = get_strategy(strategy)
    la = a.labels if labels else None
    lb = b.labels if labels else None
    drafts: list[_Draft] = []

    if st.layout in ("single", "two-step"):
        body = [(PROBLEM_DEFINITION, None)]
        body += _block(ONTOLOGY_1, 0, verbalize_ontology(a, Order.AS_PARSED, la))
        body += _block(ONTOLOGY_2, 1, verbalize_ontology(b, Order.AS_PARSED, lb))
        if st.layout == "single":
            drafts.append(body + [(st.objective_text, None)])
        else:
            drafts += [body, [(st.objective_text, None)]]
    elif st.layout == "split":
        va = verbalize_ontology(a, st.class_order, la)
        vb = verbalize_ontology(b, st.class_order, lb)
        cls_a = [v for v in va if isinstance(v.source, SubClass)]
        cls_b = [v for v in vb if isinstance(v.source, SubClass)]
        prop_a = [v for v in va if isinstance(v.source, PropertySignature)]
        prop_b = [v for v in vb if isinstance(v.source, PropertySignature)]
        drafts.append([(PROBLEM_DEFINITION, None)] + _block(ONTOLOGY_1, 0, cls_a) + _block(ONTOLOGY_2, 1, cls_b))
        drafts.append(_block(ONTOLOGY_1, 0, prop_a) + _block(ONTOLOGY_2, 1, prop_b)
                      + [(st.objective_text, None)])
    else:
        drafts.append([(PROBLEM_DEFINITION, None)] + _block(ONTOLOGY_1, 0, verbalize_ontology(a, Order.AS_PARSED, la)))
        drafts.append([(st.objective_text, None)] + _block(ONTOLOGY_2, 1, verbalize_ontology(b, Order.AS_PARSED, lb)))
        drafts += [[(q, None)] for q in _entity_queries(a)]

    limit = budget.message_limit
    pair = (a.name, b.name)
    messages: list[Message] = []
    for draft in drafts:
        messages += _pack(draft, limit, estimator, force_split or st.splittable, st.id, pair)
    return PromptPlan(st.id, pair, tuple(messages))


def _message(lines: _Draft, estimator: TokenEstimator) -> Message:
    text = "\n".join(t for t, _ in lines)
    triples = tuple((idx, t) for t, idx in lines if idx is not None)
    return Message(text, estimator(text), triples=triples)


def _pack(draft: _Draft, limit: int, estimator: TokenEstimator, may_split: bool,
          strategy: str, pair) -> list[Message]:
    whole = _message(draft, estimator)
    if whole.token_estimate <= limit:
        return [whole]
    if not may_split:
        raise TokenLimitExceeded(strategy, pair, whole.token_estimate, limit, "single-prompt message")
    chunks: list[_Draft] = []
    current: _Draft = []
    for line in draft:
        candidate = current + [line]
        if estimator("\n".join(t for t, _ in candidate)) <= limit:
            current = candidate
            continue
        if not current or current == [(CONTINUED, None)]:
            raise TokenLimitExceeded(strategy, pair, estimator(line[0]), limit, "a single line")
        chunks.append(current)
        current = [(CONTINUED, None), line]
        if estimator("\n".join(t for t, _ in current)) > limit:
            raise TokenLimitExceeded(strategy, pair, estimator(line[0]), limit, "a single line")
    if current:
        chunks.append(current)
    return [_message(c, estimator) for c in chunks]

