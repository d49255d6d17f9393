"""Render statements as ``Predicate (Subject, Object)`` lines."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional

from .model import EntityId, Ontology, PropertySignature, Statement, SubClass

log = logging.getLogger(__name__)

SUBCLASS_PREDICATE = "Is-a"


class Order(str, Enum):
    AS_PARSED = "as-parsed"
    ROOT_FIRST = "root-first"
    CLASSES_THEN_PROPERTIES = "classes-then-properties"


@dataclass(frozen=True)
class VerbalizedLine:
    text: str
    source: Statement

    def __str__(self) -> str:
        return self.text


def humanize(local: str) -> str:
    """``conference_part`` -> ``conference part``; casing is left alone."""
    return " ".join(local.replace("_", " ").split())


def _operand(e, labels: Optional[Mapping[EntityId, str]]) -> str:
    if isinstance(e, str):
        return humanize(e)
    if labels and e in labels:
        return humanize(labels[e])
    return humanize(e.local)


def verbalize_statement(s: Statement, labels: Optional[Mapping[EntityId, str]] = None) -> VerbalizedLine:
    if isinstance(s, SubClass):
        text = f"{SUBCLASS_PREDICATE} ({_operand(s.sub, labels)}, {_operand(s.super, labels)})"
    elif isinstance(s, PropertySignature):
        text = f"{s.property.local} ({_operand(s.domain, labels)}, {_operand(s.range, labels)})"
    else:
        raise TypeError(f"not a statement: {s!r}")
    return VerbalizedLine(text, s)


def root_first(statements: list[SubClass]) -> list[SubClass]:
    """Breadth-first from the classes that are never a subclass.

    Falls back to input order when the subclass graph has a cycle that the
    traversal cannot reach.
    """
    children: dict[EntityId, list[SubClass]] = {}
    subs = set()
    first_seen: dict[EntityId, None] = {}
    for st in statements:
        children.setdefault(st.super, []).append(st)
        subs.add(st.sub)
        first_seen.setdefault(st.sub, None)
        first_seen.setdefault(st.super, None)
    roots = [c for c in first_seen if c not in subs]

    out: list[SubClass] = []
    emitted = set()
    visited = set(roots)
    queue = deque(roots)
    while queue:
        node = queue.popleft()
        for st in children.get(node, ()):
            if st in emitted:
                continue
            emitted.add(st)
            out.append(st)
            if st.sub not in visited:
                visited.add(st.sub)
                queue.append(st.sub)
    if len(out) != len(statements):
        log.warning("subclass cycle detected; keeping parse order for root-first ordering")
        return list(statements)
    return out


def order_statements(o: Ontology, order: Order = Order.AS_PARSED) -> list[Statement]:
    order = Order(order)
    if order is Order.AS_PARSED:
        return list(o.statements)
    classes = o.subclass_statements()
    props = [s for s in o.statements if isinstance(s, PropertySignature)]
    if order is Order.ROOT_FIRST:
        return [*root_first(classes), *props]
    return [*classes, *props]


def verbalize_ontology(o: Ontology, order: Order = Order.AS_PARSED,
                       labels: Optional[Mapping[EntityId, str]] = None) -> list[VerbalizedLine]:
    return [verbalize_statement(s, labels) for s in order_statements(o, order)]
