"""Core value types shared by every stage of the pipeline.

All values are immutable once built so they can be handed to worker threads
without copying.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Union


class Kind(str, Enum):
    CLASS = "Class"
    OBJECT_PROPERTY = "ObjectProperty"
    DATA_PROPERTY = "DataProperty"

    @property
    def is_property(self) -> bool:
        return self is not Kind.CLASS


PROPERTY_KINDS = (Kind.OBJECT_PROPERTY, Kind.DATA_PROPERTY)


class AlignError(Exception):
    """Base class for all errors raised by this package."""


class MalformedXml(AlignError):
    pass


class UnresolvedEntity(AlignError):
    def __init__(self, iri: str):
        super().__init__(f"IRI matches neither ontology: {iri}")
        self.iri = iri


class NotFound(AlignError):
    def __init__(self, surface: str):
        super().__init__(f"no entity named {surface!r}")
        self.surface = surface


class Ambiguous(AlignError):
    def __init__(self, surface: str, candidates):
        names = ", ".join(f"{c.local}<{c.kind.value}>" for c in candidates)
        super().__init__(f"{surface!r} is ambiguous: {names}")
        self.surface = surface
        self.candidates = tuple(candidates)


class PairMismatch(AlignError):
    pass


@dataclass(frozen=True, order=True)
class EntityId:
    ontology: str
    local: str
    kind: Kind

    def __post_init__(self):
        if not self.local:
            raise ValueError("entity local name must be non-empty")

    def __str__(self) -> str:
        return f"{self.ontology}:{self.local}"


@dataclass(frozen=True)
class SubClass:
    sub: EntityId
    super: EntityId

    def __post_init__(self):
        if self.sub.kind is not Kind.CLASS or self.super.kind is not Kind.CLASS:
            raise ValueError("SubClass endpoints must both be classes")

    def entities(self) -> tuple[EntityId, ...]:
        return (self.sub, self.super)


@dataclass(frozen=True)
class PropertySignature:
    """``property`` has ``domain`` and ``range``; a data property's range is the
    datatype's local name (a plain ``str``)."""

    property: EntityId
    domain: EntityId
    range: Union[EntityId, str]

    def __post_init__(self):
        if not self.property.kind.is_property:
            raise ValueError("PropertySignature.property must be a property")
        if self.domain.kind is not Kind.CLASS:
            raise ValueError("PropertySignature.domain must be a class")

    def entities(self) -> tuple[EntityId, ...]:
        if isinstance(self.range, EntityId):
            return (self.property, self.domain, self.range)
        return (self.property, self.domain)


Statement = Union[SubClass, PropertySignature]


@dataclass(frozen=True)
class Ontology:
    name: str
    entities: tuple[EntityId, ...]
    statements: tuple[Statement, ...]
    labels: Mapping[EntityId, str] = field(default_factory=dict, compare=False)
    # full IRI -> entity, used when resolving alignment files
    iris: Mapping[str, EntityId] = field(default_factory=dict, compare=False, repr=False)
    skipped: Mapping[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "labels", MappingProxyType(dict(self.labels)))
        object.__setattr__(self, "iris", MappingProxyType(dict(self.iris)))
        object.__setattr__(self, "skipped", MappingProxyType(dict(self.skipped)))
        members = set(self.entities)
        for st in self.statements:
            for e in st.entities():
                if e not in members:
                    raise ValueError(f"statement references undeclared entity {e}")

    def classes(self) -> list[EntityId]:
        return [e for e in self.entities if e.kind is Kind.CLASS]

    def properties(self) -> list[EntityId]:
        return [e for e in self.entities if e.kind.is_property]

    def subclass_statements(self) -> list[SubClass]:
        return [s for s in self.statements if isinstance(s, SubClass)]

    def property_signatures(self, prop: Optional[EntityId] = None) -> list[PropertySignature]:
        return [s for s in self.statements
                if isinstance(s, PropertySignature) and (prop is None or s.property == prop)]

    def ancestors(self, cls: EntityId) -> set[EntityId]:
        """Transitive named superclasses of ``cls`` (excluding ``cls`` unless cyclic)."""
        parents: dict[EntityId, list[EntityId]] = {}
        for st in self.subclass_statements():
            parents.setdefault(st.sub, []).append(st.super)
        seen: set[EntityId] = set()
        stack = list(parents.get(cls, ()))
        while stack:
            p = stack.pop()
            if p in seen:
                continue
            seen.add(p)
            stack.extend(parents.get(p, ()))
        return seen


@dataclass(frozen=True)
class Provenance:
    strategy: str
    line: str


@dataclass(frozen=True)
class Correspondence:
    """An equivalence between ``source`` (ontology 1) and ``target`` (ontology 2).

    Identity is ``(source, target, relation)``; confidence and provenance do
    not take part in equality.
    """

    source: EntityId
    target: EntityId
    relation: str = "="
    confidence: float = field(default=1.0, compare=False)
    provenance: Optional[Provenance] = field(default=None, compare=False)

    def __post_init__(self):
        if self.relation != "=":
            raise ValueError(f"only equivalence is supported, got {self.relation!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of range: {self.confidence}")

    @property
    def key(self) -> tuple[EntityId, EntityId]:
        return (self.source, self.target)


def _sort_key(c: Correspondence):
    return (c.source.local, c.source.kind.value, c.target.local, c.target.kind.value)


def merge_max(corrs: Iterable[Correspondence]) -> list[Correspondence]:
    """Deduplicate by (source, target), keeping the highest-confidence copy."""
    best: dict[tuple[EntityId, EntityId], Correspondence] = {}
    for c in corrs:
        cur = best.get(c.key)
        if cur is None or c.confidence > cur.confidence:
            best[c.key] = c
    return sorted(best.values(), key=_sort_key)


@dataclass(frozen=True)
class Alignment:
    pair: tuple[str, str]
    correspondences: tuple[Correspondence, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pair", tuple(self.pair))
        corrs = tuple(merge_max(self.correspondences))
        a, b = self.pair
        for c in corrs:
            if c.source.ontology != a or c.target.ontology != b:
                raise ValueError(f"correspondence {c.source} = {c.target} outside pair {a}-{b}")
        object.__setattr__(self, "correspondences", corrs)

    def __len__(self) -> int:
        return len(self.correspondences)

    def keys(self) -> set[tuple[EntityId, EntityId]]:
        return {c.key for c in self.correspondences}

    def filter(self, min_confidence: float) -> "Alignment":
        return Alignment(self.pair, tuple(c for c in self.correspondences
                                          if c.confidence >= min_confidence))
