"""Ontology ingestion and surface-name resolution."""

from __future__ import annotations

import logging
from collections import Counter
from pathlib import Path
from typing import Iterable, Optional, Union

from .model import (
    Ambiguous,
    EntityId,
    Kind,
    NotFound,
    Ontology,
    PropertySignature,
    Statement,
    SubClass,
)
from .rdfxml import OWL, RDF, RDFS, XSD, BNode, Literal, local_name, read_triples

log = logging.getLogger(__name__)

_CLASS_TYPES = {OWL + "Class", RDFS + "Class"}
_OBJECT_PROPERTY_TYPES = {OWL + t for t in (
    "ObjectProperty", "InverseFunctionalProperty", "TransitiveProperty",
    "SymmetricProperty", "AsymmetricProperty", "ReflexiveProperty", "IrreflexiveProperty")}
_DATA_PROPERTY_TYPES = {OWL + "DatatypeProperty"}
_UNTYPED_PROPERTY_TYPES = {OWL + "FunctionalProperty", RDF + "Property"}
_TOP = {OWL + "Thing", RDFS + "Resource"}
_BOTTOM = {OWL + "Nothing"}
_HANDLED = {RDF + "type", RDFS + "subClassOf", RDFS + "domain", RDFS + "range", RDFS + "label"}
_DATATYPE_NS = (XSD, RDFS + "Literal", RDF + "PlainLiteral", RDF + "XMLLiteral", RDFS + "Datatype")


def _is_datatype(iri: str) -> bool:
    return iri.startswith(_DATATYPE_NS[0]) or iri in _DATATYPE_NS[1:]


def parse_ontology(document: bytes, name: str) -> Ontology:
    """Build an :class:`Ontology` from RDF/XML bytes.

    Keeps named classes, object and data properties, subclass axioms with a
    named superclass, and domain/range declarations with named operands.
    Everything else is tallied in ``Ontology.skipped``.
    """
    triples = read_triples(document)

    types: dict[str, set[str]] = {}
    for s, p, o in triples:
        if p == RDF + "type" and isinstance(o, str) and not isinstance(s, BNode):
            types.setdefault(s, set()).add(o)

    # declaration order of first appearance, then implicitly referenced classes
    order: dict[str, None] = {}
    has_datatype_range = {s for s, p, o in triples
                          if p == RDFS + "range" and isinstance(o, str)
                          and not isinstance(o, BNode) and _is_datatype(o)}

    def kinds_of(iri: str) -> list[Kind]:
        t = types.get(iri, set())
        out = []
        if t & _CLASS_TYPES:
            out.append(Kind.CLASS)
        if t & _DATA_PROPERTY_TYPES:
            out.append(Kind.DATA_PROPERTY)
        elif t & _OBJECT_PROPERTY_TYPES:
            out.append(Kind.OBJECT_PROPERTY)
        elif t & _UNTYPED_PROPERTY_TYPES:
            out.append(Kind.DATA_PROPERTY if iri in has_datatype_range else Kind.OBJECT_PROPERTY)
        return out

    entities: dict[tuple[str, Kind], EntityId] = {}
    iris: dict[str, EntityId] = {}
    skipped: Counter = Counter()

    def declare(iri: str, kind: Kind) -> Optional[EntityId]:
        if iri in _TOP or iri in _BOTTOM:
            return None
        local = local_name(iri)
        if not local:
            return None
        key = (local, kind)
        if key not in entities:
            entities[key] = EntityId(name, local, kind)
        # a class and a property may share an IRI; the class wins lookups
        if iri not in iris or kind is Kind.CLASS:
            iris[iri] = entities[key]
        return entities[key]

    for s, p, o in triples:
        if p == RDF + "type" and not isinstance(s, BNode):
            order.setdefault(s, None)
    for iri in order:
        for kind in kinds_of(iri):
            declare(iri, kind)

    def as_class(iri) -> Optional[EntityId]:
        if isinstance(iri, (BNode, Literal)):
            return None
        return declare(iri, Kind.CLASS)

    def as_property(iri: str) -> Optional[EntityId]:
        ks = [k for k in kinds_of(iri) if k.is_property]
        if not ks:
            return None
        return declare(iri, ks[0])

    statements: list[Statement] = []
    # properties get their signatures at the position of their first domain/range triple
    sig_slots: dict[str, int] = {}
    domains: dict[str, list] = {}
    ranges: dict[str, list] = {}

    for s, p, o in triples:
        if isinstance(s, BNode):
            continue
        if p == RDFS + "subClassOf":
            if isinstance(o, BNode):
                skipped["anonymous superclass"] += 1
                continue
            if isinstance(o, Literal):
                skipped["literal superclass"] += 1
                continue
            if o in _TOP:
                skipped["subclass of top"] += 1
                continue
            sub, sup = as_class(s), as_class(o)
            if sub is None or sup is None:
                skipped["unnamed subclass operand"] += 1
                continue
            statements.append(SubClass(sub, sup))
        elif p in (RDFS + "domain", RDFS + "range"):
            if s not in sig_slots:
                sig_slots[s] = len(statements)
                statements.append(None)  # placeholder, filled below
            (domains if p == RDFS + "domain" else ranges).setdefault(s, []).append(o)
        elif p == RDF + "type" and isinstance(o, str) and o.startswith(OWL) and o not in (
                _CLASS_TYPES | _OBJECT_PROPERTY_TYPES | _DATA_PROPERTY_TYPES
                | _UNTYPED_PROPERTY_TYPES | {OWL + "Ontology"}):
            skipped[f"type {local_name(o)}"] += 1
        elif p not in _HANDLED and p.startswith(OWL):
            skipped[local_name(p)] += 1

    expanded: dict[int, list[PropertySignature]] = {}
    for iri, slot in sig_slots.items():
        prop = as_property(iri)
        if prop is None:
            skipped["domain/range on non-property"] += 1
            expanded[slot] = []
            continue
        doms = []
        for d in domains.get(iri, []):
            if isinstance(d, (BNode, Literal)):
                skipped["anonymous domain"] += 1
            elif d in _TOP:
                skipped["domain is top"] += 1
            else:
                doms.append(as_class(d))
        rngs: list = []
        for r in ranges.get(iri, []):
            if isinstance(r, (BNode, Literal)):
                skipped["anonymous range"] += 1
            elif r in _TOP:
                skipped["range is top"] += 1
            elif _is_datatype(r):
                rngs.append(local_name(r))
            elif prop.kind is Kind.DATA_PROPERTY:
                rngs.append(local_name(r))
            else:
                rngs.append(as_class(r))
        doms = [d for d in doms if d is not None]
        rngs = [r for r in rngs if r is not None]
        if not doms or not rngs:
            skipped["property without named domain and range"] += 1
        expanded[slot] = [PropertySignature(prop, d, r) for d in doms for r in rngs]

    flat: list[Statement] = []
    for i, st in enumerate(statements):
        if st is None:
            flat.extend(expanded[i])
        else:
            flat.append(st)

    labels: dict[EntityId, str] = {}
    for s, p, o in triples:
        if p == RDFS + "label" and isinstance(o, Literal) and s in iris and iris[s] not in labels:
            if o.value:
                labels[iris[s]] = o.value

    onto = Ontology(
        name=name,
        entities=tuple(entities.values()),
        statements=tuple(_dedupe(flat)),
        labels=labels,
        iris=iris,
        skipped=dict(sorted(skipped.items())),
    )
    if onto.skipped:
        log.debug("%s: skipped %s", name, dict(onto.skipped))
    return onto


def _dedupe(statements: Iterable[Statement]) -> list[Statement]:
    seen = set()
    out = []
    for st in statements:
        if st not in seen:
            seen.add(st)
            out.append(st)
    return out


def load_ontology(path: Union[str, Path], name: Optional[str] = None) -> Ontology:
    path = Path(path)
    return parse_ontology(path.read_bytes(), name or path.stem)


def _fold(text: str) -> str:
    return " ".join(text.split()).casefold()


def resolve_name(onto: Ontology, surface: str, kinds: Optional[Iterable[Kind]] = None) -> EntityId:
    """Map a surface form (as an LLM would write it) back to an entity.

    Stages, first hit wins: exact local name, case-folded local name,
    spaces-to-underscores plus case folding, then the ``rdfs:label``.
    Raises :class:`NotFound` or :class:`Ambiguous` (two hits at one stage).
    """
    surface = surface.strip()
    pool = onto.entities
    if kinds is not None:
        wanted = set(kinds)
        pool = tuple(e for e in pool if e.kind in wanted)
    folded = _fold(surface)
    underscored = "_".join(surface.split()).casefold()
    stages = (
        lambda e: e.local == surface,
        lambda e: e.local.casefold() == surface.casefold(),
        lambda e: e.local.casefold() == underscored,
        lambda e: e in onto.labels and (_fold(onto.labels[e]) == folded
                                        or _fold(onto.labels[e].replace("_", " ")) == folded),
    )
    for hit in stages:
        found = [e for e in pool if hit(e)]
        if len(found) == 1:
            return found[0]
        if len(found) > 1:
            raise Ambiguous(surface, found)
    raise NotFound(surface)
