"""Reading and writing the OAEI Alignment Format (RDF/XML ``Cell`` lists)."""

from __future__ import annotations

import logging
from typing import Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

from .model import Alignment, Correspondence, EntityId, Kind, Ontology, UnresolvedEntity
from .rdfxml import RDF, local_name, parse_xml, rdf_attr

log = logging.getLogger(__name__)

ALIGN_NS = "http://knowledgeweb.semanticweb.org/heterogeneity/alignment#"


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _child(el, name):
    for c in el:
        if _local(c.tag) == name:
            return c
    return None


def _entity_iri(el) -> Optional[str]:
    if el is None:
        return None
    iri = el.get(rdf_attr("resource")) or el.get(rdf_attr("about"))
    if iri:
        return iri.strip()
    return (el.text or "").strip() or None


def lookup_iri(onto: Ontology, iri: str) -> Optional[EntityId]:
    """Find the entity an IRI denotes, by full IRI first, then by fragment."""
    hit = onto.iris.get(iri)
    if hit is not None:
        return hit
    frag = local_name(iri)
    found = [e for e in onto.entities if e.local == frag]
    if not found:
        return None
    # classes first, then object, then data properties
    rank = {Kind.CLASS: 0, Kind.OBJECT_PROPERTY: 1, Kind.DATA_PROPERTY: 2}
    return min(found, key=lambda e: rank[e.kind])


def parse_alignment(document: bytes, onto1: Ontology, onto2: Ontology) -> Alignment:
    root = parse_xml(document)
    corrs = []
    for cell in root.iter():
        if _local(cell.tag) != "Cell":
            continue
        iri1 = _entity_iri(_child(cell, "entity1"))
        iri2 = _entity_iri(_child(cell, "entity2"))
        if iri1 is None or iri2 is None:
            log.warning("Cell without both entities, skipped")
            continue
        rel_el = _child(cell, "relation")
        relation = (rel_el.text or "=").strip() if rel_el is not None else "="
        if relation != "=":
            log.warning("non-equivalence relation %r skipped", relation)
            continue
        measure_el = _child(cell, "measure")
        try:
            measure = float(measure_el.text) if measure_el is not None and measure_el.text else 1.0
        except ValueError:
            measure = 1.0
        measure = min(1.0, max(0.0, measure))

        src, tgt = lookup_iri(onto1, iri1), lookup_iri(onto2, iri2)
        if src is None or tgt is None:
            swapped = lookup_iri(onto1, iri2), lookup_iri(onto2, iri1)
            if swapped[0] is not None and swapped[1] is not None:
                src, tgt = swapped
            else:
                raise UnresolvedEntity(iri1 if src is None else iri2)
        corrs.append(Correspondence(src, tgt, "=", measure))
    return Alignment((onto1.name, onto2.name), tuple(corrs))


def default_iri(entity: EntityId) -> str:
    # conference-track convention, e.g. http://cmt#Paper
    return f"http://{entity.ontology}#{entity.local}"


def _iri_for(entity: EntityId, ontologies: Sequence[Ontology]) -> str:
    for onto in ontologies:
        if onto.name == entity.ontology:
            for iri, e in onto.iris.items():
                if e == entity:
                    return iri
    return default_iri(entity)


def serialize_alignment(al: Alignment, ontologies: Sequence[Ontology] = ()) -> bytes:
    """Render an alignment as Alignment Format XML, one ``Cell`` per correspondence."""
    a, b = al.pair
    out = [
        "<?xml version='1.0' encoding='utf-8' standalone='no'?>",
        f"<rdf:RDF xmlns={quoteattr(ALIGN_NS)}",
        f"         xmlns:rdf={quoteattr(RDF)}",
        "         xmlns:xsd='http://www.w3.org/2001/XMLSchema#'>",
        "<Alignment>",
        "  <xml>yes</xml>",
        "  <level>0</level>",
        "  <type>??</type>",
        f"  <onto1>{escape(a)}</onto1>",
        f"  <onto2>{escape(b)}</onto2>",
    ]
    for c in al.correspondences:
        out += [
            "  <map>",
            "    <Cell>",
            f"      <entity1 rdf:resource={quoteattr(_iri_for(c.source, ontologies))}/>",
            f"      <entity2 rdf:resource={quoteattr(_iri_for(c.target, ontologies))}/>",
            f"      <relation>{escape(c.relation)}</relation>",
            f"      <measure rdf:datatype='http://www.w3.org/2001/XMLSchema#float'>{float(c.confidence)!r}</measure>",
            "    </Cell>",
            "  </map>",
        ]
    out += ["</Alignment>", "</rdf:RDF>", ""]
    return "\n".join(out).encode("utf-8")
