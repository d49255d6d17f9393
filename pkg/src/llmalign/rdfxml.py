"""A small RDF/XML reader covering the striped syntax used by OWL files.

Only what is needed to recover triples from hand-written or Protégé-exported
ontologies is handled: node elements (typed or ``rdf:Description``),
``rdf:about``/``rdf:ID``/``rdf:nodeID`` subjects, ``rdf:resource`` objects,
nested node elements, ``rdf:parseType`` Resource/Collection/Literal and
``xml:base``. Reification and ``rdf:li`` are ignored.
"""

from __future__ import annotations

import itertools
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Optional, Union
from urllib.parse import urljoin

from .model import MalformedXml

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
XSD = "http://www.w3.org/2001/XMLSchema#"
XML_BASE = "{http://www.w3.org/XML/1998/namespace}base"
XML_LANG = "{http://www.w3.org/XML/1998/namespace}lang"



def rdf_attr(name: str) -> str:
    """ElementTree key of an ``rdf:`` attribute."""
    return "{%s}%s" % (RDF, name)


_SYNTAX_ATTRS = {rdf_attr(n) for n in ("about", "ID", "nodeID", "resource", "parseType", "datatype")}


class BNode(str):
    """Blank node label."""


@dataclass(frozen=True)
class Literal:
    value: str
    datatype: Optional[str] = None
    lang: Optional[str] = None


Term = Union[str, BNode, Literal]
Triple = tuple[str, str, Term]


def _iri(tag: str) -> str:
    # ElementTree encodes {ns}local; the RDF predicate IRI is ns+local
    if tag.startswith("{"):
        ns, local = tag[1:].split("}", 1)
        return ns + local
    return tag


def parse_xml(document: bytes) -> ET.Element:
    try:
        return ET.fromstring(document)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc


class _Reader:
    def __init__(self):
        self.triples: list[Triple] = []
        self._ids = itertools.count()

    def bnode(self) -> BNode:
        return BNode(f"_:b{next(self._ids)}")

    def node(self, el: ET.Element, base: str) -> Term:
        base = _resolve(base, el.get(XML_BASE)) if el.get(XML_BASE) else base
        if el.get(rdf_attr("about")) is not None:
            subject: Term = _resolve(base, el.get(rdf_attr("about")))
        elif el.get(rdf_attr("ID")) is not None:
            subject = _resolve(base, "#" + el.get(rdf_attr("ID")))
        elif el.get(rdf_attr("nodeID")) is not None:
            subject = BNode("_:" + el.get(rdf_attr("nodeID")))
        else:
            subject = self.bnode()

        tag = _iri(el.tag)
        if tag != RDF + "Description":
            self.triples.append((subject, RDF + "type", tag))
        for attr, value in el.attrib.items():
            if attr in _SYNTAX_ATTRS or attr.startswith("{http://www.w3.org/XML/1998/namespace}"):
                continue
            pred = _iri(attr)
            if pred == RDF + "type":
                self.triples.append((subject, pred, _resolve(base, value)))
            else:
                self.triples.append((subject, pred, Literal(value)))
        for child in el:
            self.property(subject, child, base)
        return subject

    def property(self, subject: Term, el: ET.Element, base: str) -> None:
        base = _resolve(base, el.get(XML_BASE)) if el.get(XML_BASE) else base
        pred = _iri(el.tag)
        if pred == RDF + "li":
            return
        parse_type = el.get(rdf_attr("parseType"))
        if el.get(rdf_attr("resource")) is not None:
            self.triples.append((subject, pred, _resolve(base, el.get(rdf_attr("resource")))))
        elif el.get(rdf_attr("nodeID")) is not None:
            self.triples.append((subject, pred, BNode("_:" + el.get(rdf_attr("nodeID")))))
        elif parse_type == "Resource":
            obj = self.bnode()
            self.triples.append((subject, pred, obj))
            for child in el:
                self.property(obj, child, base)
        elif parse_type == "Collection":
            items = [self.node(child, base) for child in el]
            self.triples.append((subject, pred, self._collection(items)))
        elif parse_type == "Literal":
            inner = "".join(ET.tostring(c, encoding="unicode") for c in el)
            self.triples.append((subject, pred, Literal((el.text or "") + inner, RDF + "XMLLiteral")))
        elif len(el):
            self.triples.append((subject, pred, self.node(el[0], base)))
        else:
            dt = el.get(rdf_attr("datatype"))
            self.triples.append((subject, pred, Literal(
                (el.text or "").strip(), _resolve(base, dt) if dt else None, el.get(XML_LANG))))

    def _collection(self, items: list[Term]) -> Term:
        head: Term = RDF + "nil"
        for item in reversed(items):
            cell = self.bnode()
            self.triples.append((cell, RDF + "first", item))
            self.triples.append((cell, RDF + "rest", head))
            head = cell
        return head


def _resolve(base: str, ref: str) -> str:
    if not base or ":" in ref.split("#", 1)[0]:
        return ref
    if ref.startswith("#"):
        return base.split("#", 1)[0] + ref
    return urljoin(base, ref)


def read_triples(document: bytes) -> list[Triple]:
    """Parse an RDF/XML document into triples, in document order."""
    root = parse_xml(document)
    reader = _Reader()
    base = root.get(XML_BASE) or ""
    if _iri(root.tag) == RDF + "RDF":
        for child in root:
            reader.node(child, base)
    else:
        reader.node(root, base)
    return reader.triples


def local_name(iri: str) -> str:
    for sep in ("#", "/", ":"):
        if sep in iri:
            tail = iri.rsplit(sep, 1)[1]
            if tail:
                return tail
    return iri

