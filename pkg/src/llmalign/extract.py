"""Turn free-text model answers into correspondences.

Accepted line shapes (optionally numbered or bulleted)::

    X = Y
    X <-> Y
    X matches Y
    pred1 (A, B) = pred2 (C, D)

Names are resolved against ontology 1 then ontology 2, trying the swapped
orientation once. Lines that cannot be resolved are kept in
``ExtractionReport.unresolved`` rather than dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .model import (
    PROPERTY_KINDS,
    Ambiguous,
    Correspondence,
    EntityId,
    Kind,
    NotFound,
    Ontology,
    PairMismatch,
    Provenance,
    merge_max,
)
from .ontology import resolve_name

HEDGE_MARKERS = (
    "unlikely",
    "not a direct match",
    "no direct equivalent",
    "possible match",
    "not an exact match",
    "partial match",
    "uncertain",
)
HEDGED_CONFIDENCE = 0.5

_BULLET = re.compile(r"^\s*(?:\(?\d+[.)]|[-*•+])\s+")
_NO_MATCH = re.compile(
    r"\bno (?:match|matching|equivalent|counterpart|corresponding)\b|^none\b|[=:]\s*(?:none|n/a)\b",
    re.IGNORECASE)
_SEP = r"(?:<->|↔|⟷|==|=|\s+matches(?:\s+with)?\s+)"
_SIGNATURE = re.compile(
    r"^(?P<p1>[^()=]+?)\s*\((?P<a1>[^()]*)\)\s*" + _SEP + r"\s*(?P<p2>[^()=]+?)\s*\((?P<a2>[^()]*)\)")
_PLAIN = re.compile(r"^(?P<x>.+?)\s*" + _SEP + r"\s*(?P<y>.+)$")
_ONTO_PREFIX = re.compile(r"^(?:ontology\s*[12]|onto\s*[12]|o[12])\s*[:.]\s*", re.IGNORECASE)
_NS_PREFIX = re.compile(r"^[A-Za-z][\w-]*:(?=\S)")
_TAIL = re.compile(r"\s*(?:\(|\s-\s|\s–\s|\s—\s|:\s|;|,|\s+because\b|\s+since\b).*$")


@dataclass
class ExtractionReport:
    pair: Optional[tuple[str, str]] = None
    correspondences: list[Correspondence] = field(default_factory=list)
    unresolved: list[dict] = field(default_factory=list)
    hedged_lines: list[str] = field(default_factory=list)

    @property
    def hedged_count(self) -> int:
        return len(self.hedged_lines)

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair) if self.pair else None,
            "hedged_count": self.hedged_count,
            "hedged_lines": list(self.hedged_lines),
            "correspondences": [
                {"source": c.source.local, "source_kind": c.source.kind.value,
                 "target": c.target.local, "target_kind": c.target.kind.value,
                 "relation": c.relation, "confidence": c.confidence,
                 "strategy": c.provenance.strategy if c.provenance else None,
                 "line": c.provenance.line if c.provenance else None}
                for c in self.correspondences],
            "unresolved": list(self.unresolved),
        }


def _clean(name: str, cut_tail: bool = True) -> str:
    name = name.strip().replace("**", "").replace("`", "")
    name = _ONTO_PREFIX.sub("", name)
    name = _NS_PREFIX.sub("", name)
    if cut_tail:
        name = _TAIL.sub("", name)
    return name.strip().strip("\"'“”").rstrip(".;,!").strip()


def _candidate(line: str) -> Optional[tuple[str, str, bool]]:
    """(left name, right name, names-are-properties) for a matching line."""
    m = _SIGNATURE.match(line)
    if m:
        p1, p2 = _clean(m["p1"], False), _clean(m["p2"], False)
        if p1.casefold() == "is-a" and p2.casefold() == "is-a":
            # class axioms on both sides: the subjects are what is being matched
            return _clean(m["a1"].split(",")[0]), _clean(m["a2"].split(",")[0]), False
        return p1, p2, True
    m = _PLAIN.match(line)
    if m:
        return _clean(m["x"]), _clean(m["y"]), False
    return None


def _resolve(onto: Ontology, name: str, properties: bool) -> EntityId:
    if properties:
        try:
            return resolve_name(onto, name, PROPERTY_KINDS)
        except NotFound:
            pass
    try:
        return resolve_name(onto, name)
    except Ambiguous:
        return resolve_name(onto, name, (Kind.CLASS,))


def _resolve_pair(a: Ontology, b: Ontology, x: str, y: str, properties: bool):
    try:
        return _resolve(a, x, properties), _resolve(b, y, properties)
    except (NotFound, Ambiguous) as first:
        try:
            src, tgt = _resolve(a, y, properties), _resolve(b, x, properties)
            return src, tgt
        except (NotFound, Ambiguous):
            raise first from None


def extract(response: str, a: Ontology, b: Ontology, strategy: str) -> ExtractionReport:
    report = ExtractionReport(pair=(a.name, b.name))
    found: list[Correspondence] = []
    for raw in response.splitlines():
        line = _BULLET.sub("", raw.strip()).strip()
        if not line:
            continue
        if _NO_MATCH.search(line):
            continue
        cand = _candidate(line)
        if cand is None:
            continue
        x, y, properties = cand
        lowered = line.casefold()
        hedged = any(h in lowered for h in HEDGE_MARKERS)
        if hedged and raw.strip() not in report.hedged_lines:
            report.hedged_lines.append(raw.strip())
        if not x or not y:
            report.unresolved.append({"line": raw.strip(), "reason": "empty name"})
            continue
        try:
            src, tgt = _resolve_pair(a, b, x, y, properties)
        except NotFound as exc:
            report.unresolved.append({"line": raw.strip(), "reason": f"unknown entity: {exc.surface}"})
            continue
        except Ambiguous as exc:
            report.unresolved.append({"line": raw.strip(), "reason": f"ambiguous: {exc}"})
            continue
        found.append(Correspondence(src, tgt, "=", HEDGED_CONFIDENCE if hedged else 1.0,
                                    Provenance(strategy, raw.strip())))
    report.correspondences = merge_max(found)
    return report


def merge_reports(reports: Sequence[ExtractionReport]) -> ExtractionReport:
    """Union of correspondences (max confidence wins), concatenated unresolved lines."""
    if not reports:
        return ExtractionReport()
    pairs = {r.pair for r in reports if r.pair is not None}
    if len(pairs) > 1:
        raise PairMismatch(f"reports cover different pairs: {sorted(pairs)}")
    merged = ExtractionReport(pair=next(iter(pairs), None))
    merged.correspondences = merge_max(c for r in reports for c in r.correspondences)
    # order-preserving de-duplication keeps merge_reports([r, r]) == r
    for r in reports:
        merged.unresolved += [u for u in r.unresolved if u not in merged.unresolved]
        merged.hedged_lines += [h for h in r.hedged_lines if h not in merged.hedged_lines]
    return merged


def extract_all(responses: Iterable[str], a: Ontology, b: Ontology, strategy: str) -> ExtractionReport:
    return merge_reports([extract(r, a, b, strategy) for r in responses])
