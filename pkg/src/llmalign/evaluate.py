"""Precision/recall/F1 against reference alignments, and false-positive diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from .model import (
    AlignError,
    Alignment,
    Correspondence,
    EntityId,
    Kind,
    NotFound,
    Ambiguous,
    Ontology,
    PairMismatch,
)
from .ontology import resolve_name


class EmptyInput(AlignError):
    pass


@dataclass(frozen=True)
class EvalResult:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "tp": self.tp, "fp": self.fp, "fn": self.fn}


@dataclass(frozen=True)
class Scores:
    """Aggregate P/R/F1; also accepted by :func:`macro_average` as an input."""

    precision: float
    recall: float
    f1: float


def _check_pair(x: Alignment, y: Alignment) -> None:
    if tuple(x.pair) != tuple(y.pair):
        raise PairMismatch(f"{x.pair[0]}-{x.pair[1]} vs {y.pair[0]}-{y.pair[1]}")


def evaluate(predicted: Alignment, reference: Alignment) -> EvalResult:
    """Set comparison on (source, target); confidences are ignored here."""
    _check_pair(predicted, reference)
    pred, ref = predicted.keys(), reference.keys()
    return EvalResult(tp=len(pred & ref), fp=len(pred - ref), fn=len(ref - pred))


def macro_average(results: Sequence) -> Scores:
    """Unweighted mean of per-pair P, R and F1, each taken separately."""
    results = list(results)
    if not results:
        raise EmptyInput("macro_average needs at least one result")
    n = len(results)
    return Scores(sum(r.precision for r in results) / n,
                  sum(r.recall for r in results) / n,
                  sum(r.f1 for r in results) / n)


def micro_average(results: Sequence[EvalResult]) -> Scores:
    """P/R/F1 of the pooled confusion counts."""
    results = list(results)
    if not results:
        raise EmptyInput("micro_average needs at least one result")
    pooled = EvalResult(sum(r.tp for r in results), sum(r.fp for r in results),
                        sum(r.fn for r in results))
    return Scores(pooled.precision, pooled.recall, pooled.f1)


# ---------------------------------------------------------------- diagnostics

class Category(str, Enum):
    INVERSE_PROPERTY_SUSPECT = "InversePropertySuspect"
    SUBCLASS_FAN_OUT = "SubclassFanOut"
    HEDGED = "Hedged"
    OTHER = "Other"


@dataclass
class DiagnosticsReport:
    pair: tuple[str, str]
    buckets: dict[Category, list[Correspondence]] = field(
        default_factory=lambda: {c: [] for c in Category})

    def category_of(self, corr: Correspondence) -> Optional[Category]:
        for cat, items in self.buckets.items():
            if corr in items:
                return cat
        return None

    def counts(self) -> dict[str, int]:
        return {c.value: len(v) for c, v in self.buckets.items()}

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "counts": self.counts(),
            "buckets": {c.value: [{"source": x.source.local, "target": x.target.local,
                                   "confidence": x.confidence} for x in items]
                        for c, items in self.buckets.items()},
        }


def _counterparts(x: EntityId, onto_from: Ontology, onto_to: Ontology,
                  links: Iterable[tuple[EntityId, EntityId]]) -> set[EntityId]:
    """Entities of ``onto_to`` that ``x`` is linked to, by any known correspondence
    or by name."""
    out = {t for s, t in links if s == x}
    try:
        out.add(resolve_name(onto_to, x.local, (Kind.CLASS,)))
    except (NotFound, Ambiguous):
        pass
    return out


def _inverse_suspect(c: Correspondence, a: Ontology, b: Ontology,
                     links: list[tuple[EntityId, EntityId]]) -> bool:
    if not (c.source.kind.is_property and c.target.kind.is_property):
        return False
    back = [(t, s) for s, t in links]
    for sa in a.property_signatures(c.source):
        if not isinstance(sa.range, EntityId):
            continue
        dom_img = _counterparts(sa.domain, a, b, links)
        rng_img = _counterparts(sa.range, a, b, links)
        for sb in b.property_signatures(c.target):
            if not isinstance(sb.range, EntityId):
                continue
            # swapped signature: domain maps to the other range and vice versa
            if sb.range in dom_img and sb.domain in rng_img:
                return True
            # same check from b's side, for links only known in that direction
            if sa.range in _counterparts(sb.domain, b, a, back) and \
                    sa.domain in _counterparts(sb.range, b, a, back):
                return True
    return False


def _related(x: EntityId, y: EntityId, onto: Ontology) -> bool:
    """Siblings or descendants under a common named superclass."""
    ax, ay = onto.ancestors(x), onto.ancestors(y)
    return bool(ax & ay) or x in ay or y in ax


def _fan_out(c: Correspondence, predicted: Alignment, a: Ontology, b: Ontology) -> bool:
    if c.source.kind is Kind.CLASS:
        siblings = [p.source for p in predicted.correspondences
                    if p.target == c.target and p.source != c.source and p.source.kind is Kind.CLASS]
        if any(_related(c.source, s, a) for s in siblings):
            return True
    if c.target.kind is Kind.CLASS:
        siblings = [p.target for p in predicted.correspondences
                    if p.source == c.source and p.target != c.target and p.target.kind is Kind.CLASS]
        if any(_related(c.target, t, b) for t in siblings):
            return True
    return False


def classify_false_positives(predicted: Alignment, reference: Alignment,
                             a: Ontology, b: Ontology) -> DiagnosticsReport:
    """Bucket every false positive, first matching category wins:
    inverse-property suspect, subclass fan-out, hedged, other."""
    _check_pair(predicted, reference)
    if (a.name, b.name) != tuple(predicted.pair):
        raise PairMismatch(f"ontologies {a.name}-{b.name} do not match pair {predicted.pair}")
    ref = reference.keys()
    links = sorted(predicted.keys() | ref)
    report = DiagnosticsReport(tuple(predicted.pair))
    for c in predicted.correspondences:
        if c.key in ref:
            continue
        if _inverse_suspect(c, a, b, links):
            cat = Category.INVERSE_PROPERTY_SUSPECT
        elif _fan_out(c, predicted, a, b):
            cat = Category.SUBCLASS_FAN_OUT
        elif c.confidence < 1.0:
            cat = Category.HEDGED
        else:
            cat = Category.OTHER
        report.buckets[cat].append(c)
    return report
