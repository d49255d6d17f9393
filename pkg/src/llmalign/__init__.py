"""Naive LLM-based ontology alignment: ingestion, prompting, extraction and scoring."""

from .alignfmt import parse_alignment, serialize_alignment
from .backend import BackendConfig, ResponseCache, Transcript, complete, mock_respond
from .evaluate import (
    Category,
    DiagnosticsReport,
    EvalResult,
    classify_false_positives,
    evaluate,
    macro_average,
    micro_average,
)
from .extract import ExtractionReport, extract, merge_reports
from .model import (
    Alignment,
    Correspondence,
    EntityId,
    Kind,
    Ontology,
    PropertySignature,
    SubClass,
)
from .ontology import parse_ontology, resolve_name
from .prompts import PromptPlan, TokenBudget, TokenLimitExceeded, build_prompts, estimate_tokens, list_strategies
from .verbalize import Order, humanize, verbalize_ontology, verbalize_statement

__version__ = "0.1.0"

__all__ = [
    "Alignment", "BackendConfig", "Category", "Correspondence", "DiagnosticsReport", "EntityId",
    "EvalResult", "ExtractionReport", "Kind", "Ontology", "Order", "PromptPlan", "PropertySignature",
    "ResponseCache", "SubClass", "TokenBudget", "TokenLimitExceeded", "Transcript", "build_prompts",
    "classify_false_positives", "complete", "estimate_tokens", "evaluate", "extract", "humanize",
    "list_strategies", "macro_average", "merge_reports", "micro_average", "mock_respond",
    "parse_alignment", "parse_ontology", "resolve_name", "serialize_alignment", "verbalize_ontology",
    "verbalize_statement",
]
