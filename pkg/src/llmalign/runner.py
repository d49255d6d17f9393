"""Runs the (pair x strategy) grid and writes transcripts, alignments and reports."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import plotting
from .alignfmt import serialize_alignment
from .backend import BackendConfig, ResponseCache, complete, make_backend
from .corpus import CONFERENCE_PAIRS, Corpus, CorpusMissing, pair_name
from .evaluate import EvalResult, classify_false_positives, evaluate, macro_average, micro_average
from .extract import extract_all
from .model import AlignError, Alignment
from .prompts import TokenBudget, TokenLimitExceeded, build_prompts, list_strategies

log = logging.getLogger(__name__)

OK, TOKEN_LIMIT, ERROR = "ok", "token-limit", "error"
CSV_HEADER = ["pair", "strategy", "precision", "recall", "f1", "tp", "fp", "fn"]


@dataclass
class RunConfig:
    corpus: Path
    out: Path = Path("runs")
    pairs: Sequence[tuple[str, str]] = CONFERENCE_PAIRS
    strategies: Sequence[str] = tuple(s.id for s in list_strategies())
    backend: BackendConfig = field(default_factory=BackendConfig)
    budget: TokenBudget = field(default_factory=TokenBudget)
    min_confidence: float = 0.0
    workers: int = 4
    cache_dir: Optional[Path] = None
    use_labels: bool = False
    force_split: bool = False
    aggregate: str = "macro"
    figures: bool = True

    def __post_init__(self):
        self.corpus = Path(self.corpus)
        self.out = Path(self.out)
        self.pairs = [tuple(p) for p in self.pairs]
        self.strategies = [s.upper() for s in self.strategies]
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ValueError("min_confidence must lie in [0, 1]")
        if self.aggregate not in ("macro", "micro"):
            raise ValueError("aggregate must be 'macro' or 'micro'")
        known = {s.id for s in list_strategies()}
        bad = [s for s in self.strategies if s not in known]
        if bad:
            raise ValueError(f"unknown strategies: {bad}")


@dataclass
class CellOutcome:
    pair: tuple[str, str]
    strategy: str
    status: str
    result: Optional[EvalResult] = None
    diagnostics: Optional[dict] = None
    message: str = ""


@dataclass
class ExperimentResult:
    cells: list[CellOutcome]
    out: Path

    @property
    def exit_status(self) -> int:
        return 1 if any(c.status == ERROR for c in self.cells) else 0

    def cell(self, pair, strategy) -> CellOutcome:
        for c in self.cells:
            if c.pair == tuple(pair) and c.strategy == strategy:
                return c
        raise KeyError((pair, strategy))


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=False) + "\n",
                    encoding="utf-8")


def run_cell(corpus: Corpus, pair, strategy: str, cfg: RunConfig, backend, cache) -> CellOutcome:
    """One grid cell: plan, converse, extract, score, diagnose."""
    cell_dir = cfg.out / "runs" / strategy / pair_name(pair)
    try:
        a, b = corpus.ontology(pair[0]), corpus.ontology(pair[1])
        reference = corpus.reference(pair)
        try:
            plan = build_prompts(strategy, a, b, cfg.budget,
                                 labels=cfg.use_labels, force_split=cfg.force_split)
        except TokenLimitExceeded as exc:
            log.info("%s: %s", pair_name(pair), exc)
            _write_json(cell_dir / "status.json", {"status": TOKEN_LIMIT, "message": str(exc)})
            return CellOutcome(tuple(pair), strategy, TOKEN_LIMIT, message=str(exc))
        transcript = complete(plan, cfg.backend, cache, backend)
        report = extract_all(transcript.responses, a, b, strategy)
        predicted = Alignment(tuple(pair), tuple(report.correspondences)).filter(cfg.min_confidence)
        result = evaluate(predicted, reference)
        diagnostics = classify_false_positives(predicted, reference, a, b).to_dict()

        _write_json(cell_dir / "plan.json", plan.to_dict())
        _write_json(cell_dir / "transcript.json", transcript.to_dict())
        _write_json(cell_dir / "extraction.json", report.to_dict())
        (cell_dir / "alignment.rdf").write_bytes(serialize_alignment(predicted, (a, b)))
        _write_json(cell_dir / "diagnostics.json", diagnostics)
        _write_json(cell_dir / "status.json", {"status": OK, **result.as_dict()})
        return CellOutcome(tuple(pair), strategy, OK, result, diagnostics)
    except (AlignError, OSError, ValueError) as exc:
        log.error("%s %s failed: %s", pair_name(pair), strategy, exc)
        try:
            _write_json(cell_dir / "status.json", {"status": ERROR, "message": str(exc)})
        except OSError:
            pass
        return CellOutcome(tuple(pair), strategy, ERROR, message=f"{type(exc).__name__}: {exc}")


def run_experiment(cfg: RunConfig, backend=None) -> ExperimentResult:
    """Run every (pair, strategy) cell and write the aggregate reports.

    Raises :class:`CorpusMissing` before anything is written when the corpus
    is absent or incomplete.
    """
    corpus = Corpus(cfg.corpus)
    corpus.check(cfg.pairs)
    for name in sorted({n for p in cfg.pairs for n in p}):
        corpus.ontology(name)

    cfg.out.mkdir(parents=True, exist_ok=True)
    cache = ResponseCache(cfg.cache_dir or cfg.out / "cache")
    backend = backend or make_backend(cfg.backend)
    jobs = [(pair, s) for pair in cfg.pairs for s in cfg.strategies]
    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        cells = list(pool.map(lambda job: run_cell(corpus, job[0], job[1], cfg, backend, cache), jobs))

    write_reports(cells, cfg)
    return ExperimentResult(cells, cfg.out)


# ---------------------------------------------------------------- reports

def _fmt(x: float) -> str:
    return f"{x:.3f}"


def aggregate_scores(cells: Sequence[CellOutcome], strategy: str, how: str = "macro"):
    results = [c.result for c in cells if c.strategy == strategy and c.status == OK]
    if not results:
        return None
    return (macro_average if how == "macro" else micro_average)(results)


def render_csv(cells: Sequence[CellOutcome]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in cells:
        if c.status == OK:
            r = c.result
            w.writerow([pair_name(c.pair), c.strategy, f"{r.precision:.6f}", f"{r.recall:.6f}",
                        f"{r.f1:.6f}", r.tp, r.fp, r.fn])
        else:
            w.writerow([pair_name(c.pair), c.strategy] + ["-"] * 6)
    return buf.getvalue()


def render_markdown(cells: Sequence[CellOutcome], pairs, strategies, how: str = "macro") -> str:
    """Per-pair table with one P/R/F1 column group per strategy and an average row."""
    by_key = {(c.pair, c.strategy): c for c in cells}
    head = ["Dataset"] + [f"{s} {m}" for s in strategies for m in ("P", "R", "F1")]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for pair in pairs:
        row = [pair_name(pair)]
        for s in strategies:
            c = by_key.get((tuple(pair), s))
            if c is not None and c.status == OK:
                row += [_fmt(c.result.precision), _fmt(c.result.recall), _fmt(c.result.f1)]
            else:
                row += ["-"] * 3
        lines.append("| " + " | ".join(row) + " |")
    avg = ["Average"]
    for s in strategies:
        sc = aggregate_scores(cells, s, how)
        avg += ["-"] * 3 if sc is None else [_fmt(sc.precision), _fmt(sc.recall), _fmt(sc.f1)]
    lines.append("| " + " | ".join(avg) + " |")

    notes = []
    for s in strategies:
        limited = [pair_name(c.pair) for c in cells if c.strategy == s and c.status == TOKEN_LIMIT]
        failed = [pair_name(c.pair) for c in cells if c.strategy == s and c.status == ERROR]
        if limited:
            notes.append(f"- {s}: token input limit exceeded for {', '.join(limited)}")
        if failed:
            notes.append(f"- {s}: run failed for {', '.join(failed)}")
    out = "\n".join(lines) + "\n"
    label = "Macro" if how == "macro" else "Micro"
    out += f"\n{label}-averaged over completed pairs only. Cells marked with a dash (-) could not be completed"
    out += " and are excluded from the averages.\n"
    if notes:
        out += "\n" + "\n".join(notes) + "\n"
    return out


def diagnostics_summary(cells: Sequence[CellOutcome]) -> dict:
    summary: dict = {}
    for c in cells:
        if c.status != OK:
            continue
        per = summary.setdefault(c.strategy, {})
        for cat, n in c.diagnostics["counts"].items():
            per[cat] = per.get(cat, 0) + n
    return summary


def write_reports(cells: Sequence[CellOutcome], cfg: RunConfig) -> None:
    order = {tuple(p): i for i, p in enumerate(cfg.pairs)}
    sorder = {s: i for i, s in enumerate(cfg.strategies)}
    cells = sorted(cells, key=lambda c: (order[c.pair], sorder[c.strategy]))
    (cfg.out / "report.csv").write_text(render_csv(cells), encoding="utf-8")
    (cfg.out / "report.md").write_text(
        render_markdown(cells, cfg.pairs, cfg.strategies, cfg.aggregate), encoding="utf-8")
    _write_json(cfg.out / "diagnostics.json", diagnostics_summary(cells))
    if cfg.figures:
        averages = {}
        for s in cfg.strategies:
            sc = aggregate_scores(cells, s, cfg.aggregate)
            averages[s] = None if sc is None else (sc.precision, sc.recall, sc.f1)
        plotting.plot_strategy_summary(averages, cfg.out / "figures" / "strategy_summary.png")
        plotting.plot_f1_grid([pair_name(p) for p in cfg.pairs], cfg.strategies,
                              {(pair_name(c.pair), c.strategy): c.result.f1
                               for c in cells if c.status == OK},
                              cfg.out / "figures" / "f1_grid.png")


__all__ = ["CorpusMissing", "ExperimentResult", "RunConfig", "run_cell", "run_experiment"]
