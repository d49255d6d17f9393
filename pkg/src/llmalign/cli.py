"""Command line entry point: ``llmalign <subcommand> ...``.

Exit codes: 0 success, 1 some grid cells failed, 2 configuration or corpus
error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .alignfmt import parse_alignment, serialize_alignment
from .backend import BackendConfig, ResponseCache, complete, make_backend
from .corpus import DEFAULT_URL, Corpus, fetch_corpus, pair_name, parse_pair
from .evaluate import classify_false_positives, evaluate
from .extract import extract_all
from .model import AlignError, Alignment
from .ontology import load_ontology
from .prompts import TokenBudget, build_prompts
from .runner import RunConfig, run_experiment
from .verbalize import Order, verbalize_ontology

log = logging.getLogger("llmalign")

DEFAULTS = {
    "corpus": "corpus",
    "out": "runs",
    "backend": "mock",
    "endpoint": "",
    "model": None,
    "temperature": 0.0,
    "timeout": 120.0,
    "max_retries": 3,
    "max_in_flight": 2,
    "api_key_env": "OPENAI_API_KEY",
    "budget": 8192,
    "reserve": None,
    "min_confidence": 0.0,
    "workers": 4,
    "cache_dir": None,
    "use_labels": False,
    "force_split": False,
    "aggregate": "macro",
    "figures": True,
    "pairs": None,
    "strategies": None,
}


class ConfigError(Exception):
    pass


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    S = argparse.SUPPRESS
    g.add_argument("--config", default=S, help="JSON file of settings; flags override it")
    g.add_argument("--backend", choices=("mock", "remote"), default=S)
    g.add_argument("--endpoint", default=S, help="base URL of an OpenAI-compatible API")
    g.add_argument("--model", default=S)
    g.add_argument("--temperature", type=float, default=S)
    g.add_argument("--budget", type=int, default=S, help="context window in tokens (default 8192)")
    g.add_argument("--reserve", type=int, default=S, help="tokens kept free for the reply")
    g.add_argument("--min-confidence", dest="min_confidence", type=float, default=S)
    g.add_argument("--out", default=S, help="output directory")
    g.add_argument("--workers", type=int, default=S)
    g.add_argument("--corpus", default=S, help="corpus directory (see `fetch`)")
    g.add_argument("--cache-dir", dest="cache_dir", default=S)
    g.add_argument("--labels", dest="use_labels", action="store_true", default=S,
                   help="verbalize classes by rdfs:label where present")
    g.add_argument("-v", "--verbose", action="count", default=S)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="llmalign", parents=[common],
                                     description="Naive LLM ontology alignment experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", parents=[common], help="download or unpack the conference track")
    p.add_argument("source", nargs="?", default=DEFAULT_URL, help="URL, archive or directory")
    p.add_argument("--dest", default=None, help="target directory (default: --corpus)")

    p = sub.add_parser("ingest", parents=[common], help="parse one ontology and summarise it")
    p.add_argument("file")
    p.add_argument("--name", default=None)

    p = sub.add_parser("verbalize", parents=[common], help="print one line per statement")
    p.add_argument("file")
    p.add_argument("--order", choices=[o.value for o in Order], default=Order.AS_PARSED.value)
    p.add_argument("-o", "--output", default=None)

    p = sub.add_parser("plan", parents=[common], help="show the prompt plan for one pair")
    p.add_argument("--strategy", required=True)
    p.add_argument("--pair", required=True, help="e.g. cmt,sigkdd")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("match", parents=[common], help="run one strategy on one pair")
    p.add_argument("--strategy", required=True)
    p.add_argument("--pair", required=True)
    p.add_argument("-o", "--output", default=None, help="alignment XML file (default stdout)")
    p.add_argument("--dump-extraction", default=None, help="write the extraction report as JSON")

    p = sub.add_parser("eval", parents=[common], help="score an alignment file against the reference")
    p.add_argument("predicted")
    p.add_argument("--pair", required=True)
    p.add_argument("--reference", default=None)

    p = sub.add_parser("diagnose", parents=[common], help="classify false positives of an alignment")
    p.add_argument("predicted")
    p.add_argument("--pair", required=True)
    p.add_argument("--reference", default=None)

    p = sub.add_parser("report", parents=[common], help="run the full pair x strategy grid")
    p.add_argument("--pairs", default=S, help="comma-separated pairs, e.g. cmt-sigkdd,cmt-edas")
    p.add_argument("--strategies", default=S, help="comma-separated ids, e.g. P1,P7")
    p.add_argument("--micro", dest="aggregate", action="store_const", const="micro", default=S,
                   help="pool counts instead of averaging per pair")
    p.add_argument("--force-split", dest="force_split", action="store_true", default=S,
                   help="let single-prompt strategies split oversized messages too")
    p.add_argument("--no-figures", dest="figures", action="store_false", default=S)
    return parser


def load_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            data = json.loads(path.read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        settings.update(data)
    for key in DEFAULTS:
        if hasattr(args, key):
            settings[key] = getattr(args, key)
    return settings


def _listify(value):
    if value is None or isinstance(value, list):
        return value
    return [v for v in str(value).split(",") if v.strip()]


def backend_config(s: dict) -> BackendConfig:
    model = s["model"] or ("mock-stringequiv" if s["backend"] == "mock" else "")
    try:
        return BackendConfig(kind=s["backend"], endpoint=s["endpoint"] or "", model=model,
                             temperature=float(s["temperature"]), timeout=float(s["timeout"]),
                             max_retries=int(s["max_retries"]), max_in_flight=int(s["max_in_flight"]),
                             api_key_env=s["api_key_env"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def token_budget(s: dict) -> TokenBudget:
    try:
        if s["reserve"] is None:
            return TokenBudget.for_max(int(s["budget"]))
        return TokenBudget(int(s["budget"]), int(s["reserve"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def run_config(s: dict) -> RunConfig:
    kwargs = dict(
        corpus=Path(s["corpus"]), out=Path(s["out"]), backend=backend_config(s), budget=token_budget(s),
        min_confidence=float(s["min_confidence"]), workers=int(s["workers"]),
        cache_dir=Path(s["cache_dir"]) if s["cache_dir"] else None, use_labels=bool(s["use_labels"]),
        force_split=bool(s["force_split"]), aggregate=s["aggregate"], figures=bool(s["figures"]))
    pairs = _listify(s["pairs"])
    if pairs:
        kwargs["pairs"] = [parse_pair(p) for p in pairs]
    strategies = _listify(s["strategies"])
    if strategies:
        kwargs["strategies"] = [x.strip() for x in strategies]
    try:
        return RunConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _pair_ontologies(s: dict, pair_text: str):
    corpus = Corpus(s["corpus"])
    pair = parse_pair(pair_text)
    return corpus, pair, corpus.ontology(pair[0]), corpus.ontology(pair[1])


def _reference(corpus: Corpus, pair, a, b, path):
    if path:
        return parse_alignment(Path(path).read_bytes(), a, b)
    return corpus.reference(pair)


def _emit(text: str, output) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(getattr(args, "verbose", 0) or 0, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        s = load_settings(args)
        return _dispatch(args, s)
    except (ConfigError, AlignError, OSError, ValueError) as exc:
        print(f"llmalign: error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args, s: dict) -> int:
    cmd = args.command
    if cmd == "fetch":
        dest = fetch_corpus(args.source, args.dest or s["corpus"])
        print(dest)
        return 0

    if cmd == "ingest":
        onto = load_ontology(args.file, args.name)
        summary = {
            "name": onto.name,
            "classes": len(onto.classes()),
            "object_properties": sum(e.kind.value == "ObjectProperty" for e in onto.entities),
            "data_properties": sum(e.kind.value == "DataProperty" for e in onto.entities),
            "statements": len(onto.statements),
            "skipped": dict(onto.skipped),
        }
        print(json.dumps(summary, indent=2))
        return 0

    if cmd == "verbalize":
        onto = load_ontology(args.file)
        lines = verbalize_ontology(onto, Order(args.order), onto.labels if s["use_labels"] else None)
        _emit("".join(f"{line.text}\n" for line in lines), args.output)
        return 0

    if cmd == "plan":
        _, pair, a, b = _pair_ontologies(s, args.pair)
        plan = build_prompts(args.strategy, a, b, token_budget(s), labels=bool(s["use_labels"]))
        if args.format == "json":
            print(json.dumps(plan.to_dict(), indent=2, ensure_ascii=False))
        else:
            sys.stdout.write(plan.render())
        return 0

    if cmd == "match":
        corpus, pair, a, b = _pair_ontologies(s, args.pair)
        cfg = backend_config(s)
        plan = build_prompts(args.strategy, a, b, token_budget(s), labels=bool(s["use_labels"]))
        cache = ResponseCache(s["cache_dir"] or Path(s["out"]) / "cache")
        transcript = complete(plan, cfg, cache, make_backend(cfg))
        report = extract_all(transcript.responses, a, b, plan.strategy)
        if args.dump_extraction:
            Path(args.dump_extraction).write_text(json.dumps(report.to_dict(), indent=2, ensure_ascii=False))
        predicted = Alignment(pair, tuple(report.correspondences)).filter(float(s["min_confidence"]))
        _emit(serialize_alignment(predicted, (a, b)).decode("utf-8"), args.output)
        return 0

    if cmd in ("eval", "diagnose"):
        corpus, pair, a, b = _pair_ontologies(s, args.pair)
        predicted = parse_alignment(Path(args.predicted).read_bytes(), a, b)
        predicted = predicted.filter(float(s["min_confidence"]))
        reference = _reference(corpus, pair, a, b, args.reference)
        if cmd == "eval":
            print(json.dumps({"pair": pair_name(pair), **evaluate(predicted, reference).as_dict()}, indent=2))
        else:
            print(json.dumps(classify_false_positives(predicted, reference, a, b).to_dict(), indent=2))
        return 0

    if cmd == "report":
        cfg = run_config(s)
        result = run_experiment(cfg)
        sys.stdout.write((cfg.out / "report.md").read_text())
        return result.exit_status

    raise ConfigError(f"unknown command {cmd}")


if __name__ == "__main__":
    sys.exit(main())
