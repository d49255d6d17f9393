"""Chat backends: an OpenAI-compatible HTTP client, an offline mock, and a
content-addressed response cache shared by both."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import httpx

from .model import AlignError
from .prompts import CONTINUED, ENTITY_QUERY, INSTRUCTIONS, ONTOLOGY_1, ONTOLOGY_2, PromptPlan

log = logging.getLogger(__name__)


class NetworkError(AlignError):
    pass


class BackendRefused(AlignError):
    def __init__(self, status: int, body: str):
        super().__init__(f"backend returned HTTP {status}: {body[:500]}")
        self.status = status
        self.body = body


class CacheCorrupt(AlignError):
    pass


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"  # "mock" or "remote"
    endpoint: str = ""
    model: str = "mock-stringequiv"
    temperature: float = 0.0
    timeout: float = 120.0
    max_retries: int = 3
    backoff_base: float = 1.0
    max_in_flight: int = 2
    api_key_env: str = "OPENAI_API_KEY"

    def __post_init__(self):
        if self.kind not in ("mock", "remote"):
            raise ValueError(f"backend kind must be 'mock' or 'remote', not {self.kind!r}")
        if self.kind == "remote" and (not self.endpoint or not self.model):
            raise ValueError("remote backend needs an endpoint and a model name")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


# ---------------------------------------------------------------- cache

def cache_key(history: Sequence[dict], model: str, temperature: float) -> str:
    payload = json.dumps({"messages": list(history), "model": model, "temperature": temperature},
                         sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """One JSON record per key under ``root/<key[:2]>/<key>.json``."""

    def __init__(self, root):
        self.root = Path(root)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> Optional[str]:
        path = self._path(key)
        if not path.exists():
            return None
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
            if record.get("key") != key or not isinstance(record.get("response"), str):
                raise CacheCorrupt(f"bad record {path}")
            return record["response"]
        except (OSError, ValueError, CacheCorrupt) as exc:
            log.warning("unreadable cache entry %s treated as a miss: %s", path, exc)
            return None

    def put(self, key: str, request: dict, response: str) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        record = {"key": key, "request": request, "response": response, "timestamp": time.time()}
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(record, fh, ensure_ascii=False, indent=1)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


# ---------------------------------------------------------------- mock

_TRIPLE = re.compile(r"^([^()]+?) \(([^(),]+), ([^(),]+)\)$")
_QUERY = re.compile(
    "^" + re.escape(ENTITY_QUERY).replace(r"\{kind\}", "(class|property)").replace(r"\{name\}", "(.+)") + "$")
XSD_NAMES = {
    "string", "normalizedString", "token", "boolean", "decimal", "integer", "int", "long", "short",
    "byte", "nonNegativeInteger", "positiveInteger", "negativeInteger", "nonPositiveInteger",
    "unsignedInt", "unsignedLong", "float", "double", "date", "dateTime", "time", "gYear",
    "gYearMonth", "duration", "anyURI", "Literal", "PlainLiteral", "XMLLiteral", "language", "Name",
}


def _fold(name: str) -> str:
    return " ".join(name.replace("_", " ").split()).casefold()


def _collect_names(conversation: Sequence[str]):
    """Recover (kind, name) lists for both ontologies from the prompt text."""
    names: list[dict[tuple[str, str], str]] = [{}, {}]
    current: Optional[int] = None
    for message in conversation:
        for line in message.splitlines():
            line = line.strip()
            if line == ONTOLOGY_1:
                current = 0
            elif line == ONTOLOGY_2:
                current = 1
            elif line == CONTINUED or current is None:
                continue
            else:
                m = _TRIPLE.match(line)
                if not m:
                    continue
                pred, subj, obj = (g.strip() for g in m.groups())
                found = names[current]
                if pred == "Is-a":
                    operands = [subj, obj]
                else:
                    found.setdefault(("property", _fold(pred)), pred)
                    operands = [subj] + ([] if obj in XSD_NAMES else [obj])
                for n in operands:
                    found.setdefault(("class", _fold(n)), n)
    return names


def mock_respond(conversation: Sequence[str]) -> str:
    """String-equivalence matcher over the triples visible in the conversation.

    Emits ``X = Y`` for each same-kind pair whose case-folded, humanized names
    agree. A trailing per-entity query gets a single best match or
    ``no match``; context-only turns are acknowledged.
    """
    if not conversation:
        return ""
    names = _collect_names(conversation)
    last = conversation[-1].strip()
    query = _QUERY.match(last)
    if query:
        kind, name = query.groups()
        hit = names[1].get((kind, _fold(name)))
        return f"{name} = {hit}" if hit else "no match"
    if not any(line.strip() in INSTRUCTIONS for msg in conversation for line in msg.splitlines()):
        return "Acknowledged." if any(names) else ""
    lines = sorted(f"{x} = {names[1][key]}" for key, x in names[0].items() if key in names[1])
    if not lines:
        return "No equivalent entities found."
    return "\n".join(lines)


# ---------------------------------------------------------------- backends

class MockBackend:
    def __init__(self, cfg: BackendConfig):
        self.cfg = cfg
        self.calls = 0

    def respond(self, history: Sequence[dict]) -> str:
        self.calls += 1
        return mock_respond([m["content"] for m in history if m["role"] == "user"])


class RemoteBackend:
    """OpenAI-style ``POST {endpoint}/chat/completions`` client."""

    def __init__(self, cfg: BackendConfig, transport: Optional[httpx.BaseTransport] = None,
                 sleep=time.sleep):
        self.cfg = cfg
        self.calls = 0
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max(1, cfg.max_in_flight))
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(cfg.api_key_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(base_url=cfg.endpoint.rstrip("/"), headers=headers,
                                    timeout=cfg.timeout, transport=transport)
        self._lock = threading.Lock()

    def close(self):
        self._client.close()

    def respond(self, history: Sequence[dict]) -> str:
        body = {"model": self.cfg.model, "messages": list(history), "temperature": self.cfg.temperature}
        last_error: Optional[Exception] = None
        for attempt in range(self.cfg.max_retries + 1):
            if attempt:
                self._sleep(self.cfg.backoff_base * 2 ** (attempt - 1))
            with self._slots:
                with self._lock:
                    self.calls += 1
                try:
                    r = self._client.post("/chat/completions", json=body)
                except httpx.TransportError as exc:
                    last_error = NetworkError(f"{self.cfg.endpoint}: {exc}")
                    continue
            if r.status_code == 429 or r.status_code >= 500:
                last_error = BackendRefused(r.status_code, r.text)
                continue
            if r.status_code >= 400:
                raise BackendRefused(r.status_code, r.text)
            try:
                return r.json()["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendRefused(r.status_code, f"unexpected body ({exc}): {r.text}") from exc
        assert last_error is not None
        raise last_error


def make_backend(cfg: BackendConfig, transport: Optional[httpx.BaseTransport] = None, sleep=time.sleep):
    if cfg.kind == "mock":
        return MockBackend(cfg)
    return RemoteBackend(cfg, transport=transport, sleep=sleep)


# ---------------------------------------------------------------- transcripts

@dataclass
class Turn:
    request: str
    response: str
    latency_ms: float
    cache_hit: bool


@dataclass
class Transcript:
    strategy: str
    pair: tuple[str, str]
    model: str
    turns: list[Turn] = field(default_factory=list)

    @property
    def responses(self) -> list[str]:
        return [t.response for t in self.turns]

    @property
    def cache_hits(self) -> list[bool]:
        return [t.cache_hit for t in self.turns]

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "pair": list(self.pair),
            "model": self.model,
            "turns": [vars(t) for t in self.turns],
        }


def complete(plan: PromptPlan, cfg: BackendConfig, cache: Optional[ResponseCache] = None,
             backend=None) -> Transcript:
    """Play ``plan`` as one conversation, one reply per user message."""
    backend = backend or make_backend(cfg)
    transcript = Transcript(plan.strategy, plan.pair, cfg.model)
    history: list[dict] = []
    for message in plan.messages:
        history.append({"role": message.role, "content": message.text})
        key = cache_key(history, cfg.model, cfg.temperature)
        started = time.perf_counter()
        reply = cache.get(key) if cache is not None else None
        hit = reply is not None
        if not hit:
            reply = backend.respond(history)
            if cache is not None:
                cache.put(key, {"model": cfg.model, "temperature": cfg.temperature,
                                "messages": list(history)}, reply)
        latency = (time.perf_counter() - started) * 1000.0
        transcript.turns.append(Turn(message.text, reply, round(latency, 3), hit))
        history.append({"role": "assistant", "content": reply})
    return transcript
