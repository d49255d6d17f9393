import json
import logging

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from llmalign.backend import (
    BackendConfig,
    BackendRefused,
    MockBackend,
    NetworkError,
    RemoteBackend,
    ResponseCache,
    cache_key,
    complete,
    mock_respond,
)
from llmalign.model import EntityId, Kind, Ontology, SubClass
from llmalign.prompts import build_prompts

REMOTE = BackendConfig(kind="remote", endpoint="http://llm.test/v1", model="m", backoff_base=0.0)


def toy(name, *pairs):
    ents = {}
    stmts = []
    for sub, sup in pairs:
        for n in (sub, sup):
            ents.setdefault(n, EntityId(name, n, Kind.CLASS))
        stmts.append(SubClass(ents[sub], ents[sup]))
    return Ontology(name, tuple(ents.values()), tuple(stmts))


A = toy("a", ("Paper", "Document"), ("Review", "Document"))
B = toy("b", ("Paper", "Thing_doc"), ("Reviewer", "Person"))


def test_mock_finds_shared_names():
    plan = build_prompts("P1", A, B)
    assert mock_respond([m.text for m in plan.messages]) == "Paper = Paper"


def test_mock_no_shared_names():
    plan = build_prompts("P1", toy("a", ("X", "Y")), toy("b", ("Z", "W")))
    reply = mock_respond([m.text for m in plan.messages])
    assert "=" not in reply


def test_mock_is_case_and_underscore_insensitive():
    plan = build_prompts("P1", toy("a", ("conference_part", "Root")), toy("b", ("Conference Part", "Top")))
    assert mock_respond([m.text for m in plan.messages]) == "conference part = Conference Part"


def test_mock_answers_entity_queries():
    plan = build_prompts("P7", A, B)
    texts = [m.text for m in plan.messages]
    replies = [mock_respond(texts[: i + 1]) for i in range(len(texts))]
    assert replies[0] == "Acknowledged."
    assert "Paper = Paper" in replies
    assert replies.count("no match") == len(A.entities) - 1


def test_mock_handles_garbage():
    assert mock_respond([]) == ""
    assert mock_respond(["hello there"]) == ""


@given(st.lists(st.text(max_size=200), max_size=4))
def test_mock_is_pure(conversation):
    assert mock_respond(conversation) == mock_respond(list(conversation))


def test_complete_one_turn_per_message(tmp_path):
    plan = build_prompts("P2", A, B)
    t = complete(plan, BackendConfig(), ResponseCache(tmp_path))
    assert len(t.turns) == plan.expects_responses
    assert t.responses[-1] == "Paper = Paper"


def test_warm_cache_skips_backend(tmp_path):
    plan = build_prompts("P7", A, B)
    cfg = BackendConfig()
    cache = ResponseCache(tmp_path)
    backend = MockBackend(cfg)
    first = complete(plan, cfg, cache, backend)
    calls = backend.calls
    second = complete(plan, cfg, cache, backend)
    assert not any(first.cache_hits)
    assert all(second.cache_hits) and backend.calls == calls
    assert second.responses == first.responses


def test_cache_record_layout(tmp_path):
    cache = ResponseCache(tmp_path)
    key = cache_key([{"role": "user", "content": "hi"}], "m", 0.0)
    cache.put(key, {"messages": []}, "hello")
    record = json.loads((tmp_path / key[:2] / f"{key}.json").read_text())
    assert set(record) == {"key", "request", "response", "timestamp"}
    assert cache.get(key) == "hello"


def test_corrupt_cache_is_a_miss(tmp_path, caplog):
    cache = ResponseCache(tmp_path)
    key = cache_key([{"role": "user", "content": "hi"}], "m", 0.0)
    path = tmp_path / key[:2] / f"{key}.json"
    path.parent.mkdir(parents=True)
    path.write_text("{not json")
    with caplog.at_level(logging.WARNING):
        assert cache.get(key) is None
    assert "treated as a miss" in caplog.text


messages = st.lists(st.fixed_dictionaries({"role": st.just("user"), "content": st.text(max_size=30)}),
                    max_size=3)


@given(messages, messages, st.sampled_from(["a", "b"]), st.sampled_from([0.0, 0.7]))
def test_cache_key_stability(h1, h2, model, temp):
    assert cache_key(h1, model, temp) == cache_key(list(h1), model, temp)
    if h1 != h2:
        assert cache_key(h1, model, temp) != cache_key(h2, model, temp)
    assert cache_key(h1, "a", temp) != cache_key(h1, "b", temp)


def test_config_validation():
    with pytest.raises(ValueError):
        BackendConfig(kind="remote", endpoint="", model="m")
    with pytest.raises(ValueError):
        BackendConfig(temperature=-1)
    assert BackendConfig().temperature == 0


# ---------------------------------------------------------------- remote client

def chat_reply(text):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


def test_remote_request_shape(monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "sk-test")
    seen = []

    def handler(request):
        seen.append(request)
        return chat_reply("Paper = Paper")

    backend = RemoteBackend(REMOTE, transport=httpx.MockTransport(handler))
    assert backend.respond([{"role": "user", "content": "x"}]) == "Paper = Paper"
    (req,) = seen
    assert req.url.path == "/v1/chat/completions"
    assert req.headers["Authorization"] == "Bearer sk-test"
    body = json.loads(req.content)
    assert body == {"model": "m", "messages": [{"role": "user", "content": "x"}], "temperature": 0.0}


def test_remote_retries_then_network_error():
    sleeps = []

    def handler(request):
        raise httpx.ConnectError("unreachable", request=request)

    backend = RemoteBackend(REMOTE, transport=httpx.MockTransport(handler), sleep=sleeps.append)
    with pytest.raises(NetworkError):
        backend.respond([{"role": "user", "content": "x"}])
    assert backend.calls == 4 and len(sleeps) == 3


def test_remote_backoff_is_exponential():
    sleeps = []
    cfg = BackendConfig(kind="remote", endpoint="http://llm.test", model="m")
    backend = RemoteBackend(cfg, transport=httpx.MockTransport(lambda r: httpx.Response(503)),
                            sleep=sleeps.append)
    with pytest.raises(BackendRefused):
        backend.respond([{"role": "user", "content": "x"}])
    assert sleeps == [1.0, 2.0, 4.0]


def test_remote_recovers_after_transient_failure():
    replies = iter([httpx.Response(429, text="slow down"), chat_reply("ok")])
    backend = RemoteBackend(REMOTE, transport=httpx.MockTransport(lambda r: next(replies)),
                            sleep=lambda s: None)
    assert backend.respond([{"role": "user", "content": "x"}]) == "ok"


def test_remote_client_error_surfaces_body():
    backend = RemoteBackend(REMOTE, transport=httpx.MockTransport(
        lambda r: httpx.Response(400, text="bad model")), sleep=lambda s: None)
    with pytest.raises(BackendRefused) as info:
        backend.respond([{"role": "user", "content": "x"}])
    assert info.value.status == 400 and "bad model" in info.value.body
    assert backend.calls == 1


def test_remote_conversation_history_grows(tmp_path):
    bodies = []

    def handler(request):
        bodies.append(json.loads(request.content))
        return chat_reply(f"reply {len(bodies)}")

    plan = build_prompts("P2", A, B)
    backend = RemoteBackend(REMOTE, transport=httpx.MockTransport(handler))
    t = complete(plan, REMOTE, ResponseCache(tmp_path), backend)
    assert t.responses == ["reply 1", "reply 2"]
    assert [m["role"] for m in bodies[1]["messages"]] == ["user", "assistant", "user"]
