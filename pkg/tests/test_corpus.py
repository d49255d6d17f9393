import functools
import http.server
import json
import shutil
import threading
import zipfile

import pytest

from llmalign.corpus import (
    CONFERENCE_PAIRS,
    Corpus,
    CorpusMissing,
    FetchFailed,
    LayoutInvalid,
    fetch_corpus,
    pair_name,
    parse_pair,
)

from conftest import MINICORPUS


def official_layout(tmp_path):
    """The minicorpus rearranged the way the upstream archive ships it."""
    root = tmp_path / "conference"
    (root / "reference-alignment").mkdir(parents=True)
    for f in (MINICORPUS / "ontologies").iterdir():
        shutil.copy(f, root / (f.stem[0].upper() + f.stem[1:] + ".owl"))
    for f in (MINICORPUS / "reference").iterdir():
        shutil.copy(f, root / "reference-alignment" / f.name)
    return root


def zipped(root, path):
    with zipfile.ZipFile(path, "w") as zf:
        for f in sorted(root.rglob("*")):
            zf.write(f, f.relative_to(root.parent))
    return path


def test_pair_names():
    assert len(CONFERENCE_PAIRS) == 21 == len(set(CONFERENCE_PAIRS))
    assert {frozenset(p) for p in CONFERENCE_PAIRS} == {
        frozenset((a, b)) for i, a in enumerate(("cmt", "conference", "sigkdd", "iasted", "ekaw", "edas", "confOf"))
        for b in ("cmt", "conference", "sigkdd", "iasted", "ekaw", "edas", "confOf")[i + 1:]}
    assert parse_pair("sigkdd,cmt") == ("cmt", "sigkdd")
    assert parse_pair("cmt-sigkdd") == ("cmt", "sigkdd")
    with pytest.raises(ValueError):
        parse_pair("cmt")


def test_fetch_from_archive(tmp_path):
    archive = zipped(official_layout(tmp_path), tmp_path / "conference.zip")
    dest = fetch_corpus(archive, tmp_path / "corpus")
    assert len(list((dest / "ontologies").iterdir())) == 7
    assert len(list((dest / "reference").iterdir())) == 21
    checksums = json.loads((dest / "checksums.json").read_text())
    assert len(checksums) == 28
    assert len(Corpus(dest).reference(("cmt", "sigkdd"))) > 0


def test_fetch_is_idempotent(tmp_path):
    archive = zipped(official_layout(tmp_path), tmp_path / "conference.zip")
    first = (fetch_corpus(archive, tmp_path / "c") / "checksums.json").read_text()
    second = (fetch_corpus(archive, tmp_path / "c") / "checksums.json").read_text()
    assert first == second


def test_missing_reference_is_named(tmp_path):
    root = official_layout(tmp_path)
    (root / "reference-alignment" / "cmt-edas.rdf").unlink()
    with pytest.raises(LayoutInvalid) as info:
        fetch_corpus(root, tmp_path / "corpus")
    assert info.value.missing == ["reference/cmt-edas.rdf"]
    assert not (tmp_path / "corpus").exists()


def test_fetch_errors(tmp_path):
    with pytest.raises(FetchFailed):
        fetch_corpus(tmp_path / "nope.zip", tmp_path / "c")
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"not an archive")
    with pytest.raises(FetchFailed):
        fetch_corpus(junk, tmp_path / "c")


@pytest.fixture
def http_server(tmp_path):
    handler = functools.partial(http.server.SimpleHTTPRequestHandler, directory=str(tmp_path))
    handler.log_message = lambda *a, **k: None
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


def test_fetch_over_http(tmp_path, http_server):
    zipped(official_layout(tmp_path), tmp_path / "conference.zip")
    dest = fetch_corpus(f"{http_server}/conference.zip", tmp_path / "corpus")
    assert (dest / "reference" / "iasted-sigkdd.rdf").is_file()
    with pytest.raises(FetchFailed):
        fetch_corpus(f"{http_server}/missing.zip", tmp_path / "other")


def test_corpus_missing(tmp_path):
    with pytest.raises(CorpusMissing):
        Corpus(tmp_path / "absent")
    (tmp_path / "ontologies").mkdir()
    with pytest.raises(CorpusMissing):
        Corpus(tmp_path).check([("cmt", "sigkdd")])


def test_available_pairs(minicorpus):
    assert minicorpus.available_pairs() == list(CONFERENCE_PAIRS)
    for pair in CONFERENCE_PAIRS:
        assert minicorpus.reference(pair).pair == pair, pair_name(pair)
