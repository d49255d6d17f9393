"""OAEI conference-track corpus: fetching, layout checks and loading."""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
import tarfile
import tempfile
import zipfile
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Union

import httpx

from .alignfmt import parse_alignment
from .model import AlignError, Alignment, Ontology
from .ontology import load_ontology

log = logging.getLogger(__name__)

DEFAULT_URL = "https://oaei.ontologymatching.org/2023/conference/data/conference.zip"

CONFERENCE_ONTOLOGIES = ("cmt", "conference", "sigkdd", "iasted", "ekaw", "edas", "confOf")

# row order of the published per-pair results table
CONFERENCE_PAIRS: tuple[tuple[str, str], ...] = tuple(tuple(p.split("-")) for p in (
    "cmt-conference", "cmt-ekaw", "cmt-iasted", "cmt-sigkdd", "cmt-confOf", "cmt-edas",
    "conference-ekaw", "conference-iasted", "conference-sigkdd", "conference-confOf",
    "conference-edas", "ekaw-iasted", "ekaw-sigkdd", "confOf-ekaw", "confOf-sigkdd",
    "confOf-edas", "confOf-iasted", "edas-ekaw", "edas-iasted", "edas-sigkdd", "iasted-sigkdd",
))


class CorpusMissing(AlignError):
    pass


class FetchFailed(AlignError):
    pass


class LayoutInvalid(AlignError):
    def __init__(self, missing: list[str]):
        super().__init__("corpus layout incomplete, missing: " + ", ".join(missing))
        self.missing = missing


def pair_name(pair) -> str:
    return f"{pair[0]}-{pair[1]}"


def parse_pair(text: str) -> tuple[str, str]:
    """Accept ``cmt,sigkdd`` or ``cmt-sigkdd``; conference pairs are put in
    their canonical orientation."""
    sep = "," if "," in text else "-"
    parts = [p.strip() for p in text.split(sep)]
    if len(parts) != 2 or not all(parts):
        raise ValueError(f"cannot read ontology pair from {text!r}")
    a, b = parts
    if (b, a) in CONFERENCE_PAIRS:
        return (b, a)
    return (a, b)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _unpack(archive: Path, into: Path) -> None:
    if zipfile.is_zipfile(archive):
        with zipfile.ZipFile(archive) as zf:
            zf.extractall(into)
    elif tarfile.is_tarfile(archive):
        with tarfile.open(archive) as tf:
            tf.extractall(into, filter="data")
    else:
        raise FetchFailed(f"{archive} is neither a directory nor a zip/tar archive")


def _find(root: Path, stem: str, suffixes: Iterable[str]) -> Optional[Path]:
    suffixes = tuple(suffixes)
    hits = sorted(p for p in root.rglob("*")
                  if p.is_file() and p.stem.casefold() == stem.casefold()
                  and p.suffix.casefold() in suffixes)
    # an exact-case hit beats a case-folded one
    hits.sort(key=lambda p: (p.stem != stem, suffixes.index(p.suffix.casefold()), str(p)))
    return hits[0] if hits else None


def fetch_corpus(source: Union[str, Path] = DEFAULT_URL, dest: Union[str, Path] = "corpus",
                 ontologies: Iterable[str] = CONFERENCE_ONTOLOGIES,
                 pairs: Iterable[tuple[str, str]] = CONFERENCE_PAIRS) -> Path:
    """Download or unpack the conference track into ``dest``.

    ``dest`` receives ``ontologies/<name>.owl``, ``reference/<a>-<b>.rdf``
    and ``checksums.json``. Nothing is written unless every expected file
    was found.
    """
    dest = Path(dest)
    ontologies, pairs = list(ontologies), list(pairs)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        src = str(source)
        if src.startswith(("http://", "https://")):
            archive = tmp / "download"
            try:
                with httpx.stream("GET", src, follow_redirects=True, timeout=120) as r:
                    r.raise_for_status()
                    with open(archive, "wb") as fh:
                        for chunk in r.iter_bytes():
                            fh.write(chunk)
            except httpx.HTTPError as exc:
                raise FetchFailed(f"{src}: {exc}") from exc
            root = tmp / "unpacked"
            _unpack(archive, root)
        else:
            path = Path(src)
            if not path.exists():
                raise FetchFailed(f"no such file or directory: {path}")
            if path.is_dir():
                root = path
            else:
                root = tmp / "unpacked"
                _unpack(path, root)

        found: dict[str, Path] = {}
        missing: list[str] = []
        for name in ontologies:
            hit = _find(root, name, (".owl", ".rdf", ".xml"))
            if hit is None:
                missing.append(f"ontologies/{name}.owl")
            else:
                found[f"ontologies/{name}.owl"] = hit
        for pair in pairs:
            hit = _find(root, pair_name(pair), (".rdf", ".xml"))
            if hit is None:
                missing.append(f"reference/{pair_name(pair)}.rdf")
            else:
                found[f"reference/{pair_name(pair)}.rdf"] = hit
        if missing:
            raise LayoutInvalid(missing)

        checksums = {}
        for rel, path in sorted(found.items()):
            target = dest / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            if path.resolve() != target.resolve():
                shutil.copyfile(path, target)
            checksums[rel] = _sha256(target)
    (dest / "checksums.json").write_text(json.dumps(checksums, indent=2, sort_keys=True) + "\n")
    log.info("corpus ready in %s (%d files)", dest, len(checksums))
    return dest


class Corpus:
    """A fetched corpus directory; parsed ontologies are memoised."""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        if not self.root.is_dir():
            raise CorpusMissing(f"corpus directory not found: {self.root}")
        self._load = lru_cache(maxsize=None)(self._load_uncached)

    def ontology_path(self, name: str) -> Path:
        return self.root / "ontologies" / f"{name}.owl"

    def reference_path(self, pair) -> Path:
        return self.root / "reference" / f"{pair_name(pair)}.rdf"

    def check(self, pairs: Iterable[tuple[str, str]]) -> None:
        missing = []
        for pair in pairs:
            for p in (self.ontology_path(pair[0]), self.ontology_path(pair[1]), self.reference_path(pair)):
                if not p.is_file() and str(p.relative_to(self.root)) not in missing:
                    missing.append(str(p.relative_to(self.root)))
        if missing:
            raise CorpusMissing("corpus incomplete, missing: " + ", ".join(missing))

    def _load_uncached(self, name: str) -> Ontology:
        path = self.ontology_path(name)
        if not path.is_file():
            raise CorpusMissing(f"ontology file not found: {path}")
        return load_ontology(path, name)

    def ontology(self, name: str) -> Ontology:
        return self._load(name)

    def reference(self, pair) -> Alignment:
        path = self.reference_path(pair)
        if not path.is_file():
            raise CorpusMissing(f"reference alignment not found: {path}")
        return parse_alignment(path.read_bytes(), self.ontology(pair[0]), self.ontology(pair[1]))

    def available_pairs(self) -> list[tuple[str, str]]:
        ref = self.root / "reference"
        have = {p.stem for p in ref.glob("*.rdf")} if ref.is_dir() else set()
        ordered = [p for p in CONFERENCE_PAIRS if pair_name(p) in have]
        extra = sorted(tuple(s.split("-", 1)) for s in have
                       if "-" in s and tuple(s.split("-", 1)) not in CONFERENCE_PAIRS)
        return ordered + extra
