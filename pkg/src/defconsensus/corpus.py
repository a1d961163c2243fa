"""Definition corpora: data model, JSON-lines ingestion, subsetting.

A corpus file is UTF-8 JSON-lines, one object per line:
``{"id": ..., "text": ..., "kind": ..., "source": ...}``.
Text is whitespace-normalized at ingest (internal runs collapsed to single
spaces, ends trimmed); the appendix-derived fixtures contain typographic
artifacts otherwise.
"""

from __future__ import annotations

import datetime
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Iterable, Iterator

from .errors import DuplicateId, EmptyCorpus, MalformedRecord, UnknownId

KINDS = ("individual", "composite", "baseline", "external")

_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Collapse internal whitespace runs to single spaces and trim ends."""
    return _WS.sub(" ", text).strip()


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class Definition:
    """One definition text with identity and provenance."""

    id: str
    text: str
    kind: str
    source: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("definition id must be non-empty")
        if not self.text.strip():
            raise ValueError(f"definition {self.id!r}: text must be non-empty")
        if self.kind not in KINDS:
            raise ValueError(f"definition {self.id!r}: kind must be one of {KINDS}, got {self.kind!r}")

    @property
    def word_count(self) -> int:
        return len(self.text.split())


@dataclass(frozen=True)
class Corpus:
    """Ordered, id-unique collection of definitions. Immutable once built."""

    name: str
    definitions: tuple[Definition, ...]
    created: str = field(default_factory=_utcnow)

    def __post_init__(self):
        object.__setattr__(self, "definitions", tuple(self.definitions))
        seen = set()
        for d in self.definitions:
            if d.id in seen:
                raise DuplicateId(d.id)
            seen.add(d.id)

    def __len__(self) -> int:
        return len(self.definitions)

    def __iter__(self) -> Iterator[Definition]:
        return iter(self.definitions)

    def __contains__(self, definition_id: str) -> bool:
        return any(d.id == definition_id for d in self.definitions)

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.definitions]

    def get(self, definition_id: str) -> Definition:
        for d in self.definitions:
            if d.id == definition_id:
                return d
        raise UnknownId(definition_id)

    def subset(self, ids: Iterable[str]) -> "Corpus":
        """New corpus with exactly the requested definitions, in requested order."""
        ids = list(ids)
        if not ids:
            raise EmptyCorpus("subset of zero definitions requested")
        by_id = {d.id: d for d in self.definitions}
        picked = []
        for i in ids:
            if i not in by_id:
                raise UnknownId(i)
            picked.append(by_id[i])
        return Corpus(name=self.name, definitions=tuple(picked))

    def without(self, *ids: str) -> "Corpus":
        """New corpus dropping the given ids (each must exist)."""
        drop = set(ids)
        missing = drop - set(self.ids)
        if missing:
            raise UnknownId(sorted(missing)[0])
        return self.subset([i for i in self.ids if i not in drop])


def parse_corpus(stream: IO[bytes] | IO[str], name: str = "corpus") -> Corpus:
    """Parse a JSON-lines corpus; raises on malformed records, duplicate
    ids, or an empty stream."""
    raw = stream.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    definitions: list[Definition] = []
    seen: set[str] = set()
    for index, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedRecord(index, f"invalid JSON: {e}") from e
        if not isinstance(obj, dict):
            raise MalformedRecord(index, "record is not a JSON object")
        try:
            definition = Definition(
                id=str(obj["id"]),
                text=normalize_text(str(obj["text"])),
                kind=str(obj.get("kind", "individual")),
                source=str(obj.get("source", "")),
            )
        except KeyError as e:
            raise MalformedRecord(index, f"missing field {e.args[0]!r}") from e
        except ValueError as e:
            raise MalformedRecord(index, str(e)) from e
        if definition.id in seen:
            raise DuplicateId(definition.id)
        seen.add(definition.id)
        definitions.append(definition)
    if not definitions:
        raise EmptyCorpus("corpus stream contains no records")
    return Corpus(name=name, definitions=tuple(definitions))


def load_corpus(path, name: str | None = None) -> Corpus:
    with open(path, "rb") as fh:
        return parse_corpus(fh, name=name or str(path))


def serialize_corpus(corpus: Corpus) -> str:
    """JSON-lines serialization; round-trips through parse_corpus."""
    lines = [
        json.dumps(
            {"id": d.id, "text": d.text, "kind": d.kind, "source": d.source},
            ensure_ascii=False,
        )
        for d in corpus.definitions
    ]
    return "\n".join(lines) + "\n"


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_corpus(corpus))


def fixture_path(filename: str):
    """Path to a bundled data fixture (individual-60.jsonl etc.)."""
    return resources.files("defconsensus.data").joinpath(filename)


def load_fixture(filename: str) -> Corpus:
    with fixture_path(filename).open("rb") as fh:
        return parse_corpus(fh, name=filename)
