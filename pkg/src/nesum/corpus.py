"""Corpus ingestion: JSONL news documents, tokenization, sentences and IOB2 tags."""

from __future__ import annotations

import enum
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import AlignmentError, ConfigurationError, CorpusLineError

logger = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test", "oodtest")
FIELDS = ("text", "headline", "abstract")


class EntityType(enum.IntEnum):
    NumbersInAddresses = 0
    GeographicalNames = 1
    Institutions = 2
    MediaNames = 3
    ArtifactNames = 4
    PersonalNames = 5
    TimeExpressions = 6

    @property
    def code(self) -> str:
        return _TYPE_CODES[self]

    @classmethod
    def from_code(cls, code: str) -> "EntityType":
        try:
            return _CODE_TYPES[code]
        except KeyError:
            raise ValueError(f"unknown entity type code {code!r}") from None


_TYPE_CODES = dict(zip(EntityType, "AGCMRPT"))
_CODE_TYPES = {c: t for t, c in _TYPE_CODES.items()}


@dataclass(frozen=True)
class IobTag:
    """One IOB2 label: ``kind`` is ``"O"``, ``"B"`` or ``"I"``; ``etype`` is None for O."""

    kind: str
    etype: EntityType | None = None

    def __post_init__(self):
        if self.kind == "O":
            if self.etype is not None:
                raise ValueError("O tag carries no entity type")
        elif self.kind in ("B", "I"):
            if self.etype is None:
                raise ValueError(f"{self.kind} tag needs an entity type")
        else:
            raise ValueError(f"bad tag kind {self.kind!r}")

    @property
    def is_entity(self) -> bool:
        return self.kind != "O"

    @classmethod
    def parse(cls, text: str) -> "IobTag":
        if text == "O":
            return OUTSIDE
        kind, sep, code = text.partition("-")
        if not sep or kind not in ("B", "I"):
            raise ValueError(f"malformed IOB2 tag {text!r}")
        return cls(kind, EntityType.from_code(code))

    def __str__(self) -> str:
        return "O" if self.kind == "O" else f"{self.kind}-{self.etype.code}"


OUTSIDE = IobTag("O")


def B(etype: EntityType) -> IobTag:
    return IobTag("B", etype)


def I(etype: EntityType) -> IobTag:  # noqa: E743
    return IobTag("I", etype)


def is_well_formed(tags: Sequence[IobTag]) -> bool:
    prev = OUTSIDE
    for tag in tags:
        if tag.kind == "I" and (prev.kind == "O" or prev.etype != tag.etype):
            return False
        prev = tag
    return True


def repair_iob2(tags: Sequence[IobTag]) -> tuple[list[IobTag], int]:
    """Rewrite every I that does not continue an entity of its type as B.

    Returns the repaired tags and the number of repairs.
    """
    out = []
    repairs = 0
    prev = OUTSIDE
    for tag in tags:
        if tag.kind == "I" and (prev.kind == "O" or prev.etype != tag.etype):
            tag = IobTag("B", tag.etype)
            repairs += 1
        out.append(tag)
        prev = tag
    return out, repairs


def decode_spans(tags: Sequence[IobTag]) -> list[tuple[int, int, EntityType]]:
    """Entity spans ``(start, end, type)`` with half-open token ranges."""
    spans = []
    start, etype = None, None
    for i, tag in enumerate(tags):
        if tag.kind == "I" and start is not None and tag.etype == etype:
            continue
        if start is not None:
            spans.append((start, i, etype))
            start = None
        if tag.kind != "O":
            start, etype = i, tag.etype
    if start is not None:
        spans.append((start, len(tags), etype))
    return spans


def encode_spans(spans: Iterable[tuple[int, int, EntityType]], length: int) -> list[IobTag]:
    tags = [OUTSIDE] * length
    for start, end, etype in spans:
        tags[start] = IobTag("B", etype)
        for i in range(start + 1, end):
            tags[i] = IobTag("I", etype)
    return tags


# --- documents --------------------------------------------------------------


def make_doc_id(url: str) -> str:
    return hashlib.sha1(url.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Document:
    doc_id: str
    headline: str
    abstract: str
    text: str
    split: str
    url: str

    def __post_init__(self):
        if not self.headline.strip():
            raise ValueError("empty headline")
        if not self.text.strip():
            raise ValueError("empty text")
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")

    @classmethod
    def from_record(cls, record: Mapping, default_split: str = "train") -> "Document":
        url = record["url"]
        return cls(
            doc_id=record.get("doc_id") or make_doc_id(url),
            headline=record["headline"],
            abstract=record.get("abstract") or "",
            text=record["text"],
            split=record.get("split") or default_split,
            url=url,
        )

    def get(self, name: str) -> str:
        if name not in FIELDS:
            raise ValueError(f"unknown field {name!r}")
        return getattr(self, name)


class CorpusReader:
    """Streaming reader over a JSONL corpus file.

    Iterating yields valid :class:`Document` objects in file order. Records
    failing validation are skipped and counted in ``skipped``; lines that are
    not valid JSON are recorded in ``errors`` as ``(line_number, message)``
    unless ``strict`` is set, in which case :class:`CorpusLineError` is raised.
    """

    def __init__(self, path, split=None, strict=False, default_split="train"):
        self.path = Path(path)
        if split is not None and split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        self.split = split
        self.strict = strict
        self.default_split = default_split
        self.skipped = 0
        self.errors: list[tuple[int, str]] = []

    def __iter__(self) -> Iterator[Document]:
        self.skipped = 0
        self.errors = []
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    if not isinstance(record, dict):
                        raise ValueError("line is not a JSON object")
                except ValueError as exc:
                    if self.strict:
                        raise CorpusLineError(lineno, str(exc)) from exc
                    logger.warning("%s:%d: malformed line: %s", self.path, lineno, exc)
                    self.errors.append((lineno, str(exc)))
                    continue
                try:
                    doc = Document.from_record(record, self.default_split)
                except (KeyError, TypeError, ValueError) as exc:
                    logger.debug("%s:%d: skipped record: %s", self.path, lineno, exc)
                    self.skipped += 1
                    continue
                if self.split is None or doc.split == self.split:
                    yield doc


def load_corpus(path, split_filter=None, strict=False) -> CorpusReader:
    """Open ``path`` for streaming. Raises OSError right away if it is unreadable."""
    path = Path(path)
    with open(path, encoding="utf-8"):
        pass
    return CorpusReader(path, split=split_filter, strict=strict)


# --- tokenization -------------------------------------------------------------

PUNCT = frozenset('.,!?;:"\'()«»„“–—')


def tokenize(text: str) -> list[str]:
    """Whitespace split, then detach leading/trailing punctuation one char at a time."""
    tokens = []
    for chunk in text.split():
        start, end = 0, len(chunk)
        while start < end and chunk[start] in PUNCT:
            start += 1
        while end > start and chunk[end - 1] in PUNCT:
            end -= 1
        tokens.extend(chunk[:start])
        if start < end:
            tokens.append(chunk[start:end])
        tokens.extend(chunk[end:])
    return tokens


TERMINATORS = frozenset(".!?")
CLOSING = frozenset(['"', "“", "»", ")", "'"])
OPENING = frozenset(["„", "«", '"', "(", "'"])

ABBREVIATIONS = frozenset(
    """č čís tzv r s str mj např tj atd apod resp viz srov cca ing mgr dr doc prof
    judr mudr phdr rndr sv st ul nám odst písm hod min tel ev popř aj""".split()
)


def _is_abbreviation(token: str) -> bool:
    if len(token) == 1 and token.isalpha() and token.isupper():
        return True
    return token.lower() in ABBREVIATIONS


def split_sentences(tokens: Sequence[str]) -> list[tuple[int, int]]:
    """Half-open sentence ranges covering ``tokens``.

    A sentence ends after ``.``/``!``/``?`` (plus any closing quotes or
    brackets right after it) when the next token starts with an uppercase
    letter or an opening quote, unless the terminator is a ``.`` following an
    abbreviation or a single-letter initial.
    """
    n = len(tokens)
    bounds = []
    start = 0
    i = 0
    while i < n:
        tok = tokens[i]
        if tok in TERMINATORS and not (tok == "." and i > 0 and _is_abbreviation(tokens[i - 1])):
            end = i + 1
            while end < n and tokens[end] in CLOSING:
                end += 1
            if end < n:
                nxt = tokens[end]
                if nxt[0].isupper() or nxt in OPENING:
                    bounds.append((start, end))
                    start = end
            i = end
            continue
        i += 1
    if start < n:
        bounds.append((start, n))
    return bounds


# --- annotations ----------------------------------------------------------------


@dataclass
class AnnotatedText:
    tokens: list[str]
    sentence_bounds: list[tuple[int, int]]
    tags: list[IobTag]
    repairs: int = 0

    def __post_init__(self):
        if len(self.tags) != len(self.tokens):
            raise ValueError("tags and tokens differ in length")
        pos = 0
        for start, end in self.sentence_bounds:
            if start != pos or end <= start:
                raise ValueError(f"bad sentence bounds {self.sentence_bounds}")
            pos = end
        if pos != len(self.tokens):
            raise ValueError("sentence bounds do not cover the tokens")
        if not is_well_formed(self.tags):
            raise ValueError("tags are not IOB2 well-formed")

    @property
    def num_sentences(self) -> int:
        return len(self.sentence_bounds)

    def sentence(self, index: int) -> list[str]:
        start, end = self.sentence_bounds[index]
        return self.tokens[start:end]

    def sentence_tags(self, index: int) -> list[IobTag]:
        start, end = self.sentence_bounds[index]
        return self.tags[start:end]

    @classmethod
    def from_tokens(cls, tokens: Sequence[str], tags: Sequence[IobTag] | None = None) -> "AnnotatedText":
        tokens = list(tokens)
        tags = list(tags) if tags is not None else [OUTSIDE] * len(tokens)
        tags, repairs = repair_iob2(tags)
        return cls(tokens, split_sentences(tokens), tags, repairs)


def attach_annotations(doc_tokens: Sequence[str], tag_record: Mapping) -> AnnotatedText:
    """Align an annotation-file record with our tokens and validate its tags.

    Malformed IOB2 is repaired (stray I -> B); the count is kept in ``repairs``.
    """
    doc_id = tag_record.get("doc_id", "?")
    rec_tokens = tag_record.get("tokens")
    rec_tags = tag_record["tags"]
    if len(rec_tags) != len(doc_tokens) or (rec_tokens is not None and len(rec_tokens) != len(doc_tokens)):
        raise AlignmentError(
            f"document {doc_id}: annotation has {len(rec_tags)} tags for {len(doc_tokens)} tokens",
            doc_id=doc_id,
        )
    if rec_tokens is not None:
        for i, (ours, theirs) in enumerate(zip(doc_tokens, rec_tokens)):
            if ours != theirs:
                raise AlignmentError(
                    f"document {doc_id}: token mismatch at index {i}: {ours!r} != {theirs!r}",
                    doc_id=doc_id,
                    index=i,
                )
    tags = [t if isinstance(t, IobTag) else IobTag.parse(t) for t in rec_tags]
    return AnnotatedText.from_tokens(doc_tokens, tags)


def entity_token_count(a: AnnotatedText, token_range: tuple[int, int]) -> int:
    start, end = token_range
    if not 0 <= start <= end <= len(a.tokens):
        raise IndexError(f"range {token_range} outside [0, {len(a.tokens)}]")
    return sum(1 for t in a.tags[start:end] if t.kind != "O")


def annotation_record(doc_id: str, field_name: str, tokens: Sequence[str], tags: Sequence[IobTag]) -> dict:
    return {"doc_id": doc_id, "field": field_name, "tokens": list(tokens), "tags": [str(t) for t in tags]}


def load_annotations(path) -> dict[tuple[str, str], dict]:
    """Read an annotation JSONL file into ``{(doc_id, field): record}``."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = (rec["doc_id"], rec["field"])
                rec["tags"]
            except (ValueError, KeyError, TypeError) as exc:
                raise CorpusLineError(lineno, f"bad annotation record: {exc}") from exc
            if rec["field"] not in FIELDS:
                raise CorpusLineError(lineno, f"unknown field {rec['field']!r}")
            out[key] = rec
    return out


@dataclass
class AnnotatedDocument:
    document: Document
    annotations: dict[str, AnnotatedText] = field(default_factory=dict)

    @property
    def doc_id(self) -> str:
        return self.document.doc_id

    def field(self, name: str) -> AnnotatedText:
        try:
            return self.annotations[name]
        except KeyError:
            raise ConfigurationError(f"document {self.doc_id} has no annotations for field {name!r}") from None


def annotate_documents(docs: Iterable[Document], annotations: Mapping, fields=FIELDS) -> Iterator[AnnotatedDocument]:
    """Join documents with annotation records; fields lacking a record are left out."""
    for doc in docs:
        ann = {}
        for name in fields:
            rec = annotations.get((doc.doc_id, name))
            if rec is not None:
                ann[name] = attach_annotations(tokenize(doc.get(name)), rec)
        yield AnnotatedDocument(doc, ann)


# --- statistics -----------------------------------------------------------------


@dataclass
class EntityStats:
    counts: dict[EntityType, int] = field(default_factory=lambda: {t: 0 for t in EntityType})
    total: int = 0
    docs_without_entity: int = 0
    docs_total: int = 0

    @property
    def fraction_without_entity(self) -> float | None:
        return self.docs_without_entity / self.docs_total if self.docs_total else None

    def __add__(self, other: "EntityStats") -> "EntityStats":
        return EntityStats(
            {t: self.counts[t] + other.counts[t] for t in EntityType},
            self.total + other.total,
            self.docs_without_entity + other.docs_without_entity,
            self.docs_total + other.docs_total,
        )

    def add(self, tags: Sequence[IobTag]) -> None:
        found = 0
        for tag in tags:
            if tag.kind == "B":
                self.counts[tag.etype] += 1
                found += 1
        self.total += found
        self.docs_total += 1
        if found == 0:
            self.docs_without_entity += 1


def corpus_stats(corpus: Iterable[AnnotatedDocument], field_name: str) -> EntityStats:
    """Count entity spans (B tags) per type over one field of each document."""
    if field_name not in FIELDS:
        raise ConfigurationError(f"unknown field {field_name!r}")
    stats = EntityStats()
    for doc in corpus:
        stats.add(doc.field(field_name).tags)
    return stats
