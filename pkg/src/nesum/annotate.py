"""Gazetteer-based named entity annotation.

Any object with an ``annotate(tokens) -> list[IobTag]`` method can serve as
an annotator; :class:`Gazetteer` is the deterministic one shipped here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .corpus import OUTSIDE, EntityType, IobTag, tokenize
from .errors import CorpusLineError


class Annotator(Protocol):
    def annotate(self, tokens: Sequence[str]) -> list[IobTag]: ...


@dataclass
class Gazetteer:
    entries: dict[tuple[str, ...], EntityType] = field(default_factory=dict)
    max_len: int = 0

    def add(self, surface: str | Sequence[str], etype: EntityType) -> None:
        key = tuple(t.lower() for t in (tokenize(surface) if isinstance(surface, str) else surface))
        if not key:
            raise ValueError(f"gazetteer entry {surface!r} has no tokens")
        self.entries.pop(key, None)
        self.entries[key] = etype
        self.max_len = max(self.max_len, len(key))

    def __len__(self) -> int:
        return len(self.entries)

    def annotate(self, tokens: Sequence[str]) -> list[IobTag]:
        return annotate_tokens(self, tokens)


def load_gazetteer(path) -> Gazetteer:
    """Read ``<surface form>\\t<type code>`` lines; later duplicates override earlier ones."""
    g = Gazetteer()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            surface, sep, code = line.rpartition("\t")
            if not sep:
                raise CorpusLineError(lineno, "expected '<surface>\\t<type code>'")
            try:
                etype = EntityType.from_code(code.strip())
                g.add(surface, etype)
            except ValueError as exc:
                raise CorpusLineError(lineno, str(exc)) from exc
    return g


def annotate_tokens(g: Gazetteer, tokens: Sequence[str]) -> list[IobTag]:
    """Greedy left-to-right, case-insensitive longest match."""
    lowered = [t.lower() for t in tokens]
    n = len(lowered)
    tags = [OUTSIDE] * n
    i = 0
    while i < n:
        for length in range(min(g.max_len, n - i), 0, -1):
            etype = g.entries.get(tuple(lowered[i : i + length]))
            if etype is not None:
                tags[i] = IobTag("B", etype)
                for k in range(i + 1, i + length):
                    tags[k] = IobTag("I", etype)
                i += length
                break
        else:
            i += 1
    return tags
