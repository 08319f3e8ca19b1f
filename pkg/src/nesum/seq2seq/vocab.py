"""Word vocabulary with fixed reserved ids."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

PAD, SOS, EOS, UNK = 0, 1, 2, 3
RESERVED = ("<pad>", "<sos>", "<eos>", "<unk>")
DEFAULT_MAX_SIZE = 25_000


class Vocab:
    def __init__(self, id_to_token: Sequence[str], max_size: int = DEFAULT_MAX_SIZE):
        if tuple(id_to_token[:4]) != RESERVED:
            raise ValueError("vocabulary must start with the reserved symbols")
        if len(id_to_token) > max_size:
            raise ValueError(f"vocabulary of {len(id_to_token)} exceeds max_size {max_size}")
        self.id_to_token = list(id_to_token)
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate tokens in vocabulary")
        self.max_size = max_size

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def encode(self, tokens: Iterable[str]) -> list[int]:
        get = self.token_to_id.get
        return [get(t, UNK) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.id_to_token[i] for i in ids]


def build_vocab(tokens: Iterable[str], max_size: int = DEFAULT_MAX_SIZE) -> Vocab:
    """Most frequent tokens (ties in lexicographic order) after the 4 reserved symbols."""
    if max_size < len(RESERVED):
        raise ValueError("max_size must leave room for the reserved symbols")
    counts = Counter(tokens)
    if not counts:
        raise ValueError("cannot build a vocabulary from an empty token stream")
    for sym in RESERVED:
        counts.pop(sym, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    words = [w for w, _ in ranked[: max_size - len(RESERVED)]]
    return Vocab(list(RESERVED) + words, max_size)
