"""One-sentence extractive summarizers: First, Random, TextRank and Named Entity Density."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import AnnotatedText

EXTRACTIVE_METHODS = ("first", "random", "textrank", "ned")
ABSTRACTIVE_METHODS = ("seq2seq", "seq2seq_ner")

MASK64 = (1 << 64) - 1

TEXTRANK_DAMPING = 0.85
TEXTRANK_TOL = 1e-6
TEXTRANK_MAX_ITER = 100
# Scores this close to the maximum (relatively) count as tied.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SentenceScore:
    sentence_index: int
    score: float


@dataclass(frozen=True)
class SummarizerOutput:
    doc_id: str
    method: str
    summary_tokens: list[str]
    chosen_sentence: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.method not in EXTRACTIVE_METHODS + ABSTRACTIVE_METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if (self.chosen_sentence is not None) != (self.method in EXTRACTIVE_METHODS):
            raise ValueError("chosen_sentence must be set exactly for extractive methods")


def _require_sentences(a: AnnotatedText) -> None:
    if not a.sentence_bounds:
        raise ValueError("article has no sentences")


def _output(a: AnnotatedText, method: str, index: int, doc_id: str, seed=None) -> SummarizerOutput:
    return SummarizerOutput(doc_id, method, a.sentence(index), index, seed)


def select_first(a: AnnotatedText, doc_id: str = "") -> SummarizerOutput:
    _require_sentences(a)
    return _output(a, "first", 0, doc_id)


# --- Random ---------------------------------------------------------------------


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood 2014): 64-bit state, Weyl increment.

    Chosen because it is tiny and trivially portable, so a seed reproduces
    the same draws in any language.
    """

    GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + self.GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n


def doc_hash(doc_id: str) -> int:
    """64-bit FNV-1a hash of the document id."""
    h = 0xCBF29CE484222325
    for byte in doc_id.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def select_random(a: AnnotatedText, seed: int, doc_id: str = "") -> SummarizerOutput:
    _require_sentences(a)
    rng = SplitMix64((seed & MASK64) ^ doc_hash(doc_id))
    return _output(a, "random", rng.below(a.num_sentences), doc_id, seed)


# --- Named Entity Density ------------------------------------------------------------


def ned_scores(a: AnnotatedText) -> list[SentenceScore]:
    """Fraction of B/I-tagged tokens in each sentence."""
    scores = []
    for idx, (start, end) in enumerate(a.sentence_bounds):
        ents = sum(1 for t in a.tags[start:end] if t.kind != "O")
        scores.append(SentenceScore(idx, ents / (end - start)))
    return scores


def _argmax_earliest(values) -> int:
    best = max(values)
    tol = TIE_RTOL * abs(best)
    for i, v in enumerate(values):
        if v >= best - tol:
            return i
    raise AssertionError("unreachable")


def select_ned(a: AnnotatedText, doc_id: str = "", min_sentence_len: int = 1) -> SummarizerOutput:
    """Sentence with the highest entity density; ties go to the earliest sentence.

    Sentences shorter than ``min_sentence_len`` are skipped unless no sentence
    is long enough.
    """
    _require_sentences(a)
    scores = ned_scores(a)
    eligible = [s for s in scores if a.sentence_bounds[s.sentence_index][1] - a.sentence_bounds[s.sentence_index][0] >= min_sentence_len]
    if not eligible:
        eligible = scores
    best = max(s.score for s in eligible)
    index = next(s.sentence_index for s in eligible if s.score == best)
    return _output(a, "ned", index, doc_id)


# --- TextRank -------------------------------------------------------------------------


def textrank_similarity(a: AnnotatedText) -> np.ndarray:
    """Sentence overlap weights with log-length normalisation; zero diagonal."""
    sets = [{t.lower() for t in a.sentence(i)} for i in range(a.num_sentences)]
    lengths = [end - start for start, end in a.sentence_bounds]
    n = len(sets)
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            shared = len(sets[i] & sets[j])
            if shared:
                w[i, j] = w[j, i] = shared / (math.log1p(lengths[i]) + math.log1p(lengths[j]))
    return w


def textrank_scores(a: AnnotatedText, damping=TEXTRANK_DAMPING, tol=TEXTRANK_TOL, max_iter=TEXTRANK_MAX_ITER) -> np.ndarray:
    """PageRank-style scores, rescaled after every iteration to sum to the sentence count."""
    n = a.num_sentences
    if n == 1:
        return np.ones(1)
    w = textrank_similarity(a)
    out_weight = w.sum(axis=1)
    # transition[i, j]: share of j's vote that goes to i; sentences without edges vote for nobody
    transition = np.divide(w, out_weight[np.newaxis, :], out=np.zeros_like(w), where=out_weight[np.newaxis, :] > 0)
    scores = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        new = (1 - damping) + damping * (transition @ scores)
        new *= n / new.sum()
        delta = np.max(np.abs(new - scores))
        scores = new
        if delta < tol:
            break
    return scores


def textrank_select(a: AnnotatedText, doc_id: str = "") -> SummarizerOutput:
    _require_sentences(a)
    if a.num_sentences == 1:
        return _output(a, "textrank", 0, doc_id)
    return _output(a, "textrank", _argmax_earliest(textrank_scores(a).tolist()), doc_id)


def summarize(method: str, a: AnnotatedText, doc_id: str = "", seed: int = 0, min_sentence_len: int = 1) -> SummarizerOutput:
    if method == "first":
        return select_first(a, doc_id)
    if method == "random":
        return select_random(a, seed, doc_id)
    if method == "textrank":
        return textrank_select(a, doc_id)
    if method == "ned":
        return select_ned(a, doc_id, min_sentence_len)
    raise ValueError(f"{method!r} is not an extractive method")
