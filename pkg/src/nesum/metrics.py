"""ROUGE_RAW-1/2/L and ROUGE_NE.

All comparisons are exact, case-sensitive token equality: no stemming, stop
words or synonyms. N-gram overlap uses clipped multiset counts.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import kernels
from .corpus import IobTag


@dataclass(frozen=True)
class Prf:
    precision: float = 0.0
    recall: float = 0.0
    f: float = 0.0

    @classmethod
    def from_counts(cls, overlap: int, cand_total: int, ref_total: int) -> "Prf":
        p = overlap / cand_total if cand_total else 0.0
        r = overlap / ref_total if ref_total else 0.0
        return cls.from_pr(p, r)

    @classmethod
    def from_pr(cls, p: float, r: float) -> "Prf":
        return cls(p, r, 2 * p * r / (p + r) if p + r > 0 else 0.0)

    def as_dict(self) -> dict:
        return {"p": self.precision, "r": self.recall, "f": self.f}


ZERO = Prf()
METRIC_KEYS = ("rouge1", "rouge2", "rougeL", "rougeNE")


@dataclass(frozen=True)
class MetricReport:
    rouge1: Prf
    rouge2: Prf
    rougeL: Prf
    rougeNE: Prf

    def as_dict(self) -> dict:
        return {k: getattr(self, k).as_dict() for k in METRIC_KEYS}

    def values(self) -> list[float]:
        """The 12 numbers in table order: P, R, F for each metric."""
        out = []
        for k in METRIC_KEYS:
            prf = getattr(self, k)
            out += [prf.precision, prf.recall, prf.f]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(*(Prf(d[k]["p"], d[k]["r"], d[k]["f"]) for k in METRIC_KEYS))


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_raw_n(reference: Sequence[str], candidate: Sequence[str], n: int) -> Prf:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    ref = ngrams(reference, n)
    cand = ngrams(candidate, n)
    overlap = sum((ref & cand).values())
    return Prf.from_counts(overlap, sum(cand.values()), sum(ref.values()))


def rouge_raw_l(reference: Sequence[str], candidate: Sequence[str]) -> Prf:
    lcs = kernels.lcs_length(reference, candidate)
    return Prf.from_counts(lcs, len(candidate), len(reference))


def entity_view(tokens: Sequence[str], tags: Sequence[IobTag]) -> list[str]:
    """Tokens tagged B or I, in source order."""
    if len(tokens) != len(tags):
        raise ValueError(f"{len(tokens)} tokens but {len(tags)} tags")
    return [tok for tok, tag in zip(tokens, tags) if tag.kind != "O"]


def rouge_ne(reference_view: Sequence[str], candidate_view: Sequence[str], paper_literal: bool = False) -> Prf:
    """Unigram overlap of entity tokens; all zero if either side has no entities.

    By default precision is normalised by the candidate side as usual for
    ROUGE. ``paper_literal`` swaps the two denominators.
    """
    if not reference_view or not candidate_view:
        return ZERO
    prf = rouge_raw_n(reference_view, candidate_view, 1)
    if paper_literal:
        return Prf.from_pr(prf.recall, prf.precision)
    return prf


def evaluate_pair(
    reference: Sequence[str],
    candidate: Sequence[str],
    reference_tags: Sequence[IobTag],
    candidate_tags: Sequence[IobTag],
    paper_literal_ne: bool = False,
) -> MetricReport:
    return MetricReport(
        rouge_raw_n(reference, candidate, 1),
        rouge_raw_n(reference, candidate, 2),
        rouge_raw_l(reference, candidate),
        rouge_ne(entity_view(reference, reference_tags), entity_view(candidate, candidate_tags), paper_literal_ne),
    )


def aggregate(reports: Iterable[MetricReport]) -> MetricReport:
    """Unweighted per-document mean of each of the 12 values (F averaged directly)."""
    sums = [0.0] * 12
    count = 0
    for rep in reports:
        for i, v in enumerate(rep.values()):
            sums[i] += v
        count += 1
    if count == 0:
        raise ValueError("cannot aggregate an empty set of reports")
    means = [s / count for s in sums]
    return MetricReport(*(Prf(*means[3 * k : 3 * k + 3]) for k in range(4)))
