"""Candidate-pair generation by shared character n-grams."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .corpus import Dataset, GoldLabels

__all__ = ["CandidatePairs", "grams", "candidate_pairs", "blocker_recall"]

DEFAULT_GRAM_SIZE = 4


@dataclass(frozen=True)
class CandidatePairs:
    pairs: frozenset

    @property
    def N(self) -> int:
        return len(self.pairs)

    def sorted(self) -> list[tuple[str, str]]:
        return sorted(self.pairs)


def grams(text: str, n: int) -> set[str]:
    """Contiguous length-``n`` substrings of the case-folded text.

    A nonempty string shorter than ``n`` yields itself as its only gram.
    """
    s = text.casefold()
    if not s:
        return set()
    if len(s) < n:
        return {s}
    return {s[i : i + n] for i in range(len(s) - n + 1)}


def _record_grams(values, n: int) -> set[str]:
    out = set()
    for v in values:
        out |= grams(v, n)
    return out


def candidate_pairs(a: Dataset, b: Dataset, gram_size: int = DEFAULT_GRAM_SIZE) -> CandidatePairs:
    """All (A, B) record pairs sharing at least one gram in any field.

    An inverted index over B's grams is probed with each A record, so the
    cost scales with the number of shared-gram postings rather than with
    ``|A| * |B|``.
    """
    if gram_size < 1:
        raise ValueError("gram_size must be >= 1")
    index = defaultdict(list)
    for rec in b.records:
        for g in _record_grams(rec.values, gram_size):
            index[g].append(rec.id)
    pairs = set()
    for rec in a.records:
        hits = set()
        for g in _record_grams(rec.values, gram_size):
            posting = index.get(g)
            if posting:
                hits.update(posting)
        pairs.update((rec.id, bid) for bid in hits)
    return CandidatePairs(frozenset(pairs))


def blocker_recall(c: CandidatePairs, gold: GoldLabels) -> float:
    if gold.m == 0:
        raise ValueError("recall is undefined with no gold pairs")
    return len(c.pairs & gold.pairs) / gold.m
