"""String similarity: Jaro-Winkler and corpus-weighted SoftTFIDF."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

from .corpus import Dataset

__all__ = [
    "TfidfStats",
    "jaro",
    "jaro_winkler",
    "tokenize",
    "build_tfidf",
    "soft_tfidf",
    "DEFAULT_THETA",
]

WINKLER_SCALE = 0.1
WINKLER_PREFIX_CAP = 4
DEFAULT_THETA = 0.9


@lru_cache(maxsize=1 << 18)
def jaro(s: str, t: str) -> float:
    if s == t:
        return 1.0
    ls, lt = len(s), len(t)
    if ls == 0 or lt == 0:
        return 0.0
    window = max(max(ls, lt) // 2 - 1, 0)
    s_flags = [False] * ls
    t_flags = [False] * lt
    matches = 0
    for i, ch in enumerate(s):
        lo = max(0, i - window)
        hi = min(lt, i + window + 1)
        for j in range(lo, hi):
            if not t_flags[j] and t[j] == ch:
                s_flags[i] = t_flags[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0
    half_transpositions = 0
    j = 0
    for i in range(ls):
        if s_flags[i]:
            while not t_flags[j]:
                j += 1
            if s[i] != t[j]:
                half_transpositions += 1
            j += 1
    transpositions = half_transpositions / 2.0
    m = float(matches)
    return (m / ls + m / lt + (m - transpositions) / m) / 3.0


@lru_cache(maxsize=1 << 18)
def jaro_winkler(s: str, t: str) -> float:
    """Jaro similarity with the Winkler common-prefix boost.

    Two empty strings score 1 (they are equal); empty against nonempty
    scores 0.
    """
    if s == t:
        return 1.0
    j = jaro(s, t)
    prefix = 0
    for a, b in zip(s[:WINKLER_PREFIX_CAP], t[:WINKLER_PREFIX_CAP]):
        if a != b:
            break
        prefix += 1
    return j + prefix * WINKLER_SCALE * (1.0 - j)


def tokenize(text: str) -> list[str]:
    return text.casefold().split()


@dataclass(frozen=True, eq=False)
class TfidfStats:
    """Document frequencies of one field's tokens.

    Each record's field value is one document.  Instances compare and hash
    by identity so they can key the weight cache.
    """

    doc_freq: dict
    doc_count: int

    def idf(self, token: str) -> float:
        df = self.doc_freq.get(token, 0)
        if self.doc_count == 0:
            return 0.0
        # unseen tokens are treated as seen once
        return math.log(self.doc_count / max(df, 1))

    def weights(self, text: str) -> dict:
        """L2-normalized ``log(tf + 1) * idf`` weights of ``text``'s tokens.

        If every token has zero idf the weights are uniform over the
        distinct tokens, so identical strings still score 1.
        """
        return _weights(self, text)


@lru_cache(maxsize=1 << 16)
def _weights(stats: TfidfStats, text: str) -> dict:
    tf = Counter(tokenize(text))
    if not tf:
        return {}
    raw = {tok: math.log(c + 1.0) * stats.idf(tok) for tok, c in tf.items()}
    norm = math.sqrt(sum(v * v for v in raw.values()))
    if norm == 0.0:
        u = 1.0 / math.sqrt(len(tf))
        return {tok: u for tok in tf}
    return {tok: v / norm for tok, v in raw.items()}


def build_tfidf(dataset: Dataset, field_index: int) -> TfidfStats:
    if not 0 <= field_index < dataset.schema.k:
        raise IndexError(f"field index {field_index} out of range for k={dataset.schema.k}")
    df = Counter()
    for value in dataset.column(field_index):
        df.update(set(tokenize(value)))
    return TfidfStats(dict(df), len(dataset))


def soft_tfidf(s: str, t: str, stats: TfidfStats, theta: float = DEFAULT_THETA) -> float:
    """SoftTFIDF similarity of ``s`` to ``t``.

    Each token ``w`` of ``s`` is paired with its closest token ``v`` of
    ``t`` under Jaro-Winkler; pairs scoring at least ``theta`` contribute
    ``V(w, s) * V(v, t) * jw(w, v)``.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    ws = stats.weights(s)
    wt = stats.weights(t)
    if not ws or not wt:
        return 0.0
    total = 0.0
    for w, vw in ws.items():
        best_tok, best = None, -1.0
        for v in wt:
            sim = jaro_winkler(w, v)
            if sim > best or (sim == best and v < best_tok):
                best_tok, best = v, sim
        if best >= theta:
            total += vw * wt[best_tok] * best
    return min(max(total, 0.0), 1.0)
