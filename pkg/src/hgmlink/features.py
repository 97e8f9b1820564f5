"""Comparison vectors for record pairs and their discretization."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import CorpusError, Dataset
from .similarity import DEFAULT_THETA, TfidfStats, build_tfidf, soft_tfidf

__all__ = [
    "ComparisonVector",
    "DiscreteVector",
    "FeatureTable",
    "field_stats",
    "featurize",
    "featurize_pairs",
    "discretize",
    "discretize_matrix",
    "write_features",
    "read_features",
]

DEFAULT_LEVELS = 5
DEFAULT_BINARY_THRESHOLD = 0.8


@dataclass(frozen=True)
class ComparisonVector:
    pair: tuple[str, str]
    f: np.ndarray


@dataclass(frozen=True)
class DiscreteVector:
    pair: tuple[str, str]
    w: np.ndarray
    d: int
    thresholds: tuple | None = None


@dataclass
class FeatureTable:
    """Comparison vectors for many pairs, stored as one ``(n, k)`` array."""

    pairs: list
    F: np.ndarray
    field_names: tuple

    def __len__(self) -> int:
        return len(self.pairs)

    def vector(self, i: int) -> ComparisonVector:
        return ComparisonVector(self.pairs[i], self.F[i])

    def subset(self, idx) -> "FeatureTable":
        idx = np.asarray(idx, dtype=int)
        return FeatureTable([self.pairs[i] for i in idx], self.F[idx], self.field_names)


def field_stats(a: Dataset, b: Dataset) -> list[TfidfStats]:
    """Per-field token statistics over the records of both lists."""
    return [_stats_over(a, b, i) for i in range(a.schema.k)]


def _stats_over(a: Dataset, b: Dataset, i: int) -> TfidfStats:
    sa, sb = build_tfidf(a, i), build_tfidf(b, i)
    df = dict(sa.doc_freq)
    for tok, c in sb.doc_freq.items():
        df[tok] = df.get(tok, 0) + c
    return TfidfStats(df, sa.doc_count + sb.doc_count)


def featurize(pair, a: Dataset, b: Dataset, stats: Sequence[TfidfStats],
              theta: float = DEFAULT_THETA) -> ComparisonVector:
    ra, rb = a.get(pair[0]), b.get(pair[1])
    f = np.array([soft_tfidf(x, y, st, theta) for x, y, st in zip(ra.values, rb.values, stats)])
    return ComparisonVector((pair[0], pair[1]), f)


def featurize_pairs(pairs, a: Dataset, b: Dataset, stats: Sequence[TfidfStats] | None = None,
                    theta: float = DEFAULT_THETA) -> FeatureTable:
    """Featurize pairs in the given order, caching repeated value pairs per field."""
    if stats is None:
        stats = field_stats(a, b)
    pairs = [(p[0], p[1]) for p in pairs]
    k = a.schema.k
    F = np.empty((len(pairs), k))
    caches = [dict() for _ in range(k)]
    for row, (ia, ib) in enumerate(pairs):
        va, vb = a.get(ia).values, b.get(ib).values
        for i in range(k):
            key = (va[i], vb[i])
            val = caches[i].get(key)
            if val is None:
                val = soft_tfidf(va[i], vb[i], stats[i], theta)
                caches[i][key] = val
            F[row, i] = val
    return FeatureTable(pairs, F, tuple(a.schema.field_names))


def discretize_matrix(F, d: int = DEFAULT_LEVELS, thresholds=None) -> np.ndarray:
    """Map similarities in [0, 1] to integer levels ``0 .. d-1``.

    With ``d == 2`` level 1 means ``f > threshold`` (strictly); the
    threshold defaults to 0.8 per field.  With ``d > 2`` the bins are
    equal-width on [0, 1] and ``f == 1`` lands in the top level.
    """
    if d < 2:
        raise ValueError("need at least two levels")
    F = np.asarray(F, dtype=float)
    if d == 2:
        if thresholds is None:
            thresholds = np.full(F.shape[-1], DEFAULT_BINARY_THRESHOLD)
        th = np.broadcast_to(np.asarray(thresholds, dtype=float), F.shape[-1:])
        return (F > th).astype(np.int64)
    return np.minimum(np.floor(F * d), d - 1).astype(np.int64).clip(0, d - 1)


def discretize(v: ComparisonVector, d: int = DEFAULT_LEVELS, thresholds=None) -> DiscreteVector:
    w = discretize_matrix(v.f[None, :], d, thresholds)[0]
    th = None
    if d == 2:
        th = tuple(np.broadcast_to(
            np.asarray(DEFAULT_BINARY_THRESHOLD if thresholds is None else thresholds, dtype=float),
            v.f.shape,
        ))
    return DiscreteVector(v.pair, w, d, th)


def write_features(table: FeatureTable, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id_a", "id_b", *table.field_names])
        for (ia, ib), row in zip(table.pairs, table.F):
            writer.writerow([ia, ib, *(repr(float(x)) for x in row)])


def read_features(path) -> FeatureTable:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 3:
            raise CorpusError(f"{path}: feature file needs id_a, id_b and field columns")
        pairs, rows = [], []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise CorpusError(f"{path}: line {reader.line_num}: wrong column count")
            pairs.append((row[0], row[1]))
            rows.append([float(x) for x in row[2:]])
    F = np.array(rows, dtype=float).reshape(len(rows), len(header) - 2)
    return FeatureTable(pairs, F, tuple(header[2:]))
