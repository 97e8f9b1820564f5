"""Ranking, ranking metrics, and k-fold cross-validation."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .corpus import GoldLabels

__all__ = [
    "RECALL_LEVELS",
    "RankedEvaluation",
    "CrossValidation",
    "rank_pairs",
    "ranking_metrics",
    "evaluate_scores",
    "stratified_folds",
    "cross_validate",
    "write_ranking",
    "read_ranking",
    "metrics_items",
    "write_metrics",
]

RECALL_LEVELS = tuple(i / 10 for i in range(11))
_AP_BITS = 256


@dataclass
class RankedEvaluation:
    """A ranking scored against gold labels.

    ``correct[i]`` is ``c(i + 1)``, the number of gold pairs in the top
    ``i + 1`` ranks; ``hits[i]`` is ``delta(i + 1)``.
    """

    ranked: list
    scores: np.ndarray
    m: int
    hits: np.ndarray
    correct: np.ndarray
    avg_precision: float
    max_f1: float
    interp_precision: np.ndarray

    @property
    def N(self) -> int:
        return len(self.ranked)

    def summary(self) -> dict:
        return {
            "avg_precision": self.avg_precision,
            "max_f1": self.max_f1,
            "interp_precision": [float(x) for x in self.interp_precision],
            "N": self.N,
            "m": self.m,
            "found": int(self.correct[-1]) if self.N else 0,
        }


def rank_pairs(scores: Mapping) -> list[tuple[tuple[str, str], float]]:
    """Sort ``pair -> score`` by descending score, ties by pair id."""
    for pair, s in scores.items():
        if not math.isfinite(s):
            raise ValueError(f"score for pair {pair} is not finite: {s}")
    return sorted(((tuple(p), float(s)) for p, s in scores.items()), key=lambda t: (-t[1], t[0]))


def ranking_metrics(ranked, gold: GoldLabels) -> RankedEvaluation:
    """Average precision, max F1 and 11-point interpolated precision.

    ``ranked`` is a list of pairs or of ``(pair, score)`` items, best
    first.  Gold pairs missing from the ranking count as never found.
    """
    m = gold.m
    if m == 0:
        raise ValueError("metrics are undefined with no gold pairs")
    pairs, scores = [], []
    for item in ranked:
        if len(item) == 2 and isinstance(item[0], tuple):
            pairs.append(item[0])
            scores.append(item[1])
        else:
            pairs.append(tuple(item))
            scores.append(np.nan)
    hits = np.array([p in gold.pairs for p in pairs], dtype=np.int64)
    correct = np.cumsum(hits)
    ranks = np.arange(1, len(pairs) + 1)
    if len(pairs) == 0:
        return RankedEvaluation([], np.array([]), m, hits, correct, 0.0, 0.0,
                                np.zeros(len(RECALL_LEVELS)))
    precision = correct / ranks
    # fixed point with 256 fractional bits, then one correctly rounded division
    scaled = sum((int(c) << _AP_BITS) // int(i) for c, i, h in zip(correct, ranks, hits) if h)
    ap = scaled / (m << _AP_BITS)
    # 2pr / (p + r) simplifies to 2c / (i + m): one rounding instead of several
    f1 = 2 * correct / (ranks + m)
    # recall >= j/10 compared in integers to avoid rounding at the boundary
    interp = np.array([
        float(precision[reach].max()) if np.any(reach := 10 * correct >= j * m) else 0.0
        for j in range(len(RECALL_LEVELS))
    ])
    return RankedEvaluation(pairs, np.asarray(scores, dtype=float), m, hits, correct,
                            ap, float(f1.max()), interp)


def evaluate_scores(pairs, scores, gold: GoldLabels) -> RankedEvaluation:
    return ranking_metrics(rank_pairs(dict(zip(map(tuple, pairs), scores))), gold)


# ---------------------------------------------------------------------------
# cross-validation


@dataclass
class CrossValidation:
    folds: list
    per_fold: list = field(default_factory=list)

    @property
    def mean(self) -> dict:
        keys = ("avg_precision", "max_f1")
        out = {k: float(np.mean([f[k] for f in self.per_fold])) for k in keys}
        out["interp_precision"] = [
            float(x) for x in np.mean([f["interp_precision"] for f in self.per_fold], axis=0)
        ]
        return out


def stratified_folds(labels, folds: int, seed: int) -> list[np.ndarray]:
    """Split indices into ``folds`` parts, stratified by 0/1 label, seeded."""
    if folds < 2:
        raise ValueError("need at least two folds")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    parts = [[] for _ in range(folds)]
    for cls in (1, 0):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        offset = 0 if cls == 1 else int(np.sum(labels == 1)) % folds
        for j, i in enumerate(idx):
            parts[(j + offset) % folds].append(int(i))
    return [np.array(sorted(p), dtype=np.int64) for p in parts]


def cross_validate(pairs, gold: GoldLabels,
                   fit_score: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
                   folds: int = 3, seed: int = 0,
                   label_fraction: float = 1.0) -> CrossValidation:
    """Evaluate a (semi-)supervised method by stratified k-fold splitting of pairs.

    Parameters
    ----------
    pairs : sequence of (id_a, id_b)
        The candidate pairs.
    fit_score : callable
        ``fit_score(train_idx, train_labels, test_idx)`` trains on the
        training pairs and returns one score per test pair.  Training
        labels are 0/1, or -1 for pairs whose label is withheld.
    label_fraction : float
        Share of training pairs that keep their label (1/3 for
        semi-supervised methods); chosen with the same seed.

    Gold pairs the candidate set missed are spread over the folds too, so
    each fold's recall ceiling reflects the blocker's losses.
    """
    pairs = [tuple(p) for p in pairs]
    y = np.array([p in gold.pairs for p in pairs], dtype=np.int64)
    parts = stratified_folds(y, folds, seed)
    missed = sorted(gold.pairs - set(pairs))
    rng = np.random.default_rng([seed, 1])
    missed_fold = rng.permutation(len(missed)) % folds if missed else np.array([], dtype=int)
    for f, test in enumerate(parts):
        if not y[test].any():
            raise ValueError(f"fold {f} has no matching pairs; use fewer folds")
    cv = CrossValidation(parts)
    for f, test in enumerate(parts):
        train = np.sort(np.concatenate([parts[g] for g in range(folds) if g != f]))
        labels = y[train].copy()
        if label_fraction < 1.0:
            keep = np.zeros(len(train), dtype=bool)
            sub = np.random.default_rng([seed, 2, f])
            n_keep = int(round(label_fraction * len(train)))
            keep[sub.permutation(len(train))[:n_keep]] = True
            labels[~keep] = -1
        scores = np.asarray(fit_score(train, labels, test), dtype=float)
        fold_gold = GoldLabels(frozenset(
            [pairs[i] for i in test if y[i]]
            + [p for p, mf in zip(missed, missed_fold) if mf == f]
        ))
        ev = evaluate_scores([pairs[i] for i in test], scores, fold_gold)
        cv.per_fold.append(ev.summary())
    return cv


# ---------------------------------------------------------------------------
# reports


def write_ranking(ranked, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id_a", "id_b", "score"])
        for (a, b), s in ranked:
            writer.writerow([a, b, format(float(s), ".17g")])


def read_ranking(path) -> list[tuple[tuple[str, str], float]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        return [((r[0], r[1]), float(r[2])) for r in reader if r]


def metrics_items(summary: dict, prefix: str = "") -> list[tuple[str, object]]:
    """Flatten a metrics summary into ``key = value`` items."""
    items = []
    for key, value in summary.items():
        if isinstance(value, dict):
            items += metrics_items(value, f"{prefix}{key}.")
        elif isinstance(value, list):
            for r, v in zip(RECALL_LEVELS, value):
                items.append((f"{prefix}{key}@{r:.1f}", float(v)))
        else:
            items.append((f"{prefix}{key}", value))
    return items


def write_metrics(summary: dict, text_path, json_path) -> None:
    from .serialize import dump_kv

    dump_kv(metrics_items(summary), text_path)
    Path(json_path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                               encoding="utf-8")
