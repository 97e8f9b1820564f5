import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hgmlink.corpus import GoldLabels
from hgmlink.evaluation import (RECALL_LEVELS, cross_validate, evaluate_scores, metrics_items,
                                rank_pairs, ranking_metrics, read_ranking, stratified_folds,
                                write_metrics, write_ranking)

from oracles import metrics_reference


def ranking_from_hits(hits):
    pairs = [(f"a{i:02d}", f"b{i:02d}") for i in range(len(hits))]
    gold = {p for p, h in zip(pairs, hits) if h}
    return pairs, gold


class TestRankPairs:
    def test_sorted_descending(self):
        r = rank_pairs({("a", "x"): 0.2, ("b", "y"): 0.9, ("c", "z"): 0.5})
        assert [p for p, _ in r] == [("b", "y"), ("c", "z"), ("a", "x")]

    def test_ties_by_id(self):
        r = rank_pairs({("b", "1"): 0.5, ("a", "2"): 0.5, ("a", "1"): 0.5})
        assert [p for p, _ in r] == [("a", "1"), ("a", "2"), ("b", "1")]

    @pytest.mark.parametrize("bad", [float("nan"), float("inf")])
    def test_non_finite(self, bad):
        with pytest.raises(ValueError, match="'a'"):
            rank_pairs({("a", "b"): bad})


class TestMetrics:
    def test_hand_case(self):
        ev = ranking_metrics([("a1", "b1"), ("a2", "b2"), ("a3", "b3")],
                             GoldLabels(frozenset({("a1", "b1"), ("a3", "b3")})))
        assert ev.avg_precision == pytest.approx(0.5 * (1 + 2 / 3), abs=1e-12)
        assert round(ev.avg_precision, 4) == 0.8333
        assert ev.correct.tolist() == [1, 1, 2]

    def test_perfect(self):
        pairs, gold = ranking_from_hits([1, 1, 0, 0])
        ev = ranking_metrics(pairs, GoldLabels(frozenset(gold)))
        assert ev.avg_precision == 1.0 and ev.max_f1 == 1.0
        assert ev.interp_precision.tolist() == [1.0] * 11

    def test_missed_gold_lowers_recall(self):
        pairs, gold = ranking_from_hits([1, 0])
        ev = ranking_metrics(pairs, GoldLabels(frozenset(gold | {("zz", "zz")})))
        assert ev.avg_precision == 0.5 and ev.interp_precision[-1] == 0.0

    def test_no_gold(self):
        with pytest.raises(ValueError):
            ranking_metrics([("a", "b")], GoldLabels(frozenset()))

    def test_empty_ranking(self):
        ev = ranking_metrics([], GoldLabels(frozenset({("a", "b")})))
        assert ev.avg_precision == 0.0 and ev.N == 0

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=50), st.integers(0, 5))
    def test_brute_force_oracle(self, hits, extra):
        m = sum(hits) + extra
        if m == 0:
            return
        pairs, gold = ranking_from_hits(hits)
        gold |= {(f"x{i}", f"y{i}") for i in range(extra)}
        ev = ranking_metrics(pairs, GoldLabels(frozenset(gold)))
        ap, f1, interp = metrics_reference(hits, m)
        assert ev.avg_precision == ap
        assert ev.max_f1 == f1
        assert ev.interp_precision.tolist() == interp
        assert np.all(np.diff(ev.interp_precision) <= 0)
        assert 0 <= ev.avg_precision <= 1 and 0 <= ev.max_f1 <= 1
        assert ev.interp_precision[0] == max(ev.correct / np.arange(1, len(hits) + 1))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(-50, 50), min_size=3, max_size=30, unique=True),
           st.integers(0, 2 ** 32 - 1))
    def test_monotone_transform_invariance(self, scores, seed):
        rng = np.random.default_rng(seed)
        pairs = [(f"a{i:02d}", "b") for i in range(len(scores))]
        gold = GoldLabels(frozenset(p for p in pairs if rng.random() < 0.4) | {pairs[0]})
        s = np.array(scores, dtype=float) / 10
        base = evaluate_scores(pairs, s, gold)
        moved = evaluate_scores(pairs, np.exp(s) * 3 + 1, gold)
        assert base.avg_precision == moved.avg_precision
        assert base.ranked == moved.ranked


class TestFolds:
    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=6, max_size=80), st.integers(2, 5),
           st.integers(0, 1000))
    def test_partition(self, labels, folds, seed):
        parts = stratified_folds(labels, folds, seed)
        joined = np.sort(np.concatenate(parts))
        assert joined.tolist() == list(range(len(labels)))
        pos = [int(np.sum(np.asarray(labels)[p])) for p in parts]
        assert max(pos) - min(pos) <= 1
        assert [p.tolist() for p in stratified_folds(labels, folds, seed)] == \
            [p.tolist() for p in parts]

    def test_needs_two(self):
        with pytest.raises(ValueError):
            stratified_folds([0, 1], 1, 0)


class TestCrossValidate:
    def setup_method(self):
        self.pairs = [(f"a{i:02d}", f"b{i:02d}") for i in range(30)]
        self.gold = GoldLabels(frozenset(self.pairs[:9]))

    def test_oracle_scores_match_direct_evaluation(self):
        y = np.array([p in self.gold.pairs for p in self.pairs], dtype=float)
        seen = []

        def fit_score(train, labels, test):
            assert not set(train) & set(test)
            np.testing.assert_array_equal(labels, y[train])
            seen.append(test)
            return y[test] + 0.01 * test

        cv = cross_validate(self.pairs, self.gold, fit_score, folds=3, seed=4)
        for test, fold in zip(seen, cv.per_fold):
            gold = GoldLabels(frozenset(self.pairs[i] for i in test if y[i]))
            direct = evaluate_scores([self.pairs[i] for i in test], y[test] + 0.01 * test, gold)
            assert fold == direct.summary()
        assert cv.mean["avg_precision"] == 1.0

    def test_withheld_labels(self):
        def fit_score(train, labels, test):
            assert np.sum(labels != -1) == round(len(train) / 3)
            return np.zeros(len(test))

        cross_validate(self.pairs, self.gold, fit_score, folds=3, label_fraction=1 / 3)

    def test_fold_without_positives(self):
        gold = GoldLabels(frozenset(self.pairs[:1]))
        with pytest.raises(ValueError, match="fewer folds"):
            cross_validate(self.pairs, gold, lambda a, b, c: np.zeros(len(c)))

    def test_missed_gold_spread(self):
        gold = GoldLabels(self.gold.pairs | {("zz", f"{i}") for i in range(6)})
        y = np.array([p in gold.pairs for p in self.pairs], dtype=float)
        cv = cross_validate(self.pairs, gold, lambda tr, lab, te: y[te], folds=3)
        assert sum(f["m"] for f in cv.per_fold) == 15


class TestReports:
    def test_ranking_round_trip(self, tmp_path):
        ranked = rank_pairs({("a", "b"): 0.1 + 0.2, ("c", "d"): 1 / 3})
        write_ranking(ranked, tmp_path / "r.csv")
        assert read_ranking(tmp_path / "r.csv") == ranked

    def test_metrics_files(self, tmp_path):
        pairs, gold = ranking_from_hits([1, 0, 1])
        summary = {"method": "x", "ranking": ranking_metrics(pairs, GoldLabels(frozenset(gold))).summary()}
        write_metrics(summary, tmp_path / "m.txt", tmp_path / "m.json")
        assert json.loads((tmp_path / "m.json").read_text()) == summary
        text = (tmp_path / "m.txt").read_text()
        assert "ranking.avg_precision = " in text and "ranking.interp_precision@0.5" in text
        keys = [k for k, _ in metrics_items(summary)]
        assert len([k for k in keys if "interp" in k]) == len(RECALL_LEVELS)
