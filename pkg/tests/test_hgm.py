import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hgmlink.hgm import (MAX_ENUM_FIELDS, FitTrace, HgmModel, ThreeLayerModel, anchored_init,
                         bootstrap_labels, chow_liu_tree, enumerate_configs, expected_stats,
                         fit_hgm, fit_three_layer, load_hgm, load_three_layer, log_evidence,
                         mutual_information, posterior_all_match, posterior_configs,
                         save_hgm, save_three_layer, structure_score, three_layer_posterior)

from hgm_helpers import random_model, sample
from oracles import all_match_reference, joint_table, spanning_forests

seeds = st.integers(0, 2 ** 32 - 1)


def all_vectors(k, d):
    return np.array(list(itertools.product(range(d), repeat=k)))


class TestInference:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 5), st.integers(2, 3), seeds)
    def test_matches_joint_table(self, k, d, seed):
        rng = np.random.default_rng(seed)
        m = random_model(rng, k, d)
        W = all_vectors(k, d)
        want = [all_match_reference(m.parents, m.prior, m.edge, m.emissions, w) for w in W]
        np.testing.assert_allclose(posterior_all_match(m, W, "tree"), want, atol=1e-12)
        np.testing.assert_allclose(posterior_all_match(m, W, "enumerate"), want, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), seeds)
    def test_evidence(self, k, seed):
        rng = np.random.default_rng(seed)
        m = random_model(rng, k, 3)
        for w in all_vectors(k, 3)[:20]:
            table = joint_table(m.parents, m.prior, m.edge, m.emissions, w)
            assert log_evidence(m, w)[0] == pytest.approx(np.log(sum(table.values())), abs=1e-12)

    def test_single_field(self):
        m = HgmModel(np.array([-1]), np.array([0.4]), np.zeros((1, 2)),
                     np.array([[[0.7, 0.3], [0.2, 0.8]]]))
        want = 0.4 * 0.8 / (0.4 * 0.8 + 0.6 * 0.3)
        assert posterior_all_match(m, np.array([1])) == pytest.approx(want, abs=1e-15)

    def test_uninformative_emissions(self):
        m = HgmModel(np.full(3, -1), np.full(3, 0.5), np.full((3, 2), 0.5), np.full((3, 2, 4), 0.25))
        np.testing.assert_allclose(posterior_configs(m, [[0, 3, 1]]), 1 / 8, atol=1e-15)
        assert posterior_all_match(m, np.array([2, 2, 2])) == pytest.approx(1 / 8)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 4), seeds)
    def test_pairwise_marginals(self, k, seed):
        rng = np.random.default_rng(seed)
        m = random_model(rng, k, 3)
        w = rng.integers(0, 3, k)
        table = joint_table(m.parents, m.prior, m.edge, m.emissions, w)
        z = sum(table.values())
        stats = expected_stats(m, w[None])
        for i, j in itertools.combinations(range(k), 2):
            for a, b in itertools.product((0, 1), repeat=2):
                want = sum(v for x, v in table.items() if x[i] == a and x[j] == b) / z
                assert stats.pair[i, j, a, b] == pytest.approx(want, abs=1e-12)
        np.testing.assert_allclose(stats.node.sum(axis=1), 1.0)

    def test_configs_order(self):
        X = enumerate_configs(3)
        assert X.shape == (8, 3) and X[-1].tolist() == [1, 1, 1] and X[1].tolist() == [1, 0, 0]

    def test_too_many_fields_to_enumerate(self):
        with pytest.raises(ValueError):
            enumerate_configs(MAX_ENUM_FIELDS + 1)

    def test_field_count_checked(self):
        m = anchored_init(3, 2)
        with pytest.raises(ValueError):
            posterior_all_match(m, np.zeros((1, 4), int))
        with pytest.raises(ValueError):
            posterior_all_match(m, np.full((1, 3), 2))

    def test_cycle_rejected(self):
        m = anchored_init(2, 2)
        m.parents = np.array([1, 0])
        with pytest.raises(ValueError):
            m.node_order()


class TestSemanticReduction:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 4), seeds)
    def test_three_layer_equals_reduced(self, k, seed):
        rng = np.random.default_rng(seed)
        base = random_model(rng, k, 3)
        W = all_vectors(k, 3)
        np.testing.assert_allclose(three_layer_posterior(ThreeLayerModel.semantic(base), W),
                                   posterior_all_match(base, W), atol=1e-12)


def _stats_from_joint(joint):
    """Expected statistics carrying an exact latent joint over ``k`` nodes."""
    k = joint.ndim
    node = np.zeros((k, 2))
    pair = np.zeros((k, k, 2, 2))
    for x in itertools.product((0, 1), repeat=k):
        for i in range(k):
            node[i, x[i]] += joint[x]
            for j in range(k):
                pair[i, j, x[i], x[j]] += joint[x]
    from hgmlink.hgm import ExpectedStats
    return ExpectedStats(1000.0, node * 1000, pair * 1000, np.ones((k, 2, 2)), 0.0)


class TestChowLiu:
    def test_single_node(self):
        stats = _stats_from_joint(np.array([0.3, 0.7]))
        assert chow_liu_tree(stats).tolist() == [-1]

    def test_independent_nodes_get_no_edge(self):
        joint = np.einsum("a,b,c->abc", [0.3, 0.7], [0.6, 0.4], [0.5, 0.5])
        assert chow_liu_tree(_stats_from_joint(joint)).tolist() == [-1, -1, -1]

    def test_correlated_pair_selected(self):
        joint = np.zeros((2, 2, 2))
        for a, c in itertools.product((0, 1), repeat=2):
            joint[a, a, c] = 0.25
        parents = chow_liu_tree(_stats_from_joint(joint))
        assert parents.tolist() == [-1, 0, -1]
        assert mutual_information(_stats_from_joint(joint))[0, 1] == pytest.approx(np.log(2))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 4), seeds)
    def test_optimal_over_all_forests(self, k, seed):
        rng = np.random.default_rng(seed)
        joint = rng.dirichlet(np.full(2 ** k, 0.3)).reshape((2,) * k)
        stats = _stats_from_joint(joint)
        best = structure_score(chow_liu_tree(stats), stats)
        for forest in spanning_forests(k):
            parents = np.full(k, -1)
            # orient each edge away from the lower index via BFS
            adj = {i: [] for i in range(k)}
            for i, j in forest:
                adj[i].append(j)
                adj[j].append(i)
            seen = set()
            for r in range(k):
                if r in seen:
                    continue
                seen.add(r)
                queue = [r]
                while queue:
                    u = queue.pop()
                    for v in adj[u]:
                        if v not in seen:
                            seen.add(v)
                            parents[v] = u
                            queue.append(v)
            assert structure_score(parents, stats) <= best + 1e-9

    def test_deterministic_tie_break(self):
        joint = np.zeros((2, 2, 2))
        joint[0, 0, 0] = joint[1, 1, 1] = 0.5
        assert chow_liu_tree(_stats_from_joint(joint)).tolist() == [-1, 0, 0]


class TestBootstrap:
    def test_thresholds(self):
        lab = bootstrap_labels(np.array([[0.95, 0.9, 0.5, 0.3, 0.1]]))
        assert lab.labels.tolist() == [[1, 1, -1, 0, 0]]
        assert lab.labeled_fraction == pytest.approx(0.8)

    def test_bad_thresholds(self):
        with pytest.raises(ValueError):
            bootstrap_labels(np.zeros((1, 1)), 0.3, 0.9)

    def test_clamped_fields_have_no_opposite_mass(self):
        rng = np.random.default_rng(0)
        m = random_model(rng, 3, 3, parents=[-1, 0, 1])
        W = rng.integers(0, 3, (20, 3))
        clamp = np.full((20, 3), -1)
        clamp[:, 0] = 1
        stats = expected_stats(m, W, clamp=clamp)
        assert stats.node[0, 0] == 0 and stats.emission[0, 0].sum() == 0
        assert stats.node[0, 1] == pytest.approx(20)


def chain_data(seed, n=6000):
    truth = HgmModel(np.array([-1, 0, 1, 2]), np.full(4, 0.3),
                     np.array([[0.5, 0.5], [0.05, 0.9], [0.05, 0.9], [0.05, 0.9]]),
                     np.tile(np.array([[0.6, 0.3, 0.1], [0.1, 0.2, 0.7]]), (4, 1, 1)))
    return truth, sample(truth, n, np.random.default_rng(seed))[0]


class TestFit:
    def test_deterministic(self):
        _, W = chain_data(1, 500)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m1 = fit_hgm(W, 3, learn_structure=False, seed=3, max_iter=30)
            m2 = fit_hgm(W, 3, learn_structure=False, seed=3, max_iter=30)
        assert save_hgm(m1) == save_hgm(m2)

    def test_monotone_rows(self):
        _, W = chain_data(2, 800)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = fit_hgm(W, 3, monotone=True, max_iter=20)
        assert np.diff(m.emissions[:, 1, :], axis=1).min() >= -1e-6
        assert np.diff(m.emissions[:, 0, :], axis=1).max() <= 1e-6
        np.testing.assert_allclose(m.emissions.sum(axis=2), 1.0, atol=1e-9)

    def test_recovers_chain(self):
        truth, W = chain_data(0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = fit_hgm(W, 3, seed=0, max_iter=300)
        assert {frozenset(e) for e in m.edges()} == {frozenset(e) for e in truth.edges()}
        np.testing.assert_allclose(m.emissions, truth.emissions, atol=0.1)
        assert log_evidence(m, W).sum() >= log_evidence(truth, W).sum()

    @pytest.mark.parametrize("seed", range(4))
    def test_fixed_structure_likelihood_monotone(self, seed):
        truth, W = chain_data(seed, 1000)
        trace = FitTrace()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit_hgm(W, 3, learn_structure=False, structure=truth.parents, alpha=0.0,
                    tol=0.0, max_iter=40, seed=seed, trace=trace)
        assert np.diff(trace.log_likelihood).min() >= -1e-9

    @pytest.mark.parametrize("seed", range(4))
    def test_smoothed_objective_monotone(self, seed):
        _, W = chain_data(seed, 1000)
        trace = FitTrace()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit_hgm(W, 3, learn_structure=False, tol=0.0, max_iter=40, trace=trace)
        assert np.diff(trace.objective).min() >= -1e-9

    def test_structure_updates_never_lose(self):
        _, W = chain_data(5, 1000)
        trace = FitTrace()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit_hgm(W, 3, max_iter=30, trace=trace)
        assert all(new >= old - 1e-9 for old, new in trace.structure_updates)

    def test_warns_at_iteration_cap(self):
        _, W = chain_data(6, 300)
        with pytest.warns(UserWarning):
            m = fit_hgm(W, 3, max_iter=2, tol=0.0)
        assert not m.converged

    def test_bootstrap_fit(self):
        rng = np.random.default_rng(0)
        F = rng.random((200, 3))
        W = np.minimum((F * 3).astype(int), 2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = fit_hgm(W, 3, bootstrap=bootstrap_labels(F), max_iter=10, labeled_weight=2.0)
        assert np.all(np.isfinite(posterior_all_match(m, W)))
        with pytest.raises(ValueError):
            fit_hgm(W, 3, bootstrap=bootstrap_labels(F[:10]))

    @pytest.mark.parametrize("W,d", [
        (np.zeros((0, 2), int), 3),
        (np.zeros((2, MAX_ENUM_FIELDS + 1), int), 3),
        (np.full((2, 2), 3), 3),
    ])
    def test_errors(self, W, d):
        with pytest.raises(ValueError):
            fit_hgm(W, d)

    def test_three_layer_fit(self):
        _, W = chain_data(7, 400)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = fit_three_layer(W, 3, max_iter=10)
        post = three_layer_posterior(m, W)
        assert post.shape == (400,) and np.all((post >= 0) & (post <= 1))


class TestPersistence:
    def test_hgm_round_trip(self, tmp_path):
        m = random_model(np.random.default_rng(0), 4, 3)
        save_hgm(m, tmp_path / "m.txt")
        back = load_hgm(tmp_path / "m.txt")
        for name in ("parents", "prior", "edge", "emissions"):
            np.testing.assert_array_equal(getattr(back, name), getattr(m, name))

    def test_three_layer_round_trip(self, tmp_path):
        base = random_model(np.random.default_rng(1), 3, 2)
        m = ThreeLayerModel(base, np.random.default_rng(2).random(8))
        save_three_layer(m, tmp_path / "m.txt")
        back = load_three_layer(tmp_path / "m.txt")
        np.testing.assert_array_equal(back.match_cpt, m.match_cpt)
        with pytest.raises(ValueError):
            load_hgm(tmp_path / "m.txt")
