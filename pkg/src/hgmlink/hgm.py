"""Hierarchical latent-variable model for record linkage.

Each field ``i`` has a binary latent match variable ``x_i`` that emits the
field's discretized similarity level.  The latent layer is a directed
forest (every node has at most one parent).  A record pair matches
exactly when every field matches, so the match probability of a pair is
``P(x = all ones | w)``.

Inference is exact: by enumerating the ``2**k`` latent configurations or
by upward message passing on the forest.  Fitting is (structural) EM with
Laplace-smoothed M-steps, optional order-constrained emission rows, and
optional clamping of latent fields to noisy single-field labels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .monotone import DEFAULT_STEEPNESS, fit_monotone_decreasing, fit_monotone_multinomial
from .serialize import dump_kv, floats, ints, load_kv

__all__ = [
    "MAX_ENUM_FIELDS",
    "HgmModel",
    "ThreeLayerModel",
    "NoisyLabeling",
    "ExpectedStats",
    "FitTrace",
    "enumerate_configs",
    "posterior_all_match",
    "posterior_configs",
    "log_evidence",
    "expected_stats",
    "mutual_information",
    "chow_liu_tree",
    "structure_score",
    "bootstrap_labels",
    "anchored_init",
    "random_init",
    "fit_hgm",
    "fit_three_layer",
    "three_layer_posterior",
    "save_hgm",
    "load_hgm",
    "save_three_layer",
    "load_three_layer",
]

MAX_ENUM_FIELDS = 20
MI_THRESHOLD = 1e-6
UNLABELED = -1


@dataclass
class HgmModel:
    """Two-layer latent forest model.

    Attributes
    ----------
    parents : int array (k,)
        Parent index of each latent node, ``-1`` for roots.
    prior : float array (k,)
        ``P(x_i = 1)`` for root nodes (ignored for non-roots).
    edge : float array (k, 2)
        ``edge[i, v] = P(x_i = 1 | x_parent = v)`` (ignored for roots).
    emissions : float array (k, 2, d)
        ``emissions[i, c, l] = P(w_i = l | x_i = c)``.
    """

    parents: np.ndarray
    prior: np.ndarray
    edge: np.ndarray
    emissions: np.ndarray
    monotone: bool = False
    a: float = DEFAULT_STEEPNESS
    converged: bool = True

    @property
    def k(self) -> int:
        return self.emissions.shape[0]

    @property
    def d(self) -> int:
        return self.emissions.shape[2]

    def edges(self) -> list[tuple[int, int]]:
        return [(int(p), i) for i, p in enumerate(self.parents) if p >= 0]

    def node_order(self) -> list[int]:
        """Parents before children."""
        order, seen = [], set()
        children = _children(self.parents)
        stack = [i for i in range(self.k) if self.parents[i] < 0][::-1]
        while stack:
            i = stack.pop()
            order.append(i)
            seen.add(i)
            stack.extend(children[i][::-1])
        if len(order) != self.k:
            raise ValueError("latent structure has a cycle")
        return order


def _children(parents) -> list[list[int]]:
    out = [[] for _ in range(len(parents))]
    for i, p in enumerate(parents):
        if p >= 0:
            out[int(p)].append(i)
    return out


def _check_forest(parents) -> None:
    k = len(parents)
    for i, p in enumerate(parents):
        if p == i or p >= k or p < -1:
            raise ValueError(f"bad parent {p} for node {i}")
    HgmModel(np.asarray(parents), np.zeros(k), np.zeros((k, 2)), np.ones((k, 2, 1))).node_order()


# ---------------------------------------------------------------------------
# inference


def enumerate_configs(k: int) -> np.ndarray:
    """``(2**k, k)`` 0/1 matrix; row ``c`` holds the bits of ``c``."""
    if k > MAX_ENUM_FIELDS:
        raise ValueError(
            f"k={k} is too large to enumerate (limit {MAX_ENUM_FIELDS}); use tree elimination"
        )
    idx = np.arange(2 ** k)
    return ((idx[:, None] >> np.arange(k)[None, :]) & 1).astype(np.int8)


def _latent_log_prior(model: HgmModel, X: np.ndarray) -> np.ndarray:
    """``log P(x)`` for every row of the configuration matrix."""
    out = np.zeros(X.shape[0])
    for i in range(model.k):
        p = model.parents[i]
        if p < 0:
            p1 = np.full(X.shape[0], model.prior[i])
        else:
            p1 = model.edge[i, X[:, p]]
        out += np.where(X[:, i] == 1, np.log(p1), np.log1p(-p1))
    return out


def _emission_terms(model: HgmModel, W: np.ndarray) -> np.ndarray:
    """``(n, k, 2)`` array of ``log P(w_i | x_i = c)``."""
    logE = np.log(model.emissions)
    k = model.k
    return np.stack([logE[i][:, W[:, i]].T for i in range(k)], axis=1)


def _log_joint(model: HgmModel, W: np.ndarray, X: np.ndarray, clamp=None) -> np.ndarray:
    """``(n, 2**k)`` matrix of ``log P(x, w)``; clamped fields restrict ``x``."""
    em = _emission_terms(model, W)
    out = np.broadcast_to(_latent_log_prior(model, X), (W.shape[0], X.shape[0])).copy()
    for i in range(model.k):
        out += em[:, i, :][:, X[:, i]]
    if clamp is not None:
        for i in range(model.k):
            lab = clamp[:, i]
            bad = (lab[:, None] != UNLABELED) & (lab[:, None] != X[None, :, i])
            out[bad] = -np.inf
    return out


def posterior_configs(model: HgmModel, W, clamp=None) -> np.ndarray:
    """``P(x | w)`` over all ``2**k`` configurations, one row per vector."""
    W = np.atleast_2d(np.asarray(W, dtype=np.int64))
    X = enumerate_configs(model.k)
    lj = _log_joint(model, W, X, clamp)
    return np.exp(lj - logsumexp(lj, axis=1, keepdims=True))


def log_evidence(model: HgmModel, W) -> np.ndarray:
    """``log P(w)`` by upward message passing on the forest."""
    W = np.atleast_2d(np.asarray(W, dtype=np.int64))
    em = _emission_terms(model, W)
    n = W.shape[0]
    belief = [em[:, i, :].copy() for i in range(model.k)]
    total = np.zeros(n)
    for i in reversed(model.node_order()):
        p = model.parents[i]
        if p < 0:
            lp = np.log(np.array([1.0 - model.prior[i], model.prior[i]]))
            total += logsumexp(belief[i] + lp[None, :], axis=1)
        else:
            # cpt[v, c] = P(x_i = c | x_p = v)
            cpt = np.log(np.array([[1.0 - model.edge[i, 0], model.edge[i, 0]],
                                   [1.0 - model.edge[i, 1], model.edge[i, 1]]]))
            msg = logsumexp(belief[i][:, None, :] + cpt[None, :, :], axis=2)
            belief[p] = belief[p] + msg
    return total


def _log_all_ones(model: HgmModel, W: np.ndarray) -> np.ndarray:
    em = _emission_terms(model, W)
    out = em[:, :, 1].sum(axis=1)
    for i in range(model.k):
        p = model.parents[i]
        out += np.log(model.prior[i] if p < 0 else model.edge[i, 1])
    return out


def posterior_all_match(model: HgmModel, W, method: str = "tree"):
    """``P(x = all ones | w)``, the pair's match probability.

    ``method`` is ``"tree"`` (message passing, any ``k``) or
    ``"enumerate"`` (sums over ``2**k`` configurations, ``k <= 20``).
    Accepts one vector or a 2-d array of vectors.
    """
    W = np.asarray(W, dtype=np.int64)
    single = W.ndim == 1
    W2 = np.atleast_2d(W)
    if W2.shape[1] != model.k:
        raise ValueError(f"vectors have {W2.shape[1]} fields, model has {model.k}")
    if W2.size and (W2.min() < 0 or W2.max() >= model.d):
        raise ValueError("levels out of range for the model")
    if method == "enumerate":
        X = enumerate_configs(model.k)
        lj = _log_joint(model, W2, X)
        post = np.exp(lj[:, -1] - logsumexp(lj, axis=1))
    elif method == "tree":
        post = np.exp(_log_all_ones(model, W2) - log_evidence(model, W2))
    else:
        raise ValueError(f"unknown method {method!r}")
    return post[0] if single else post


# ---------------------------------------------------------------------------
# expected statistics


@dataclass
class ExpectedStats:
    """Weighted expected counts from one E-step.

    ``node[i, c]`` sums ``P(x_i = c | w)``; ``pair[i, j, a, b]`` sums
    ``P(x_i = a, x_j = b | w)``; ``emission[i, c, l]`` sums
    ``P(x_i = c | w)`` over vectors with ``w_i = l``.
    """

    total: float
    node: np.ndarray
    pair: np.ndarray
    emission: np.ndarray
    log_likelihood: float
    posteriors: np.ndarray | None = None


def expected_stats(model: HgmModel, W, weights=None, clamp=None,
                   keep_posteriors: bool = False) -> ExpectedStats:
    W = np.atleast_2d(np.asarray(W, dtype=np.int64))
    n, k = W.shape
    d = model.d
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    X = enumerate_configs(k)
    lj = _log_joint(model, W, X, clamp)
    norm = logsumexp(lj, axis=1)
    post = np.exp(lj - norm[:, None])
    config_mass = w @ post
    Xf = X.astype(float)
    # both marginals are summed directly so clamped-out values stay exactly 0
    node = np.column_stack([config_mass @ (1.0 - Xf), config_mass @ Xf])
    pair = np.empty((k, k, 2, 2))
    for av in (0, 1):
        A = Xf if av else 1.0 - Xf
        for bv in (0, 1):
            B = Xf if bv else 1.0 - Xf
            pair[:, :, av, bv] = (A * config_mass[:, None]).T @ B
    marg1 = post @ Xf  # (n, k) P(x_i = 1 | w)
    marg0 = post @ (1.0 - Xf)
    emission = np.empty((k, 2, d))
    for i in range(k):
        emission[i, 1] = np.bincount(W[:, i], weights=w * marg1[:, i], minlength=d)
        emission[i, 0] = np.bincount(W[:, i], weights=w * marg0[:, i], minlength=d)
    return ExpectedStats(
        total=float(w.sum()),
        node=node,
        pair=pair,
        emission=emission,
        log_likelihood=float(w @ norm),
        posteriors=post if keep_posteriors else None,
    )


# ---------------------------------------------------------------------------
# structure


def mutual_information(stats: ExpectedStats) -> np.ndarray:
    """``(k, k)`` expected mutual information between latent nodes (nats)."""
    k = stats.node.shape[0]
    N = stats.total
    mi = np.zeros((k, k))
    if N <= 0:
        return mi
    P = stats.node / N
    for i in range(k):
        for j in range(i + 1, k):
            joint = stats.pair[i, j] / N
            outer = np.outer(P[i], P[j])
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = np.where(joint > 0, joint * np.log(joint / outer), 0.0)
            mi[i, j] = mi[j, i] = max(float(terms.sum()), 0.0)
    return mi


def chow_liu_tree(stats: ExpectedStats, threshold: float = MI_THRESHOLD) -> np.ndarray:
    """Maximum-weight spanning forest under expected mutual information.

    Edges with MI below ``threshold`` are left out.  Ties are broken by
    lexicographic ``(i, j)``; each component is rooted at its lowest index.
    Returns the parent array.
    """
    k = stats.node.shape[0]
    mi = mutual_information(stats)
    cand = sorted(
        ((-mi[i, j], i, j) for i in range(k) for j in range(i + 1, k) if mi[i, j] >= threshold)
    )
    comp = list(range(k))

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    adj = [[] for _ in range(k)]
    for _, i, j in cand:
        ri, rj = find(i), find(j)
        if ri != rj:
            comp[max(ri, rj)] = min(ri, rj)
            adj[i].append(j)
            adj[j].append(i)
    parents = np.full(k, -1, dtype=np.int64)
    seen = [False] * k
    for root in range(k):
        if seen[root]:
            continue
        seen[root] = True
        queue = [root]
        while queue:
            u = queue.pop(0)
            for v in sorted(adj[u]):
                if not seen[v]:
                    seen[v] = True
                    parents[v] = u
                    queue.append(v)
    return parents


def structure_score(parents, stats: ExpectedStats, threshold: float = MI_THRESHOLD) -> float:
    """Expected complete-data score of a forest, relative to no edges.

    With maximum-likelihood parameters the expected latent-layer
    log-likelihood of a forest is ``N * sum(MI)`` over its edges plus a
    structure-independent term; each edge is charged ``N * threshold``,
    which is the score :func:`chow_liu_tree` maximizes exactly.
    """
    mi = mutual_information(stats)
    return float(sum(stats.total * (mi[p, i] - threshold)
                     for i, p in enumerate(parents) if p >= 0))


# ---------------------------------------------------------------------------
# noisy labels


@dataclass
class NoisyLabeling:
    """Per-pair, per-field labels: 1, 0, or ``-1`` for unlabeled."""

    labels: np.ndarray
    tau_hi: float
    tau_lo: float
    pairs: list | None = None

    @property
    def labeled_fraction(self) -> float:
        return float(np.mean(self.labels != UNLABELED)) if self.labels.size else 0.0


def bootstrap_labels(F, tau_hi: float = 0.9, tau_lo: float = 0.3, pairs=None) -> NoisyLabeling:
    """Label ``x_i = 1`` where ``f_i >= tau_hi`` and ``x_i = 0`` where ``f_i <= tau_lo``."""
    if not 0.0 <= tau_lo < tau_hi <= 1.0:
        raise ValueError("need 0 <= tau_lo < tau_hi <= 1")
    F = np.atleast_2d(np.asarray(F, dtype=float))
    labels = np.full(F.shape, UNLABELED, dtype=np.int64)
    labels[F >= tau_hi] = 1
    labels[F <= tau_lo] = 0
    return NoisyLabeling(labels, tau_hi, tau_lo, pairs)


# ---------------------------------------------------------------------------
# fitting


@dataclass
class FitTrace:
    log_likelihood: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    expected_complete: list = field(default_factory=list)
    # (score of old structure, score of new structure) under the same stats
    structure_updates: list = field(default_factory=list)
    iterations: int = 0


def anchored_init(k: int, d: int, parents=None, seed: int = 0) -> HgmModel:
    """Initial model whose latent value 1 means "field matches".

    Emission rows for ``x_i = 1`` grow linearly with the level and rows
    for ``x_i = 0`` shrink; root priors are 0.3; edges start near-identity
    (0.7 / 0.3) with seeded jitter of at most 0.01.
    """
    rng = np.random.default_rng(seed)
    parents = np.full(k, -1, dtype=np.int64) if parents is None else np.asarray(parents, dtype=np.int64)
    ramp = np.arange(1, d + 1, dtype=float)
    ramp /= ramp.sum()
    em = np.empty((k, 2, d))
    em[:, 1, :] = ramp
    em[:, 0, :] = ramp[::-1]
    edge = np.tile([0.3, 0.7], (k, 1)) + rng.uniform(-0.01, 0.01, size=(k, 2))
    return HgmModel(parents, np.full(k, 0.3), edge, em)


def random_init(k: int, d: int, parents=None, seed: int = 0) -> HgmModel:
    """Unanchored initial model: every CPT drawn at random."""
    rng = np.random.default_rng(seed)
    parents = np.full(k, -1, dtype=np.int64) if parents is None else np.asarray(parents, dtype=np.int64)
    em = rng.dirichlet(np.ones(d), size=(k, 2))
    return HgmModel(parents, rng.uniform(0.05, 0.95, size=k),
                    rng.uniform(0.05, 0.95, size=(k, 2)), em)


def _m_step(stats: ExpectedStats, parents, d, alpha, monotone, a) -> tuple:
    k = stats.node.shape[0]
    N = stats.total
    prior = (stats.node[:, 1] + alpha) / (N + 2 * alpha)
    edge = np.full((k, 2), 0.5)
    for i, p in enumerate(parents):
        if p >= 0:
            # pair[i, p, x_i, x_p]
            joint = stats.pair[i, p]
            edge[i] = (joint[1, :] + alpha) / (joint.sum(axis=0) + 2 * alpha)
    counts = stats.emission + alpha
    if monotone:
        em = np.empty_like(counts)
        for i in range(k):
            em[i, 1] = fit_monotone_multinomial(counts[i, 1], a=a).p
            em[i, 0] = fit_monotone_decreasing(counts[i, 0], a=a).p
        # zero levels would make log P(w | x) infinite
        em = np.maximum(em, 1e-12)
        em /= em.sum(axis=2, keepdims=True)
    else:
        em = counts / counts.sum(axis=2, keepdims=True)
    return prior, edge, em


def _log_param_prior(model: HgmModel, alpha: float) -> float:
    if alpha == 0:
        return 0.0
    total = 0.0
    for i, p in enumerate(model.parents):
        if p < 0:
            total += np.log(model.prior[i]) + np.log1p(-model.prior[i])
        else:
            total += np.sum(np.log(model.edge[i]) + np.log1p(-model.edge[i]))
    total += np.log(model.emissions).sum()
    return float(alpha * total)


def _expected_complete(stats: ExpectedStats, model: HgmModel) -> float:
    q = 0.0
    for i, p in enumerate(model.parents):
        if p < 0:
            q += stats.node[i, 1] * np.log(model.prior[i]) + stats.node[i, 0] * np.log1p(-model.prior[i])
        else:
            joint = stats.pair[i, p]
            q += np.sum(joint[1, :] * np.log(model.edge[i]) + joint[0, :] * np.log1p(-model.edge[i]))
    q += float(np.sum(stats.emission * np.log(model.emissions)))
    return float(q)


def _group(W, clamp, row_weights):
    """Collapse identical (vector, clamp) rows into weighted unique rows."""
    k = W.shape[1]
    keyed = W if clamp is None else np.column_stack([W, clamp])
    uniq, inverse = np.unique(keyed, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    weights = np.bincount(inverse, weights=row_weights, minlength=uniq.shape[0])
    if clamp is None:
        return uniq, None, weights
    return uniq[:, :k], uniq[:, k:], weights


def fit_hgm(W, d: int, *, monotone: bool = False, bootstrap: NoisyLabeling | None = None,
            learn_structure: bool = True, structure=None, seed: int = 0,
            max_iter: int = 200, tol: float = 1e-6, alpha: float = 1.0,
            a: float = DEFAULT_STEEPNESS, labeled_weight: float = 1.0,
            init: HgmModel | None = None, trace: FitTrace | None = None) -> HgmModel:
    """Fit the latent forest model by (structural) EM.

    Parameters
    ----------
    W : int array (n, k)
        Discretized comparison vectors.
    d : int
        Levels per field.
    monotone : bool
        Refit emission rows under order constraints: nondecreasing in the
        level for ``x_i = 1``, nonincreasing for ``x_i = 0``.
    bootstrap : NoisyLabeling, optional
        Latent fields with a noisy label are clamped to it in the E-step.
        Rows carrying any label are weighted by ``labeled_weight``.
    learn_structure : bool
        Re-estimate the forest by Chow-Liu on expected statistics every
        iteration.  Otherwise ``structure`` (default: no edges) is kept.
    init : HgmModel, optional
        Starting model; the default is :func:`anchored_init`.
    trace : FitTrace, optional
        Filled with per-iteration diagnostics.

    Stops when the expected complete-data log-likelihood changes by less
    than ``tol``.  If ``max_iter`` is reached first, the last model is
    returned with ``converged=False`` and a warning.
    """
    W = np.asarray(W, dtype=np.int64)
    if W.ndim != 2 or W.shape[0] == 0:
        raise ValueError("no data to fit")
    n, k = W.shape
    if k > MAX_ENUM_FIELDS:
        raise ValueError(f"k={k} exceeds the enumeration limit {MAX_ENUM_FIELDS}")
    if W.min() < 0 or W.max() >= d:
        raise ValueError("levels out of range")
    trace = FitTrace() if trace is None else trace

    clamp = None
    row_w = np.ones(n)
    if bootstrap is not None:
        clamp = np.asarray(bootstrap.labels, dtype=np.int64)
        if clamp.shape != W.shape:
            raise ValueError("noisy labels must align with the data")
        row_w = np.where((clamp != UNLABELED).any(axis=1), labeled_weight, 1.0)
    uniq, uclamp, weights = _group(W, clamp, row_w)

    if init is None:
        model = anchored_init(k, d, structure, seed)
    else:
        model = replace(init, parents=np.asarray(init.parents, dtype=np.int64).copy())
        if structure is not None:
            model.parents = np.asarray(structure, dtype=np.int64).copy()
    _check_forest(model.parents)
    model.monotone, model.a = monotone, a

    prev_q = None
    converged = False
    for it in range(1, max_iter + 1):
        stats = expected_stats(model, uniq, weights, uclamp)
        trace.log_likelihood.append(stats.log_likelihood)
        trace.objective.append(stats.log_likelihood + _log_param_prior(model, alpha))
        parents = model.parents
        if learn_structure:
            new_parents = chow_liu_tree(stats)
            trace.structure_updates.append(
                (structure_score(parents, stats), structure_score(new_parents, stats))
            )
            parents = new_parents
        prior, edge, em = _m_step(stats, parents, d, alpha, monotone, a)
        model = HgmModel(parents, prior, edge, em, monotone, a)
        q = _expected_complete(stats, model)
        trace.expected_complete.append(q)
        trace.iterations = it
        if prev_q is not None and abs(q - prev_q) < tol:
            converged = True
            break
        prev_q = q
    if not converged:
        warnings.warn(f"HGM EM stopped after {max_iter} iterations without converging",
                      stacklevel=2)
    model.converged = converged
    return model


# ---------------------------------------------------------------------------
# three-layer model


@dataclass
class ThreeLayerModel:
    """Latent forest plus a record-level match node ``M`` whose parents are all ``x``.

    ``match_cpt[c] = P(M = 1 | x = config c)`` with configurations indexed
    as in :func:`enumerate_configs`.
    """

    base: HgmModel
    match_cpt: np.ndarray

    @classmethod
    def semantic(cls, base: HgmModel) -> "ThreeLayerModel":
        """``M = 1`` exactly when every ``x_i = 1``."""
        cpt = np.zeros(2 ** base.k)
        cpt[-1] = 1.0
        return cls(base, cpt)


def three_layer_posterior(model: ThreeLayerModel, W) -> np.ndarray:
    """``P(M = 1 | w)`` by summing the joint over ``M`` and every ``x``."""
    W = np.atleast_2d(np.asarray(W, dtype=np.int64))
    X = enumerate_configs(model.base.k)
    lj = _log_joint(model.base, W, X)
    with np.errstate(divide="ignore"):
        lm1 = np.log(model.match_cpt)
        lm0 = np.log1p(-model.match_cpt)
    num = logsumexp(lj + lm1[None, :], axis=1)
    den = logsumexp(np.concatenate([lj + lm1[None, :], lj + lm0[None, :]], axis=1), axis=1)
    return np.exp(num - den)


def fit_three_layer(W, d: int, *, seed: int = 0, learn_structure: bool = True,
                    max_iter: int = 200, tol: float = 1e-6, alpha: float = 1.0,
                    trace: FitTrace | None = None) -> ThreeLayerModel:
    """EM for the unconstrained three-layer model from a random start.

    ``M`` has no observed descendants, so its expected counts reproduce
    the current table: EM leaves ``P(M | x)`` at its random initial value
    and the latent fields carry no fixed meaning.
    """
    W = np.asarray(W, dtype=np.int64)
    k = W.shape[1]
    rng = np.random.default_rng(seed)
    init = random_init(k, d, seed=int(rng.integers(2 ** 31)))
    match_cpt = rng.uniform(0.0, 1.0, size=2 ** k)
    base = fit_hgm(W, d, learn_structure=learn_structure, seed=seed, max_iter=max_iter,
                   tol=tol, alpha=alpha, init=init, trace=trace)
    uniq, inverse, = np.unique(W, axis=0, return_inverse=True)
    weights = np.bincount(inverse.ravel(), minlength=uniq.shape[0]).astype(float)
    post = posterior_configs(base, uniq)
    mass = weights @ post
    updated = weights @ (post * match_cpt[None, :])
    match_cpt = np.where(mass > 0, updated / np.where(mass > 0, mass, 1.0), match_cpt)
    return ThreeLayerModel(base, match_cpt)


# ---------------------------------------------------------------------------
# persistence


def _model_items(model: HgmModel, kind: str) -> list:
    items = [
        ("kind", kind),
        ("k", model.k),
        ("d", model.d),
        ("monotone", bool(model.monotone)),
        ("a", float(model.a)),
        ("converged", bool(model.converged)),
        ("parents", np.asarray(model.parents, dtype=np.int64)),
        ("prior", model.prior),
    ]
    for i in range(model.k):
        items.append((f"edge.{i}", model.edge[i]))
    for i in range(model.k):
        for c in (0, 1):
            items.append((f"emission.{i}.{c}", model.emissions[i, c]))
    return items


def _model_from_kv(kv: dict, kind: str, path) -> HgmModel:
    if kv.get("kind") != kind:
        raise ValueError(f"{path}: expected a model of kind {kind!r}")
    k, d = int(kv["k"]), int(kv["d"])
    edge = np.array([floats(kv[f"edge.{i}"]) for i in range(k)])
    em = np.empty((k, 2, d))
    for i in range(k):
        for c in (0, 1):
            em[i, c] = floats(kv[f"emission.{i}.{c}"])
    model = HgmModel(ints(kv["parents"]), floats(kv["prior"]), edge, em,
                     kv["monotone"] == "true", float(kv["a"]), kv["converged"] == "true")
    _check_forest(model.parents)
    return model


def save_hgm(model: HgmModel, path=None) -> str:
    return dump_kv(_model_items(model, "hgm"), path)


def load_hgm(path) -> HgmModel:
    return _model_from_kv(load_kv(path), "hgm", path)


def save_three_layer(model: ThreeLayerModel, path=None) -> str:
    items = _model_items(model.base, "hgm-three-layer") + [("match_cpt", model.match_cpt)]
    return dump_kv(items, path)


def load_three_layer(path) -> ThreeLayerModel:
    kv = load_kv(path)
    return ThreeLayerModel(_model_from_kv(kv, "hgm-three-layer", path), floats(kv["match_cpt"]))
