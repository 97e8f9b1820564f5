"""Single-latent-class baselines.

``fit_winkler`` trains the classic model where one latent match class
``M`` generates every discretized field level independently.
``fit_gmm_semisup`` clusters continuous comparison vectors with a
diagonal Gaussian mixture and names clusters by majority vote of the few
labeled pairs they contain.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .serialize import dump_kv, floats, ints, load_kv

log = logging.getLogger(__name__)

__all__ = [
    "WinklerModel",
    "GmmModel",
    "fit_winkler",
    "score_winkler",
    "fit_gmm_semisup",
    "gmm_responsibilities",
    "score_gmm",
    "save_winkler",
    "load_winkler",
    "save_gmm",
    "load_gmm",
]

UNLABELED = -1
VARIANCE_FLOOR = 1e-4


@dataclass
class WinklerModel:
    """Prior ``P(M=1)`` and emissions ``emissions[i, c, level] = P(w_i=level | M=c)``.

    ``log_likelihood_trace`` holds the observed-data log-likelihood at each
    EM iteration and ``objective_trace`` the same plus the Laplace
    pseudo-count term, which is what smoothed EM actually increases.
    """

    prior: float
    emissions: np.ndarray
    log_likelihood_trace: list = field(default_factory=list, repr=False, compare=False)
    objective_trace: list = field(default_factory=list, repr=False, compare=False)

    @property
    def k(self) -> int:
        return self.emissions.shape[0]

    @property
    def d(self) -> int:
        return self.emissions.shape[2]


def _unique_rows(W):
    W = np.asarray(W, dtype=np.int64)
    uniq, inverse, counts = np.unique(W, axis=0, return_inverse=True, return_counts=True)
    return uniq, inverse.ravel(), counts.astype(float)


def _class_loglik(emissions, W):
    """``(n, 2)`` array of ``log P(w | M=c)``."""
    k = emissions.shape[0]
    # unsmoothed fits can leave empty levels; log 0 = -inf is the right value
    with np.errstate(divide="ignore"):
        logE = np.log(emissions)
    out = np.zeros((W.shape[0], 2))
    for i in range(k):
        out += logE[i][:, W[:, i]].T
    return out


def _winkler_posterior(prior, emissions, W):
    ll = _class_loglik(emissions, W)
    ll[:, 0] += np.log1p(-prior)
    ll[:, 1] += np.log(prior)
    norm = logsumexp(ll, axis=1)
    return np.exp(ll[:, 1] - norm), norm


def _winkler_mstep(W, weights, resp, d, alpha):
    """Laplace-smoothed expected-count estimates."""
    k = W.shape[1]
    r1 = weights * resp
    r0 = weights * (1.0 - resp)
    prior = (r1.sum() + alpha) / (weights.sum() + 2 * alpha)
    emissions = np.empty((k, 2, d))
    for i in range(k):
        c1 = np.bincount(W[:, i], weights=r1, minlength=d)
        c0 = np.bincount(W[:, i], weights=r0, minlength=d)
        emissions[i, 1] = (c1 + alpha) / (c1.sum() + d * alpha)
        emissions[i, 0] = (c0 + alpha) / (c0.sum() + d * alpha)
    return float(prior), emissions


def _log_prior(prior, emissions, alpha):
    """``alpha * sum(log theta)`` over every multinomial parameter."""
    if alpha == 0:
        return 0.0
    return alpha * (np.log(prior) + np.log1p(-prior) + np.log(emissions).sum())


def _anchored_init(k, d):
    """Top level likely under M=1, unlikely under M=0; prior 0.1."""
    em = np.empty((k, 2, d))
    em[:, 1, :] = 0.1 / (d - 1)
    em[:, 1, d - 1] = 0.9
    em[:, 0, :] = 0.9 / (d - 1)
    em[:, 0, d - 1] = 0.1
    return 0.1, em


def fit_winkler(W, d: int, mode: str = "unsup", labels=None, max_iter: int = 200,
                tol: float = 1e-6, alpha: float = 1.0) -> WinklerModel:
    """Fit the single-class model on discretized comparison vectors.

    Parameters
    ----------
    W : array of shape (n, k)
        Integer levels in ``0 .. d-1``.
    d : int
        Number of levels per field.
    mode : {"unsup", "sup", "semisup"}
        ``sup`` needs a label for every row; ``semisup`` clamps the
        posterior of labeled rows (``labels == -1`` marks unlabeled).
    labels : array of shape (n,), optional
    """
    W = np.asarray(W, dtype=np.int64)
    if W.ndim != 2 or W.shape[0] == 0:
        raise ValueError("no data to fit")
    if d < 2:
        raise ValueError("need at least two levels")
    if W.min() < 0 or W.max() >= d:
        raise ValueError("levels out of range")
    n, k = W.shape
    if mode not in ("unsup", "sup", "semisup"):
        raise ValueError(f"unknown mode {mode!r}")
    lab = None if labels is None else np.asarray(labels, dtype=np.int64)
    if mode == "sup":
        if lab is None or np.any(lab == UNLABELED) or lab.shape != (n,):
            raise ValueError("supervised mode needs a label for every pair")
        uniq_k, _, weights = _unique_rows(np.column_stack([W, lab]))
        prior, em = _winkler_mstep(uniq_k[:, :k], weights, uniq_k[:, k].astype(float), d, alpha)
        return WinklerModel(prior, em)
    if mode == "semisup":
        if lab is None or lab.shape != (n,):
            raise ValueError("semisup mode needs a label array (-1 for unlabeled)")
        if not np.any(lab != UNLABELED):
            warnings.warn("no labeled pairs; semisup degenerates to unsup", stacklevel=2)
            mode, lab = "unsup", None

    if lab is None:
        uniq, inverse, weights = _unique_rows(W)
        clamp = None
    else:
        # labeled rows are kept apart so their clamp survives grouping
        keyed = np.column_stack([W, lab])
        uniq_k, inverse, weights = _unique_rows(keyed)
        uniq, clamp = uniq_k[:, :k], uniq_k[:, k]

    prior, em = _anchored_init(k, d)
    trace, objective = [], []
    prev = -np.inf
    for _ in range(max_iter):
        resp, norm = _winkler_posterior(prior, em, uniq)
        if clamp is not None:
            known = clamp != UNLABELED
            resp = np.where(known, clamp.astype(float), resp)
        ll = float(np.dot(weights, norm))
        obj = ll + _log_prior(prior, em, alpha)
        trace.append(ll)
        objective.append(obj)
        if abs(obj - prev) < tol:
            break
        prev = obj
        prior, em = _winkler_mstep(uniq, weights, resp, d, alpha)
    return WinklerModel(prior, em, trace, objective)


def score_winkler(model: WinklerModel, W) -> np.ndarray:
    """Posterior ``P(M=1 | w)`` for each row (or a single vector)."""
    W = np.asarray(W, dtype=np.int64)
    single = W.ndim == 1
    post, _ = _winkler_posterior(model.prior, model.emissions, np.atleast_2d(W))
    return post[0] if single else post


def winkler_log_likelihood(model: WinklerModel, W) -> float:
    _, norm = _winkler_posterior(model.prior, model.emissions, np.asarray(W, dtype=np.int64))
    return float(norm.sum())


# ---------------------------------------------------------------------------
# Gaussian mixture


@dataclass
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    cluster_label: np.ndarray
    log_likelihood_trace: list = field(default_factory=list, repr=False, compare=False)

    @property
    def m(self) -> int:
        return self.weights.shape[0]


def _log_gauss(F, means, variances):
    """``(n, m)`` log densities of diagonal Gaussians."""
    diff = F[:, None, :] - means[None, :, :]
    return -0.5 * (np.sum(diff * diff / variances[None], axis=2)
                   + np.sum(np.log(2 * np.pi * variances), axis=1)[None, :])


def _gmm_estep(F, weights, means, variances):
    with np.errstate(divide="ignore"):
        lw = np.log(weights)
    logp = _log_gauss(F, means, variances) + lw[None, :]
    norm = logsumexp(logp, axis=1)
    return np.exp(logp - norm[:, None]), norm


def _gmm_mstep(F, resp, prev_means, prev_vars, floor):
    nk = resp.sum(axis=0)
    weights = nk / nk.sum()
    means = prev_means.copy()
    variances = prev_vars.copy()
    alive = nk > 1e-12
    means[alive] = (resp[:, alive].T @ F) / nk[alive, None]
    for j in np.where(alive)[0]:
        diff = F - means[j]
        variances[j] = (resp[:, j] @ (diff * diff)) / nk[j]
    return weights, means, np.maximum(variances, floor)


def gmm_responsibilities(model: GmmModel, F) -> np.ndarray:
    F = np.atleast_2d(np.asarray(F, dtype=float))
    resp, _ = _gmm_estep(F, model.weights, model.means, model.variances)
    return resp


def fit_gmm_semisup(F, labels, m: int = 6, seed: int = 0, max_iter: int = 500,
                    tol: float = 1e-6, var_floor: float = VARIANCE_FLOOR) -> GmmModel:
    """Diagonal-covariance EM, then label each component by majority vote.

    EM starts from seeded random responsibilities.  Each labeled point is
    hard-assigned to its most responsible component; a component's label
    is the most frequent label among its assigned points (ties and
    components with no labeled points get 0).
    """
    F = np.asarray(F, dtype=float)
    n, k = F.shape
    if m < 1:
        raise ValueError("need at least one component")
    if n < m:
        raise ValueError(f"{n} points cannot support {m} components")
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    resp = rng.dirichlet(np.ones(m), size=n)
    spread = np.maximum(F.var(axis=0), var_floor)
    weights, means, variances = _gmm_mstep(
        F, resp, np.tile(F.mean(axis=0), (m, 1)), np.tile(spread, (m, 1)), var_floor
    )
    trace = []
    prev = -np.inf
    for _ in range(max_iter):
        resp, norm = _gmm_estep(F, weights, means, variances)
        ll = float(norm.sum())
        trace.append(ll)
        if ll - prev < tol and np.isfinite(prev):
            break
        prev = ll
        weights, means, variances = _gmm_mstep(F, resp, means, variances, var_floor)

    resp, _ = _gmm_estep(F, weights, means, variances)
    cluster_label = np.zeros(m, dtype=np.int64)
    known = labels != UNLABELED
    if known.any():
        assign = resp[known].argmax(axis=1)
        lab = labels[known]
        for j in range(m):
            votes = lab[assign == j]
            if votes.size and (votes == 1).sum() > (votes == 0).sum():
                cluster_label[j] = 1
    return GmmModel(weights, means, variances, cluster_label, trace)


def score_gmm(model: GmmModel, F) -> np.ndarray:
    """Responsibility mass of match-labeled components."""
    F = np.asarray(F, dtype=float)
    single = F.ndim == 1
    resp = gmm_responsibilities(model, F)
    score = resp[:, model.cluster_label == 1].sum(axis=1)
    return score[0] if single else score


def gmm_log_likelihood(model: GmmModel, F) -> float:
    _, norm = _gmm_estep(np.atleast_2d(F), model.weights, model.means, model.variances)
    return float(norm.sum())


# ---------------------------------------------------------------------------
# persistence


def save_winkler(model: WinklerModel, path) -> str:
    items = [("kind", "winkler"), ("k", model.k), ("d", model.d), ("prior", model.prior)]
    for i in range(model.k):
        for c in (0, 1):
            items.append((f"emission.{i}.{c}", model.emissions[i, c]))
    return dump_kv(items, path)


def load_winkler(path) -> WinklerModel:
    kv = load_kv(path)
    if kv.get("kind") != "winkler":
        raise ValueError(f"{path}: not a winkler model")
    k, d = int(kv["k"]), int(kv["d"])
    em = np.empty((k, 2, d))
    for i in range(k):
        for c in (0, 1):
            em[i, c] = floats(kv[f"emission.{i}.{c}"])
    return WinklerModel(float(kv["prior"]), em)


def save_gmm(model: GmmModel, path) -> str:
    items = [("kind", "gmm"), ("m", model.m), ("k", model.means.shape[1]),
             ("weights", model.weights), ("cluster_label", model.cluster_label)]
    for j in range(model.m):
        items.append((f"mean.{j}", model.means[j]))
        items.append((f"variance.{j}", model.variances[j]))
    return dump_kv(items, path)


def load_gmm(path) -> GmmModel:
    kv = load_kv(path)
    if kv.get("kind") != "gmm":
        raise ValueError(f"{path}: not a gmm model")
    m = int(kv["m"])
    means = np.array([floats(kv[f"mean.{j}"]) for j in range(m)])
    variances = np.array([floats(kv[f"variance.{j}"]) for j in range(m)])
    return GmmModel(floats(kv["weights"]), means, variances, ints(kv["cluster_label"]))
