"""One interface over every ranking method: fit, score, save, load."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import baselines, hgm
from .features import DEFAULT_BINARY_THRESHOLD, DEFAULT_LEVELS, discretize_matrix
from .monotone import DEFAULT_STEEPNESS

__all__ = ["METHODS", "LABEL_FRACTION", "MethodConfig", "fit_method", "score_method",
           "save_model", "load_model"]

METHODS = ("winkler-unsup", "winkler-sup", "winkler-semisup", "gmm", "hgm", "hgm-unconstrained")
# share of pairs labeled for each method when trained outside cross-validation
LABEL_FRACTION = {"winkler-sup": 1.0, "winkler-semisup": 1 / 3, "gmm": 1 / 3}


@dataclass(frozen=True)
class MethodConfig:
    method: str = "hgm"
    d: int = DEFAULT_LEVELS
    binary_threshold: float = DEFAULT_BINARY_THRESHOLD
    monotone: bool = False
    bootstrap: bool = False
    learn_structure: bool = True
    a: float = DEFAULT_STEEPNESS
    tau_hi: float = 0.9
    tau_lo: float = 0.3
    labeled_weight: float = 1.0
    gmm_components: int = 6
    max_iter: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")

    @property
    def supervised(self) -> bool:
        return self.method in LABEL_FRACTION

    def levels(self, F) -> np.ndarray:
        """Discretize for this method: Winkler models see binary agreement."""
        if self.method.startswith("winkler"):
            return discretize_matrix(F, 2, self.binary_threshold)
        return discretize_matrix(F, self.d)


def fit_method(cfg: MethodConfig, F, labels=None):
    """Fit ``cfg.method`` on continuous comparison vectors ``F``.

    ``labels`` (0/1, -1 unlabeled) is needed by the supervised and
    semi-supervised methods and ignored by the others.
    """
    F = np.asarray(F, dtype=float)
    if cfg.supervised and labels is None:
        raise ValueError(f"{cfg.method} needs pair labels")
    if cfg.method.startswith("winkler"):
        mode = cfg.method.split("-", 1)[1]
        return baselines.fit_winkler(cfg.levels(F), 2, mode=mode,
                                     labels=None if mode == "unsup" else labels,
                                     max_iter=cfg.max_iter)
    if cfg.method == "gmm":
        return baselines.fit_gmm_semisup(F, labels, m=cfg.gmm_components, seed=cfg.seed)
    W = cfg.levels(F)
    if cfg.method == "hgm-unconstrained":
        return hgm.fit_three_layer(W, cfg.d, seed=cfg.seed, learn_structure=cfg.learn_structure,
                                   max_iter=cfg.max_iter)
    noisy = hgm.bootstrap_labels(F, cfg.tau_hi, cfg.tau_lo) if cfg.bootstrap else None
    return hgm.fit_hgm(W, cfg.d, monotone=cfg.monotone, bootstrap=noisy,
                       learn_structure=cfg.learn_structure, seed=cfg.seed,
                       max_iter=cfg.max_iter, a=cfg.a, labeled_weight=cfg.labeled_weight)


def score_method(cfg: MethodConfig, model, F) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    if cfg.method.startswith("winkler"):
        return baselines.score_winkler(model, cfg.levels(F))
    if cfg.method == "gmm":
        return baselines.score_gmm(model, F)
    if cfg.method == "hgm-unconstrained":
        return hgm.three_layer_posterior(model, cfg.levels(F))
    return hgm.posterior_all_match(model, cfg.levels(F))


def save_model(cfg: MethodConfig, model, path) -> None:
    if cfg.method.startswith("winkler"):
        baselines.save_winkler(model, path)
    elif cfg.method == "gmm":
        baselines.save_gmm(model, path)
    elif cfg.method == "hgm-unconstrained":
        hgm.save_three_layer(model, path)
    else:
        hgm.save_hgm(model, path)


def load_model(cfg: MethodConfig, path):
    if cfg.method.startswith("winkler"):
        return baselines.load_winkler(path)
    if cfg.method == "gmm":
        return baselines.load_gmm(path)
    if cfg.method == "hgm-unconstrained":
        return hgm.load_three_layer(path)
    return hgm.load_hgm(path)
