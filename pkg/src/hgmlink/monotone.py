"""Order-constrained multinomial estimation with a sigmoid barrier.

The parameters of a multinomial over ``d`` ordered levels are written as
cumulative increments ``p_i = delta_1 + ... + delta_i`` and the objective

    sum_i n_i log p_i + sum_i log sigmoid(a * delta_i)

is maximized on the simplex.  The stationary point satisfies

    p_i = (n_i - g_i p_i) / (N - sum_j g_j p_j)

with ``g_i = a (sigmoid(delta_i) - sigmoid(delta_{i+1}))`` and
``g_d = a (sigmoid(delta_d) - 1)``.  Iterating that map as written is not
stable for small ``N`` (the barrier curvature ``a**2 / 4`` dominates the
likelihood curvature).  The solver keeps the map's residual
``max |T(p) - p|`` as its stationarity test and moves the iterate along
the Newton direction of the (strictly concave) objective restricted to
the simplex, with a line search; the step ``T(p) - p`` itself, a scaled
ascent direction, is the fallback when the Newton step is not uphill.

The barrier alone does not keep iterates ordered when the counts violate
the ordering strongly, so the solver keeps ``p`` feasible with an active
set: levels whose increment reaches zero are pooled into a block, and a
block is split again when the gradient with respect to the pooled
increment says it should be.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression, minimize_scalar
from scipy.special import expit, log_expit

__all__ = [
    "MonotoneMultinomial",
    "NonConvergenceError",
    "barrier_objective",
    "fit_monotone_multinomial",
    "fit_monotone_decreasing",
]

DEFAULT_STEEPNESS = 20.0


class NonConvergenceError(RuntimeError):
    """Raised when the fixed point does not settle within ``max_iter``.

    The last iterate is available as ``last``.
    """

    def __init__(self, message: str, last: np.ndarray):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class MonotoneMultinomial:
    p: np.ndarray
    delta: np.ndarray
    a: float
    iterations_used: int


def barrier_objective(p, counts, a: float = DEFAULT_STEEPNESS) -> float:
    """Log of ``prod_i p_i**n_i * sigmoid(a * delta_i)``.

    Levels with zero count contribute no likelihood term, so ``p_i`` may be
    zero there.  Returns ``-inf`` if a level with positive count has
    ``p_i <= 0``.
    """
    p = np.asarray(p, dtype=float)
    n = np.asarray(counts, dtype=float)
    pos = n > 0
    if np.any(p[pos] <= 0):
        return -np.inf
    delta = np.diff(p, prepend=0.0)
    return float(np.sum(n[pos] * np.log(p[pos])) + np.sum(log_expit(a * delta)))


class _BlockState:
    """Pooled parametrization: consecutive levels share one value."""

    def __init__(self, counts: np.ndarray, p0: np.ndarray):
        self.n = counts
        self.d = len(counts)
        self.starts = list(range(self.d))
        self.q = p0.astype(float).copy()
        self.floor = False  # first block pinned at zero

    @property
    def sizes(self) -> np.ndarray:
        ends = self.starts[1:] + [self.d]
        return np.array([e - s for s, e in zip(self.starts, ends)], dtype=float)

    @property
    def block_counts(self) -> np.ndarray:
        return np.add.reduceat(self.n, self.starts)

    def expand(self, q=None) -> np.ndarray:
        q = self.q if q is None else q
        return np.repeat(q, self.sizes.astype(int))

    def free(self) -> np.ndarray:
        mask = np.ones(len(self.starts), dtype=bool)
        if self.floor:
            mask[0] = False
        return mask

    def merge(self, b: int) -> None:
        """Pool block ``b`` into block ``b - 1`` keeping total mass."""
        sizes = self.sizes
        v = (sizes[b - 1] * self.q[b - 1] + sizes[b] * self.q[b]) / (sizes[b - 1] + sizes[b])
        if self.floor and b == 1:
            v = 0.0
        del self.starts[b]
        self.q = np.concatenate([self.q[: b - 1], [v], self.q[b + 1 :]])

    def split(self, level: int) -> None:
        b = int(np.searchsorted(self.starts, level, side="right")) - 1
        self.starts.insert(b + 1, level)
        self.q = np.concatenate([self.q[: b + 1], [self.q[b]], self.q[b + 1 :]])


def _direction(state: _BlockState, a: float):
    """Generalized fixed-point update over free blocks; returns (step, lambda)."""
    q = state.q
    free = state.free()
    sizes = state.sizes
    nb = state.block_counts
    delta = np.diff(q, prepend=0.0)
    s = expit(a * delta)
    g = a * (s - np.append(s[1:], 1.0))
    g[~free] = 0.0
    lam = nb[free].sum() - np.sum(g[free] * q[free])
    step = np.zeros_like(q)
    step[free] = (nb[free] - g[free] * q[free]) / (sizes[free] * lam) - q[free]
    return step, lam


def _newton_direction(state: _BlockState, a: float):
    """Newton ascent step over free blocks, keeping ``sum(sizes * q)`` fixed.

    Returns None when the step is not an ascent direction.
    """
    q = state.q
    free = state.free()
    nb = state.block_counts
    sizes = state.sizes
    delta = np.diff(q, prepend=0.0)
    s = expit(a * delta)
    # d/d delta of log sigmoid(a delta) and its second derivative
    h1 = a * (1.0 - s)
    h2 = -a * a * s * (1.0 - s)
    B = len(q)
    grad = np.where(nb > 0, nb / np.where(q > 0, q, 1.0), 0.0) + h1 - np.append(h1[1:], 0.0)
    H = np.diag(np.where(nb > 0, -nb / np.where(q > 0, q, 1.0) ** 2, 0.0))
    for b in range(B):
        H[b, b] += h2[b]
        if b > 0:
            H[b - 1, b - 1] += h2[b]
            H[b, b - 1] -= h2[b]
            H[b - 1, b] -= h2[b]
    idx = np.flatnonzero(free)
    m = idx.size
    K = np.zeros((m + 1, m + 1))
    K[:m, :m] = H[np.ix_(idx, idx)]
    K[:m, m] = K[m, :m] = sizes[idx]
    rhs = np.append(-grad[idx], 0.0)
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        return None
    step = np.zeros_like(q)
    step[idx] = sol[:m]
    if not np.all(np.isfinite(step)) or grad @ step <= 0:
        return None
    return step


def _max_feasible_step(state: _BlockState, step: np.ndarray):
    """Largest eta keeping every increment nonnegative, and the block that hits."""
    q = state.q
    delta = np.diff(q, prepend=0.0)
    ddelta = np.diff(step, prepend=0.0)
    eta_max, hit = np.inf, None
    first = 1 if state.floor else 0
    for b in range(first, len(q)):
        if ddelta[b] < 0:
            eta = max(delta[b], 0.0) / -ddelta[b]
            if eta < eta_max:
                eta_max, hit = eta, b
    return eta_max, hit


def _kkt_violation(state: _BlockState, lam: float, a: float):
    """Most violated pooled increment, as (gradient, level) or None.

    For a pooled boundary at level j the gradient of the Lagrangian with
    respect to delta_j is ``sum_{i>=j} (n_i / p_i - lam) + a / 2``.
    """
    p = state.expand()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(state.n > 0, state.n / np.where(p > 0, p, 1.0), 0.0)
    tail = np.cumsum((ratio - lam)[::-1])[::-1]
    grad = tail + a / 2.0
    active = np.ones(state.d, dtype=bool)
    active[state.starts] = False
    if state.floor:
        active[0] = True
    cand = np.where(active)[0]
    if cand.size == 0:
        return None
    j = cand[np.argmax(grad[cand])]
    # scale-free threshold: gradient is in units of counts
    if grad[j] > 1e-7 * max(1.0, state.n.sum()):
        return float(grad[j]), int(j)
    return None


def _line_search(state: _BlockState, step, eta_max, a):
    def neg(eta):
        return -barrier_objective(state.expand(state.q + eta * step), state.n, a)

    upper = min(eta_max, 8.0)
    if upper <= 0.0:
        return 0.0
    res = minimize_scalar(neg, bounds=(0.0, upper), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, upper)})
    eta = float(res.x)
    if eta_max <= 8.0 and neg(eta_max) <= neg(eta):
        eta = eta_max
    return eta


def fit_monotone_multinomial(counts, a: float = DEFAULT_STEEPNESS, tol: float = 1e-8,
                             max_iter: int = 500) -> MonotoneMultinomial:
    """Fit nondecreasing multinomial parameters to ``counts``.

    Parameters
    ----------
    counts : array-like of shape (d,)
        Nonnegative counts per level; need not be integers (expected
        counts from an E-step are fine).
    a : float
        Sigmoid barrier steepness.
    tol : float
        Stop when the fixed-point residual ``max |T(p) - p|`` drops below
        this value and no pooled level should be split.
    max_iter : int
        Maximum number of fixed-point updates.

    Returns
    -------
    MonotoneMultinomial

    Raises
    ------
    ValueError
        If counts are negative or all zero, or ``a <= 0``.
    NonConvergenceError
        If ``max_iter`` updates are used up.
    """
    n = np.asarray(counts, dtype=float)
    if n.ndim != 1 or n.size == 0:
        raise ValueError("counts must be a nonempty 1-d sequence")
    if np.any(n < 0) or not np.all(np.isfinite(n)):
        raise ValueError("counts must be finite and nonnegative")
    if n.sum() <= 0:
        raise ValueError("counts are all zero")
    if a <= 0:
        raise ValueError("barrier steepness a must be positive")
    d = n.size
    if d == 1:
        return MonotoneMultinomial(np.ones(1), np.ones(1), a, 0)

    smoothed = (n + 0.5) / (n.sum() + 0.5 * d)
    p0 = isotonic_regression(smoothed).x
    state = _BlockState(n, p0 / p0.sum())

    floor_tried = False
    for it in range(1, max_iter + 1):
        step, lam = _direction(state, a)
        # a zero-count first block only approaches the floor geometrically
        # under the scaled direction; pin it once and let the KKT check undo it
        if (not state.floor and not floor_tried and state.block_counts[0] == 0
                and step[0] < 0 and state.q[0] < 1e-3):
            floor_tried = True
            state.q[0] = 0.0
            state.floor = True
            state.q = state.q / np.dot(state.sizes, state.q)
            continue
        if np.max(np.abs(step)) < tol:
            viol = _kkt_violation(state, lam, a)
            if viol is None:
                return _finish(state, a, it)
            _, level = viol
            if state.floor and level == 0:
                state.floor = False
                # the scaled direction cannot leave zero; start just above it
                nxt = state.q[1] if len(state.q) > 1 else 1.0
                state.q[0] = 1e-4 * nxt
                state.q = state.q / np.dot(state.sizes, state.q)
            else:
                state.split(level)
            continue
        newton = _newton_direction(state, a)
        if newton is not None:
            step = newton
        eta_max, hit = _max_feasible_step(state, step)
        if eta_max < 1e-12:
            eta = eta_max
        else:
            eta = _line_search(state, step, eta_max, a)
        state.q = state.q + eta * step
        if hit is not None and eta >= eta_max:
            if hit == 0:
                state.q[0] = 0.0
                state.floor = True
            else:
                state.merge(hit)
            state.q = state.q / np.dot(state.sizes, state.q)

    raise NonConvergenceError(
        f"monotone fit did not converge in {max_iter} iterations", state.expand()
    )


def _finish(state: _BlockState, a: float, iterations: int) -> MonotoneMultinomial:
    p = np.clip(state.expand(), 0.0, None)
    p = p / p.sum()
    return MonotoneMultinomial(p=p, delta=np.diff(p, prepend=0.0), a=a,
                               iterations_used=iterations)


def fit_monotone_decreasing(counts, **kwargs) -> MonotoneMultinomial:
    """Nonincreasing fit, by reversing the levels."""
    fit = fit_monotone_multinomial(np.asarray(counts, dtype=float)[::-1], **kwargs)
    p = fit.p[::-1].copy()
    return MonotoneMultinomial(p=p, delta=np.diff(p, prepend=0.0), a=fit.a,
                               iterations_used=fit.iterations_used)
