"""Doubly stochastic round matrices, window discrepancy, and mixing time.

Round matrices are stored with exact integer numerators over the common
denominator 2*Delta, so row/column sums can be checked exactly. Window
products are evaluated left-to-right in float64 for long windows; an exact
big-integer mode exists for short windows and oracle tests.

The discrepancy of a window product is computed in closed form as half the
maximum L1 distance between two columns. This equals the supremum of
disc(x * product) over nonnegative x with sup-norm 1: the objective is
linear in x, so binary vectors are extremal, and for a fixed column pair
the optimum picks exactly the rows where the column difference is positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .patterns import ActiveEdgeSet, PatternSpec, PatternSampler, max_active_degree

__all__ = [
    "TransitionMatrix",
    "WindowProduct",
    "MixingEstimate",
    "MixingTimeError",
    "transition_from_active",
    "window_product",
    "window_discrepancy",
    "is_smoothing",
    "estimate_mixing_time",
]

_MIX_SALT = 0x0FF5E7

FLOAT_SUM_TOL = 1e-9  # row/col drift allowed on the float product path


@dataclass(frozen=True)
class TransitionMatrix:
    """One round's doubly stochastic matrix, exact over denominator 2*delta.

    num[u, v] is 1 where the edge {u, v} is active, 2*delta - d_t(u) on the
    diagonal, 0 otherwise. Every row and column sums to exactly 2*delta.
    """

    n: int
    delta: int
    num: np.ndarray

    def __post_init__(self):
        two_delta = 2 * self.delta
        if self.num.shape != (self.n, self.n):
            raise ValueError("numerator matrix has wrong shape")
        if (self.num < 0).any():
            raise ValueError("negative entry")
        if (self.num.sum(axis=0) != two_delta).any() or (self.num.sum(axis=1) != two_delta).any():
            raise ValueError("matrix is not doubly stochastic")
        if (np.diag(self.num) < self.delta).any():
            raise ValueError("diagonal entry below 1/2")

    @property
    def denominator(self) -> int:
        return 2 * self.delta

    def to_float(self) -> np.ndarray:
        return self.num / float(self.denominator)

    def entry(self, u: int, v: int) -> Fraction:
        return Fraction(int(self.num[u, v]), self.denominator)


def transition_from_active(a: ActiveEdgeSet, delta: int) -> TransitionMatrix:
    """Round matrix for an active-edge set: off-diagonal active entries
    1/(2*delta), diagonal 1 - d_t(u)/(2*delta)."""
    deg = a.active_degree()
    if (deg > delta).any():
        bad = int(np.argmax(deg > delta))
        raise ValueError(
            f"delta={delta} too small: node {bad} has active degree {int(deg[bad])}"
        )
    num = np.zeros((a.n, a.n), dtype=np.int64)
    for u, v in a.pairs:
        num[u, v] = 1
        num[v, u] = 1
    num[np.diag_indices(a.n)] = 2 * delta - deg
    return TransitionMatrix(n=a.n, delta=delta, num=num)


@dataclass(frozen=True)
class WindowProduct:
    """Product P_start * ... * P_end (row-vector convention x @ product).

    den is None when num holds float64 probabilities, otherwise num holds
    exact big-integer numerators over den.
    """

    start: int
    end: int
    num: np.ndarray
    den: object = None

    def to_float(self) -> np.ndarray:
        if self.den is None:
            return self.num
        return (self.num / self.den).astype(np.float64)


def window_product(
    spec: PatternSpec,
    t1: int,
    t2: int,
    exact: bool = False,
    sampler: PatternSampler | None = None,
) -> WindowProduct:
    """Window product over rounds t1..t2 inclusive (t2 - t1 + 1 matrices)."""
    if t1 > t2:
        raise ValueError("need t1 <= t2")
    if sampler is None:
        sampler = PatternSampler(spec)
    delta = sampler.delta
    if exact:
        prod = None
        for t in range(t1, t2 + 1):
            p = transition_from_active(sampler.active(t), delta)
            mat = p.num.astype(object)
            prod = mat if prod is None else prod.dot(mat)
        den = (2 * delta) ** (t2 - t1 + 1)
        return WindowProduct(start=t1, end=t2, num=prod, den=den)
    prod = None
    for t in range(t1, t2 + 1):
        p = sampler.transition_float(t)
        prod = p.copy() if prod is None else prod @ p
    drift = max(
        np.abs(prod.sum(axis=0) - 1.0).max(),
        np.abs(prod.sum(axis=1) - 1.0).max(),
    )
    if drift > FLOAT_SUM_TOL:
        raise ArithmeticError(f"float product drifted by {drift:g}; use exact=True")
    return WindowProduct(start=t1, end=t2, num=prod)


def window_discrepancy(w: WindowProduct):
    """Half the max L1 distance between two columns of the window product.

    Returns a float for float products and an exact Fraction for exact
    ones. Equals sup over nonnegative x with max-norm 1 of
    disc(x @ product).
    """
    if w.den is None:
        m = w.num
        best = 0.0
        for j in range(m.shape[1]):
            diffs = np.abs(m - m[:, j : j + 1]).sum(axis=0)
            best = max(best, float(diffs.max()))
        return 0.5 * best
    n = w.num.shape[0]
    best = 0
    for j1 in range(n):
        for j2 in range(j1 + 1, n):
            s = 0
            for i in range(n):
                s += abs(int(w.num[i, j1]) - int(w.num[i, j2]))
            if s > best:
                best = s
    return Fraction(best, 2 * w.den)


def is_smoothing(spec: PatternSpec, t1: int, t2: int, epsilon: float) -> bool:
    """True iff the window [t1, t2] shrinks every admissible start vector's
    discrepancy to at most epsilon."""
    return window_discrepancy(window_product(spec, t1, t2)) <= epsilon


class MixingTimeError(RuntimeError):
    """No window within the horizon was epsilon-smoothing."""

    def __init__(self, epsilon, horizon, best_discrepancy):
        super().__init__(
            f"no epsilon-smoothing window (eps={epsilon:g}) within horizon "
            f"{horizon}; best discrepancy reached was {best_discrepancy:g}"
        )
        self.epsilon = epsilon
        self.horizon = horizon
        self.best_discrepancy = best_discrepancy


@dataclass(frozen=True)
class MixingEstimate:
    """Smallest window length whose checked windows were all smoothing.

    exact is True only for deterministic patterns, where every distinct
    window start (one period) is checked; randomized patterns are sampled
    at `windows` random offsets, so the value is an estimate.
    """

    rounds: int
    epsilon: float
    exact: bool
    windows: int


def estimate_mixing_time(
    spec: PatternSpec,
    epsilon: float | None = None,
    horizon: int = 1024,
    trials: int = 32,
) -> MixingEstimate:
    """Smallest L such that length-L windows are epsilon-smoothing.

    Deterministic patterns check every phase of the period and the answer
    is exact; randomized patterns check `trials` sampled windows per
    candidate L. Found by doubling then binary search (discrepancy is
    non-increasing in window length, so the predicate is monotone).
    """
    if horizon < 1:
        raise ValueError("need horizon >= 1")
    n = spec.graph.n
    if epsilon is None:
        epsilon = float(n) ** -5
    sampler = PatternSampler(spec)
    deterministic = spec.model in ("diffusion", "balancing_circuit")
    best_seen = [1.0]

    def ok(length: int) -> bool:
        if deterministic:
            starts = range(1, min(sampler.period, horizon - length + 1) + 1)
        else:
            rng = np.random.default_rng([_MIX_SALT, spec.seed, length])
            starts = rng.integers(1, horizon - length + 2, size=trials)
        any_window = False
        for t in starts:
            any_window = True
            disc = window_discrepancy(window_product(spec, int(t), int(t) + length - 1, sampler=sampler))
            best_seen[0] = min(best_seen[0], disc)
            if disc > epsilon:
                return False
        return any_window

    windows = sampler.period if deterministic else trials
    length = 1
    lo = 1
    while True:
        if ok(length):
            hi = length
            break
        if length >= horizon:
            raise MixingTimeError(epsilon, horizon, best_seen[0])
        lo = length + 1
        length = min(2 * length, horizon)
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return MixingEstimate(rounds=lo, epsilon=float(epsilon), exact=deterministic, windows=windows)
