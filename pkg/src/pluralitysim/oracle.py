"""Statistical checks of the shuffle dynamics against independent walks.

The reference process moves every token as an independent lazy walk driven
by the same per-round matrices as the shuffle. Tracked tokens in the
shuffle replicas are real tokens riding through the full dealing dynamics
(they get unique labels; movement is label-blind, so their joint law is
untouched). Both processes share initial placements and one fixed pattern
realization; only the movement streams differ.

Every report uses the one-sided convention: PASS iff
observed <= bound + 3 * slack, with slack the binomial standard error of
the observed frequency (0 for exact bounds).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .patterns import PatternSpec, PatternSampler, neighbor_csr
from .smoothing import TransitionMatrix

__all__ = [
    "WalkEnsemble",
    "StatTestReport",
    "CounterThresholds",
    "ThresholdInversionError",
    "walk_step",
    "marginal_equality_test",
    "negative_association_test",
    "chernoff_tail_check",
    "counter_thresholds",
]

_ORACLE_SALT = 0x0AC1E


@dataclass
class WalkEnsemble:
    """Independent walkers: one position per token plus the step count."""

    positions: np.ndarray
    steps: int = 0


def walk_step(ensemble: WalkEnsemble, P: TransitionMatrix, rng) -> WalkEnsemble:
    """Move each walker independently: to each active neighbor with
    probability 1/(2*Delta), staying otherwise."""
    pairs = [(u, v) for u in range(P.n) for v in range(u + 1, P.n) if P.num[u, v] > 0]
    indptr, indices = neighbor_csr(pairs, P.n)
    pos = ensemble.positions.astype(np.int64, copy=True)
    kernels.walk_round(pos, indptr, indices, P.denominator, rng)
    return WalkEnsemble(positions=pos, steps=ensemble.steps + 1)


@dataclass(frozen=True)
class StatTestReport:
    """One statistical verdict; PASS iff observed <= bound + 3 * slack."""

    statistic: str
    samples: int
    observed: float
    bound: float
    slack: float
    verdict: str

    def to_json(self) -> dict:
        return asdict(self)


def _verdict(observed: float, bound: float, slack: float) -> str:
    return "PASS" if observed <= bound + 3.0 * slack else "FAIL"


def _binom_se(p_hat: float, samples: int) -> float:
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / samples)


def _tracked_runs(spec, starts, t_max, record_rounds, samples, gamma, seed):
    """Shuffle and walk replica positions over one fixed pattern realization."""
    sampler = PatternSampler(spec)
    two_delta = 2 * sampler.delta
    if gamma is None:
        gamma = two_delta
    if gamma % two_delta != 0:
        raise ValueError(f"gamma={gamma} must be a multiple of 2*Delta={two_delta}")
    indptr, indices = sampler.stacked_csr(1, t_max + 1)
    starts = np.asarray(starts, dtype=np.int64)
    rec = np.asarray(record_rounds, dtype=np.int64)
    rng_s = np.random.default_rng([_ORACLE_SALT, int(seed), 1])
    rng_w = np.random.default_rng([_ORACLE_SALT, int(seed), 2])
    pos_s = kernels.shuffle_tracked_runs(
        starts, spec.graph.n, gamma, two_delta, indptr, indices, rec, samples, rng_s
    )
    pos_w = kernels.walk_tracked_runs(starts, indptr, indices, two_delta, rec, samples, rng_w)
    return pos_s, pos_w


def marginal_equality_test(
    spec: PatternSpec,
    t: int,
    samples: int,
    gamma: int | None = None,
    start: int = 0,
    seed: int = 0,
    tolerance: float = 0.02,
) -> StatTestReport:
    """Total-variation distance between the round-t location distribution
    of one token under the full shuffle dynamics and under an independent
    walk, from `samples` replicas of each."""
    if t == 0:
        return StatTestReport("marginal_tv", samples, 0.0, tolerance, 0.0, "PASS")
    pos_s, pos_w = _tracked_runs(spec, [start], t, [t], samples, gamma, seed)
    n = spec.graph.n
    freq_s = np.bincount(pos_s[:, 0, 0], minlength=n) / samples
    freq_w = np.bincount(pos_w[:, 0, 0], minlength=n) / samples
    tv = 0.5 * float(np.abs(freq_s - freq_w).sum())
    return StatTestReport(
        statistic="marginal_tv",
        samples=samples,
        observed=tv,
        bound=tolerance,
        slack=0.0,
        verdict=_verdict(tv, tolerance, 0.0),
    )


def negative_association_test(
    spec: PatternSpec,
    b_starts,
    d_nodes,
    t: int,
    samples: int,
    gamma: int | None = None,
    seed: int = 0,
) -> StatTestReport:
    """Joint probability that every tracked token sits in D at round t
    under the shuffle, against the product of walk marginals."""
    if len(b_starts) < 2:
        raise ValueError("need at least two tracked tokens")
    pos_s, pos_w = _tracked_runs(spec, b_starts, t, [t], samples, gamma, seed)
    d_mask = np.zeros(spec.graph.n, dtype=bool)
    d_mask[np.asarray(list(d_nodes), dtype=np.int64)] = True
    joint = float(d_mask[pos_s[:, 0, :]].all(axis=1).mean())
    product = 1.0
    for j in range(len(b_starts)):
        product *= float(d_mask[pos_w[:, 0, j]].mean())
    slack = _binom_se(joint, samples)
    return StatTestReport(
        statistic="negative_association",
        samples=samples,
        observed=joint,
        bound=product,
        slack=slack,
        verdict=_verdict(joint, product, slack),
    )


def chernoff_tail_check(
    spec: PatternSpec,
    b_starts,
    node: int,
    T: int,
    delta: float,
    samples: int,
    t_mix: int,
    gamma: int | None = None,
    seed: int = 0,
) -> StatTestReport:
    """Tail of X = visits of tracked tokens to `node` at update times
    t_mix, 2*t_mix, ..., T*t_mix under the shuffle, against the
    exponential bound exp(-delta^2*mu/3) with
    mu = (1/n + 1/n^5) * |B| * T.

    The bound uses the negated exponent; the positive form cannot bound a
    tail probability.
    """
    if delta <= 0:
        raise ValueError("need delta > 0")
    n = spec.graph.n
    epochs = t_mix * np.arange(1, T + 1)
    pos_s, _ = _tracked_runs(spec, b_starts, int(epochs[-1]), epochs, samples, gamma, seed)
    x = (pos_s == node).sum(axis=(1, 2))
    mu = (1.0 / n + 1.0 / n**5) * len(b_starts) * T
    observed = float((x >= (1.0 + delta) * mu).mean())
    bound = math.exp(-delta * delta * mu / 3.0)
    slack = _binom_se(observed, samples)
    return StatTestReport(
        statistic="chernoff_tail",
        samples=samples,
        observed=observed,
        bound=bound,
        slack=slack,
        verdict=_verdict(observed, bound, slack),
    )


class ThresholdInversionError(ValueError):
    """Counter separation fails for these parameters."""

    def __init__(self, bottom: float, top: float):
        super().__init__(
            f"separation thresholds inverted: below={bottom:.6g} >= above={top:.6g}"
        )
        self.bottom = bottom
        self.top = top


@dataclass(frozen=True)
class CounterThresholds:
    """Counter levels separating the plurality from every other opinion.

    After `updates` counting epochs, nodes of opinion >= 2 should sit at or
    below `bottom` and plurality nodes at or above `top`.
    """

    bottom: float
    top: float
    updates: int


def counter_thresholds(
    n: int,
    counts,
    T: int,
    gamma: int,
    c: float,
    updates: int | None = None,
) -> CounterThresholds:
    """Separation thresholds for counter values.

    With p = 1/n + 1/n^5 and U counting epochs (default c*T, the run
    length in epochs):

      mu_i   = p * U * gamma * n_i
      below  = mu_2 + sqrt(c * log2(n) * U * gamma * n_2 / n)
      above  = U*gamma - mu' - sqrt(c * log2(n) * U * gamma * (n - n_1) / n)

    where mu' uses n - n_1 in place of n_i. Raises ThresholdInversionError
    when the two levels do not separate.
    """
    counts = list(counts)
    if any(counts[i] < counts[i + 1] for i in range(len(counts) - 1)):
        raise ValueError("counts must be sorted in descending order")
    if sum(counts) != n:
        raise ValueError("counts must sum to n")
    n1 = counts[0]
    n2 = counts[1] if len(counts) > 1 else 0
    if n1 <= n2:
        raise ValueError("need a strict plurality (n_1 > n_2)")
    if c < 12:
        raise ValueError("the separation analysis needs c >= 12")
    u = int(updates) if updates is not None else math.ceil(c * T)
    p = 1.0 / n + 1.0 / n**5
    mu2 = p * u * gamma * n2
    mu_rest = p * u * gamma * (n - n1)
    bottom = mu2 + math.sqrt(c * math.log2(n) * u * gamma * n2 / n)
    top = u * gamma - mu_rest - math.sqrt(c * math.log2(n) * u * gamma * (n - n1) / n)
    if top <= bottom:
        raise ThresholdInversionError(bottom, top)
    return CounterThresholds(bottom=bottom, top=top, updates=u)
