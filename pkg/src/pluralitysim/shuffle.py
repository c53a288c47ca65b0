"""Token-shuffling plurality consensus protocol.

Every node starts with gamma tokens labeled with its opinion. Each round
has three parts:

  shuffle    deal a uniformly random permutation of the gamma tokens into
             one slot of size gamma/(2*Delta) per active neighbor plus a
             self slot; deliveries are simultaneous
  broadcast  adopt the (dominant opinion, estimate) pair with the highest
             estimate among self and active neighbors
  update     every t_mix rounds: add the node's own-label token count to
             its counter, publish the previous broadcast winner as the
             plurality guess, and reset the broadcast pair to
             (own opinion, counter)

Token multisets are stored as per-node count vectors; dealing without
replacement from counts is exactly the uniform-permutation slot split.
Opinions are 0-based and label 0 must be the strict plurality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .patterns import ActiveEdgeSet, PatternSpec, PatternSampler, neighbor_csr
from .records import RunRecord
from .smoothing import TransitionMatrix

__all__ = [
    "ShuffleConfig",
    "ShuffleState",
    "ShuffleRunResult",
    "required_gamma",
    "new_state",
    "shuffle_step",
    "broadcast_step",
    "update_step",
    "run_shuffle",
    "shuffle_memory_bits",
    "assignment_alpha",
]


def required_gamma(n: int, alpha: float, T: int, c: float, delta: int) -> int:
    """Tokens per node: ceil(c * log2(n) / (alpha^2 * T)), rounded up to a
    multiple of 2*delta so every slot size is integral."""
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must be in (0, 1]")
    if T < 1 or c <= 0 or delta < 1:
        raise ValueError("need T >= 1, c > 0, delta >= 1")
    raw = math.ceil(c * math.log2(n) / (alpha * alpha * T))
    two_delta = 2 * delta
    return max(1, math.ceil(raw / two_delta)) * two_delta


def assignment_alpha(assignment: np.ndarray, k: int) -> float:
    """Initial bias (n_1 - n_2) / n of an opinion assignment."""
    counts = np.bincount(assignment, minlength=k)
    top = np.sort(counts)[::-1]
    second = int(top[1]) if k > 1 else 0
    return float((int(top[0]) - second) / assignment.shape[0])


@dataclass(frozen=True)
class ShuffleConfig:
    """Protocol parameters plus the initial opinion assignment.

    assignment[u] in [0, k) is node u's opinion; label 0 must be held by
    strictly more nodes than any other label.
    """

    gamma: int
    T: int
    t_mix: int
    c: float
    k: int
    assignment: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        object.__setattr__(self, "assignment", a)
        if self.gamma < 1 or self.T < 1 or self.t_mix < 1 or self.c <= 0:
            raise ValueError("gamma, T, t_mix must be >= 1 and c > 0")
        if a.min() < 0 or a.max() >= self.k:
            raise ValueError("assignment labels must lie in [0, k)")
        counts = np.bincount(a, minlength=self.k)
        if self.k > 1 and counts[0] <= counts[1:].max():
            raise ValueError("label 0 must be the strict plurality")

    @property
    def n(self) -> int:
        return int(self.assignment.shape[0])

    @property
    def alpha(self) -> float:
        return assignment_alpha(self.assignment, self.k)


@dataclass
class ShuffleState:
    """Per-node protocol state, vectorized across nodes."""

    counts: np.ndarray  # (n, k) token counts, row sums gamma
    opinion: np.ndarray
    counter: np.ndarray
    dom: np.ndarray
    est: np.ndarray
    guess: np.ndarray

    @property
    def n(self) -> int:
        return int(self.opinion.shape[0])


def new_state(cfg: ShuffleConfig) -> ShuffleState:
    n = cfg.n
    counts = np.zeros((n, cfg.k), dtype=np.int64)
    counts[np.arange(n), cfg.assignment] = cfg.gamma
    return ShuffleState(
        counts=counts,
        opinion=cfg.assignment.copy(),
        counter=np.zeros(n, dtype=np.int64),
        dom=cfg.assignment.copy(),
        est=np.zeros(n, dtype=np.int64),
        guess=cfg.assignment.copy(),
    )


def _csr_from_transition(P: TransitionMatrix):
    pairs = [(u, v) for u in range(P.n) for v in range(u + 1, P.n) if P.num[u, v] > 0]
    return neighbor_csr(pairs, P.n)


def shuffle_step(state: ShuffleState, P: TransitionMatrix, rng) -> ShuffleState:
    """Deal every node's tokens into slots sized gamma * P[u, v] and deliver."""
    gamma = int(state.counts[0].sum())
    if gamma % P.denominator != 0:
        raise ValueError(
            f"slot sizes are not integral: gamma={gamma} is not a multiple of {P.denominator}"
        )
    indptr, indices = _csr_from_transition(P)
    state.counts = kernels.shuffle_round(
        state.counts, indptr, indices, gamma, P.denominator, rng
    )
    return state


def _broadcast(state: ShuffleState, pairs: np.ndarray, k: int) -> None:
    n = state.n
    # lexicographic max of (est, -dom, -node id), packed into one int64 key
    ids = np.arange(n, dtype=np.int64)
    key = (state.est * k + (k - 1 - state.dom)) * n + (n - 1 - ids)
    best = key.copy()
    if pairs.size:
        u = pairs[:, 0]
        v = pairs[:, 1]
        np.maximum.at(best, u, key[v])
        np.maximum.at(best, v, key[u])
    rest = best // n
    state.dom = k - 1 - (rest % k)
    state.est = rest // k


def broadcast_step(state: ShuffleState, active: ActiveEdgeSet) -> ShuffleState:
    """Every node adopts the (dom, est) pair with the highest est among
    itself and its active neighbors, from pre-round values; ties prefer the
    smaller dom label, then the smaller node id."""
    k = state.counts.shape[1]
    pairs = np.asarray(active.pairs, dtype=np.int64).reshape(-1, 2)
    _broadcast(state, pairs, k)
    return state


def update_step(state: ShuffleState) -> ShuffleState:
    """Count own-label tokens into the counter, publish the broadcast
    winner as the plurality guess, and reset the broadcast pair."""
    n = state.n
    state.counter = state.counter + state.counts[np.arange(n), state.opinion]
    state.guess = state.dom.copy()
    state.dom = state.opinion.copy()
    state.est = state.counter.copy()
    return state


@dataclass
class ShuffleRunResult:
    record: RunRecord
    correct: np.ndarray  # per-node final guess correctness
    counters: np.ndarray  # counter values after the final update
    updates: int  # number of update steps executed
    state: ShuffleState


def run_shuffle(cfg: ShuffleConfig, spec: PatternSpec, seed) -> ShuffleRunResult:
    """Run ceil(c*T)+1 update epochs of t_mix rounds each.

    The pattern is a pure function of spec.seed; token movement uses a
    generator derived from `seed` alone, so a replica is fully determined
    by (cfg, spec, seed).
    """
    if cfg.n != spec.graph.n:
        raise ValueError("config and pattern disagree on the node count")
    sampler = PatternSampler(spec)
    two_delta = 2 * sampler.delta
    if cfg.gamma % two_delta != 0:
        raise ValueError(
            f"gamma={cfg.gamma} must be a multiple of 2*Delta={two_delta} for this pattern"
        )
    rng = np.random.default_rng(seed)
    state = new_state(cfg)
    updates = math.ceil(cfg.c * cfg.T) + 1
    total_rounds = updates * cfg.t_mix

    all_correct_since = 0 if bool((state.guess == 0).all()) else -1
    for t in range(1, total_rounds + 1):
        indptr, indices = sampler.csr(t)
        state.counts = kernels.shuffle_round(
            state.counts, indptr, indices, cfg.gamma, two_delta, rng
        )
        _broadcast(state, sampler.pairs_array(t), cfg.k)
        if t % cfg.t_mix == 0:
            update_step(state)
            if bool((state.guess == 0).all()):
                if all_correct_since < 0:
                    all_correct_since = t
            else:
                all_correct_since = -1

    correct = state.guess == 0
    record = RunRecord(
        seed=int(seed),
        n=cfg.n,
        k=cfg.k,
        alpha=cfg.alpha,
        gamma=cfg.gamma,
        model=spec.model,
        protocol="shuffle",
        t_mix=cfg.t_mix,
        rounds=total_rounds,
        consensus_round=all_correct_since,
        all_correct=bool(correct.all()),
        memory_bits=shuffle_memory_bits(cfg.n, cfg.k, cfg.alpha, cfg.T, cfg.t_mix),
    )
    return ShuffleRunResult(
        record=record,
        correct=correct,
        counters=state.counter.copy(),
        updates=updates,
        state=state,
    )


def shuffle_memory_bits(n: int, k: int, alpha: float, T: int, t_mix: int) -> int:
    """Closed-form per-node memory bound, rounded up to whole bits:
    (12*log2(n)/(alpha^2*T) + 4)*log2(k) + 4*log2(12*log2(n)/alpha^2)
    + log2(T*t_mix)."""
    if n < 2 or k < 1 or T < 1 or t_mix < 1 or not (0.0 < alpha <= 1.0):
        raise ValueError("bad memory-formula parameters")
    ln = math.log2(n)
    a2 = alpha * alpha
    total = (12.0 * ln / (a2 * T) + 4.0) * math.log2(k)
    total += 4.0 * math.log2(12.0 * ln / a2)
    total += math.log2(T * t_mix)
    return math.ceil(total)
