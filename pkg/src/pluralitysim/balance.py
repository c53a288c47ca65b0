"""Vertex-based multi-dimensional load balancing for plurality consensus.

Every node keeps one integer load per opinion, initialized to gamma in its
own opinion's dimension and 0 elsewhere. Each round performs discrete load
balancing independently per dimension: floor sends of load/(2*Delta) per
active neighbor, then the at-most-d excess tokens are offered to the
active neighbors in random order, one coin flip each. The plurality guess
is the argmax dimension, ties to the smaller label.

With gamma >= 3*g/alpha, reaching discrepancy <= g in every dimension
forces every node's argmax to be the plurality; run_balance records
whether that implication held.
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
    "BalanceConfig",
    "BalanceRunResult",
    "required_gamma_balance",
    "new_loads",
    "balance_step",
    "plurality_guess",
    "plurality_guesses",
    "run_balance",
    "balance_memory_bits",
    "default_discrepancy_target",
]


def required_gamma_balance(g: int, alpha: float, n: int | None = None) -> int:
    """Initial tokens per node: ceil(3*g/alpha)."""
    if g < 1:
        raise ValueError("need g >= 1")
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must be in (0, 1]")
    gamma = math.ceil(3.0 * g / alpha)
    if n is not None and gamma > n**5:
        raise ValueError(f"gamma={gamma} exceeds the admissible range bound n^5={n**5}")
    return gamma


def default_discrepancy_target(model: str, d: int, n: int, gap: float | None = None) -> int:
    """Target discrepancy g: 1 on matching-based models; under diffusion
    ceil(sqrt(d*log2 n)/gap), the scale where the balancer's rounding noise
    stalls (gap is the graph's spectral gap, defaulting to 1)."""
    if model == "diffusion":
        return max(1, math.ceil(math.sqrt(d * math.log2(n)) / (gap if gap else 1.0)))
    return 1


@dataclass(frozen=True)
class BalanceConfig:
    """Balancing parameters plus the initial opinion assignment."""

    gamma: int
    g: int
    k: int
    assignment: np.ndarray
    horizon: int

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        object.__setattr__(self, "assignment", a)
        if self.g < 1 or self.horizon < 1:
            raise ValueError("need g >= 1 and horizon >= 1")
        if a.min() < 0 or a.max() >= self.k:
            raise ValueError("assignment labels must lie in [0, k)")
        counts = np.bincount(a, minlength=self.k)
        if self.k > 1 and counts[0] <= counts[1:].max():
            raise ValueError("label 0 must be the strict plurality")
        n = a.shape[0]
        top = np.sort(counts)[::-1]
        second = int(top[1]) if self.k > 1 else 0
        alpha = (int(top[0]) - second) / n
        lower = math.ceil(3.0 * self.g / alpha) if alpha > 0 else None
        if lower is None or not (lower <= self.gamma <= n**5):
            raise ValueError(
                f"gamma={self.gamma} outside the admissible range [{lower}, n^5]"
            )

    @property
    def n(self) -> int:
        return int(self.assignment.shape[0])

    @property
    def alpha(self) -> float:
        counts = np.bincount(self.assignment, minlength=self.k)
        top = np.sort(counts)[::-1]
        second = int(top[1]) if self.k > 1 else 0
        return float((int(top[0]) - second) / self.n)


def new_loads(cfg: BalanceConfig) -> np.ndarray:
    loads = np.zeros((cfg.n, cfg.k), dtype=np.int64)
    loads[np.arange(cfg.n), cfg.assignment] = cfg.gamma
    return loads


def balance_step(loads: np.ndarray, P: TransitionMatrix, active: ActiveEdgeSet, rng) -> np.ndarray:
    """One balancing round; returns the new load matrix."""
    indptr, indices = neighbor_csr(active.pairs, active.n)
    return kernels.balance_round(loads, indptr, indices, P.denominator, rng)


def plurality_guess(load: np.ndarray) -> int:
    """Argmax dimension of one node's load vector, ties to the smaller label."""
    return int(np.argmax(load))


def plurality_guesses(loads: np.ndarray) -> np.ndarray:
    return np.argmax(loads, axis=1)


@dataclass
class BalanceRunResult:
    record: RunRecord
    correct: np.ndarray  # per-node guess correctness when the run stopped
    loads: np.ndarray
    reached_target: bool  # all dimensions hit discrepancy <= g in time
    stop_round: int
    implication_held: bool  # disc <= g in all dimensions => all guesses correct


def run_balance(cfg: BalanceConfig, spec: PatternSpec, seed) -> BalanceRunResult:
    """Balance until every dimension's discrepancy is at most g, or the
    horizon runs out (recorded, not fatal)."""
    if cfg.n != spec.graph.n:
        raise ValueError("config and pattern disagree on the node count")
    sampler = PatternSampler(spec)
    two_delta = 2 * sampler.delta
    rng = np.random.default_rng(seed)
    loads = new_loads(cfg)

    def disc_ok(m):
        return bool(((m.max(axis=0) - m.min(axis=0)) <= cfg.g).all())

    guesses = plurality_guesses(loads)
    all_correct_since = 0 if bool((guesses == 0).all()) else -1
    reached = disc_ok(loads)
    stop_round = 0
    if not reached:
        for t in range(1, cfg.horizon + 1):
            indptr, indices = sampler.csr(t)
            loads = kernels.balance_round(loads, indptr, indices, two_delta, rng)
            guesses = plurality_guesses(loads)
            if bool((guesses == 0).all()):
                if all_correct_since < 0:
                    all_correct_since = t
            else:
                all_correct_since = -1
            stop_round = t
            if disc_ok(loads):
                reached = True
                break

    correct = guesses == 0
    record = RunRecord(
        seed=int(seed),
        n=cfg.n,
        k=cfg.k,
        alpha=cfg.alpha,
        gamma=cfg.gamma,
        model=spec.model,
        protocol="balance",
        t_mix=0,
        rounds=stop_round,
        consensus_round=all_correct_since,
        all_correct=bool(correct.all()),
        memory_bits=balance_memory_bits(cfg.k, cfg.gamma),
    )
    return BalanceRunResult(
        record=record,
        correct=correct,
        loads=loads,
        reached_target=reached,
        stop_round=stop_round,
        implication_held=(not reached) or bool(correct.all()),
    )


def balance_memory_bits(k: int, gamma: int) -> int:
    """Per-node memory: k dimensions of ceil(log2(gamma+1)) bits each."""
    if gamma < 1 or k < 1:
        raise ValueError("need k >= 1 and gamma >= 1")
    return k * math.ceil(math.log2(gamma + 1))
