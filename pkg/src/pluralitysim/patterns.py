"""Per-round active-edge sets for the four communication models.

A pattern is a deterministic function of (spec, round): the RNG stream for
round t is derived from (spec.seed, t), so rounds can be regenerated out of
order and two calls for the same round always agree.

Models:
  diffusion          all graph edges active every round
  random_matching    greedy random matching, fresh each round
  balancing_circuit  fixed perfect matchings used round-robin
  sequential         one uniformly random edge per round

The random-matching construction processes the edges in a uniformly random
order and activates an edge iff both endpoints are still unmatched and a
Bernoulli(matching_probability) draw succeeds. Rounds are mutually
independent and every edge has a strictly positive activation probability,
measurable via empirical_pmin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import Graph

__all__ = [
    "MODELS",
    "ActiveEdgeSet",
    "PatternSpec",
    "PminEstimate",
    "generate",
    "max_active_degree",
    "empirical_pmin",
    "neighbor_csr",
    "PatternSampler",
    "round_robin_matchings",
    "matching_from_file",
]

MODELS = ("diffusion", "random_matching", "balancing_circuit", "sequential")

_ROUND_SALT = 0x9E3779B9


@dataclass(frozen=True)
class ActiveEdgeSet:
    """Symmetric set of active edges at one round.

    Self-loops are implicit: every node is always its own neighbor and
    they are never stored here.
    """

    round: int
    n: int
    pairs: tuple

    def active_degree(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.pairs:
            deg[u] += 1
            deg[v] += 1
        return deg


def _is_perfect_matching(pairs, graph: Graph) -> bool:
    edge_set = set(graph.edges)
    touched = set()
    for u, v in pairs:
        a, b = min(u, v), max(u, v)
        if (a, b) not in edge_set:
            return False
        if a in touched or b in touched:
            return False
        touched.add(a)
        touched.add(b)
    return len(touched) == graph.n


@dataclass(frozen=True)
class PatternSpec:
    """Communication pattern: model, graph, and model parameters."""

    model: str
    graph: Graph
    matchings: tuple = ()
    matching_probability: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.model == "balancing_circuit":
            if not self.matchings:
                raise ValueError("balancing_circuit needs at least one matching")
            if self.graph.n % 2 != 0:
                raise ValueError("perfect matchings need an even node count")
            for i, m in enumerate(self.matchings):
                if not _is_perfect_matching(m, self.graph):
                    raise ValueError(f"matchings[{i}] is not a perfect matching of the graph")
        if self.model == "random_matching":
            if not (0.0 < self.matching_probability <= 1.0):
                raise ValueError("matching_probability must be in (0, 1]")


def _round_rng(seed: int, t: int) -> np.random.Generator:
    return np.random.default_rng([_ROUND_SALT, int(seed), int(t)])


def generate(spec: PatternSpec, t: int) -> ActiveEdgeSet:
    """Active edges of round t >= 1. Pure function of (spec, t)."""
    if t < 1:
        raise ValueError("rounds are numbered from 1")
    g = spec.graph
    if spec.model == "diffusion":
        return ActiveEdgeSet(round=t, n=g.n, pairs=g.edges)
    if spec.model == "balancing_circuit":
        m = spec.matchings[t % len(spec.matchings)]
        pairs = tuple(sorted((min(u, v), max(u, v)) for u, v in m))
        return ActiveEdgeSet(round=t, n=g.n, pairs=pairs)
    rng = _round_rng(spec.seed, t)
    if spec.model == "sequential":
        e = int(rng.integers(0, g.m))
        return ActiveEdgeSet(round=t, n=g.n, pairs=(g.edges[e],))
    # random_matching: greedy over a random edge order, gated per edge
    order = rng.permutation(g.m)
    coins = rng.random(g.m) < spec.matching_probability
    matched = np.zeros(g.n, dtype=bool)
    pairs = []
    for e in order:
        u, v = g.edges[e]
        if coins[e] and not matched[u] and not matched[v]:
            matched[u] = True
            matched[v] = True
            pairs.append((u, v))
    return ActiveEdgeSet(round=t, n=g.n, pairs=tuple(sorted(pairs)))


def max_active_degree(spec: PatternSpec) -> int:
    """A-priori bound Delta on the active degree of any node at any round.

    Model knowledge, not an empirical maximum: the full graph degree under
    diffusion, 1 for every matching-based or sequential pattern.
    """
    if spec.model == "diffusion":
        return int(spec.graph.degree.max())
    return 1


@dataclass(frozen=True)
class PminEstimate:
    """Monte Carlo estimate of the minimum per-edge activation frequency."""

    value: float
    samples: int

    def __float__(self) -> float:
        return self.value


def empirical_pmin(spec: PatternSpec, samples: int) -> PminEstimate:
    if spec.model != "random_matching":
        raise ValueError("p_min is only defined for the random matching model")
    index = {e: i for i, e in enumerate(spec.graph.edges)}
    hits = np.zeros(spec.graph.m, dtype=np.int64)
    for t in range(1, samples + 1):
        for pair in generate(spec, t).pairs:
            hits[index[pair]] += 1
    return PminEstimate(value=float(hits.min() / samples), samples=samples)


def neighbor_csr(pairs, n: int):
    """CSR neighbor table (indptr, indices) of an undirected pair list."""
    if len(pairs) == 0:
        return np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    arr = np.asarray(pairs, dtype=np.int64)
    src = np.concatenate([arr[:, 0], arr[:, 1]])
    dst = np.concatenate([arr[:, 1], arr[:, 0]])
    order = np.argsort(src, kind="stable")
    indices = dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, indices


class PatternSampler:
    """Caches per-round active sets and neighbor tables for one pattern.

    Deterministic models (diffusion, balancing_circuit) are periodic, so
    their rounds are cached by phase; randomized rounds are regenerated on
    demand, which is cheap and always reproducible.
    """

    def __init__(self, spec: PatternSpec):
        self.spec = spec
        self.n = spec.graph.n
        self.delta = max_active_degree(spec)
        if spec.model == "diffusion":
            self.period = 1
        elif spec.model == "balancing_circuit":
            self.period = len(spec.matchings)
        else:
            self.period = 0  # not periodic
        self._csr_cache = {}
        self._float_cache = {}
        self._pairs_cache = {}

    def _phase(self, t: int):
        return t % self.period if self.period else t

    def active(self, t: int) -> ActiveEdgeSet:
        return generate(self.spec, t)

    def pairs_array(self, t: int) -> np.ndarray:
        """Active pairs of round t as an (E, 2) int64 array."""
        key = self._phase(t)
        if self.period and key in self._pairs_cache:
            return self._pairs_cache[key]
        out = np.asarray(generate(self.spec, t).pairs, dtype=np.int64).reshape(-1, 2)
        if self.period:
            self._pairs_cache[key] = out
        return out

    def csr(self, t: int):
        key = self._phase(t)
        if self.period and key in self._csr_cache:
            return self._csr_cache[key]
        out = neighbor_csr(generate(self.spec, t).pairs, self.n)
        if self.period:
            self._csr_cache[key] = out
        return out

    def stacked_csr(self, t0: int, t1: int):
        """Neighbor tables for rounds t0..t1-1 flattened for kernel loops.

        Returns (indptr, indices) where indptr has shape (t1-t0, n+1) and
        holds global offsets into the flat indices array.
        """
        rounds = range(t0, t1)
        indptr = np.zeros((len(rounds), self.n + 1), dtype=np.int64)
        chunks = []
        offset = 0
        for i, t in enumerate(rounds):
            ptr, idx = self.csr(t)
            indptr[i] = ptr + offset
            chunks.append(idx)
            offset += len(idx)
        indices = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
        return indptr, indices

    def transition_float(self, t: int) -> np.ndarray:
        """Round-t transition matrix as float64 (hot path for products)."""
        key = self._phase(t)
        if self.period and key in self._float_cache:
            return self._float_cache[key]
        act = generate(self.spec, t)
        p = np.zeros((self.n, self.n), dtype=np.float64)
        inv = 1.0 / (2.0 * self.delta)
        deg = act.active_degree()
        for u, v in act.pairs:
            p[u, v] = inv
            p[v, u] = inv
        p[np.diag_indices(self.n)] = 1.0 - deg * inv
        if self.period:
            self._float_cache[key] = p
        return p


def round_robin_matchings(n: int, count: int):
    """First `count` perfect matchings of K_n from the circle method (n even)."""
    if n % 2 != 0:
        raise ValueError("perfect matchings need even n")
    if count > n - 1:
        raise ValueError(f"K_{n} round-robin yields only {n - 1} matchings")
    others = list(range(1, n))
    out = []
    for r in range(count):
        rot = others[r:] + others[:r]
        row = [0] + rot
        pairs = tuple(
            sorted((min(row[i], row[n - 1 - i]), max(row[i], row[n - 1 - i])) for i in range(n // 2))
        )
        out.append(pairs)
    return out


def matching_from_file(path, graph: Graph):
    """Load one matching from the edge-list text format and validate it."""
    from .graphs import load_edge_list

    loaded = load_edge_list(path)
    if loaded.n != graph.n:
        raise ValueError(f"matching file has n={loaded.n}, graph has n={graph.n}")
    if not _is_perfect_matching(loaded.edges, graph):
        raise ValueError(f"{path} is not a perfect matching of the graph")
    return loaded.edges


def canonical_matchings(kind: str, graph: Graph, count: int | None = None):
    """Built-in perfect-matching decompositions: round-robin matchings on
    complete graphs, per-dimension matchings on hypercubes."""
    n = graph.n
    if kind == "complete":
        return tuple(round_robin_matchings(n, count if count else min(3, n - 1)))
    if kind == "hypercube":
        dim = n.bit_length() - 1
        return tuple(
            tuple(sorted((u, u ^ (1 << b)) for u in range(n) if u < (u ^ (1 << b))))
            for b in range(dim)
        )
    raise ValueError(f"no canonical matchings for graph kind {kind!r}; supply files")
