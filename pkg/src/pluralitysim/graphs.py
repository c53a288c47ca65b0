"""Graph families and spectral diagnostics for communication experiments.

All graphs are undirected and simple, stored as a canonical sorted edge
list. The spectral gap is computed on the lazy diffusion transition matrix
(all edges active, diagonal >= 1/2), whose eigenvalues are guaranteed to
lie in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Graph",
    "GenerationError",
    "build_graph",
    "spectral_gap",
    "is_connected",
    "save_edge_list",
    "load_edge_list",
]

GRAPH_KINDS = ("complete", "cycle", "hypercube", "random_regular", "torus")


class GenerationError(RuntimeError):
    """Randomized graph generation exhausted its retry budget."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph.

    edges holds pairs (u, v) with u < v, sorted lexicographically;
    degree[u] is the number of incident edges of node u.
    """

    n: int
    edges: tuple
    degree: np.ndarray

    @property
    def m(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for u, v in self.edges:
            a[u, v] = 1.0
            a[v, u] = 1.0
        return a

    def neighbor_lists(self) -> list:
        nbrs = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return nbrs


def _finish(n: int, edges) -> Graph:
    canon = sorted((min(u, v), max(u, v)) for u, v in edges)
    deg = np.zeros(n, dtype=np.int64)
    seen = set()
    for u, v in canon:
        if u == v:
            raise ValueError(f"self-loop at node {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u},{v}) out of range for n={n}")
        if (u, v) in seen:
            raise ValueError(f"duplicate edge ({u},{v})")
        seen.add((u, v))
        deg[u] += 1
        deg[v] += 1
    return Graph(n=n, edges=tuple(canon), degree=deg)


def is_connected(g: Graph) -> bool:
    if g.n == 0:
        return False
    nbrs = g.neighbor_lists()
    seen = np.zeros(g.n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for v in nbrs[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return bool(seen.all())


def _complete(n: int) -> Graph:
    return _finish(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def _cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return _finish(n, [(i, (i + 1) % n) for i in range(n)])


def _hypercube(n: int) -> Graph:
    dim = n.bit_length() - 1
    if n != 1 << dim or n < 2:
        raise ValueError("hypercube needs n to be a power of two, n >= 2")
    edges = []
    for u in range(n):
        for b in range(dim):
            v = u ^ (1 << b)
            if v > u:
                edges.append((u, v))
    return _finish(n, edges)


def _torus(n: int) -> Graph:
    side = math.isqrt(n)
    if side * side != n or side < 3:
        raise ValueError("torus needs n = side^2 with side >= 3")
    edges = []
    for i in range(side):
        for j in range(side):
            u = i * side + j
            edges.append((u, i * side + (j + 1) % side))
            edges.append((u, ((i + 1) % side) * side + j))
    return _finish(n, edges)


def _random_regular(n: int, d: int, seed, retries: int = 200) -> Graph:
    if d is None or d < 1 or d >= n or (n * d) % 2 != 0:
        raise ValueError("random_regular needs 1 <= d < n with n*d even")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), d)
    for _ in range(retries):
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        seen = set()
        ok = True
        for u, v in pairs:
            u, v = int(u), int(v)
            if u == v or (min(u, v), max(u, v)) in seen:
                ok = False
                break
            seen.add((min(u, v), max(u, v)))
        if not ok:
            continue
        g = _finish(n, seen)
        if is_connected(g):
            return g
    raise GenerationError(
        f"no simple connected {d}-regular graph on {n} nodes after {retries} tries"
    )


def build_graph(kind: str, n: int, d: int | None = None, seed=None) -> Graph:
    """Build a connected graph of the requested family.

    kind is one of complete, cycle, hypercube, random_regular, torus;
    d and seed are only used by random_regular.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if kind == "complete":
        return _complete(n)
    if kind == "cycle":
        return _cycle(n)
    if kind == "hypercube":
        return _hypercube(n)
    if kind == "torus":
        return _torus(n)
    if kind == "random_regular":
        return _random_regular(n, d, seed)
    raise ValueError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")


def lazy_diffusion_matrix(g: Graph) -> np.ndarray:
    """Transition matrix with every edge active: off-diagonal 1/(2*Delta)
    per edge, diagonal 1 - deg(u)/(2*Delta), where Delta is the max degree."""
    delta = int(g.degree.max())
    p = g.adjacency() / (2.0 * delta)
    p[np.diag_indices(g.n)] = 1.0 - g.degree / (2.0 * delta)
    return p


def spectral_gap(g: Graph) -> float:
    """1 - lambda_2 of the lazy diffusion matrix of g.

    Raises ValueError for disconnected graphs, where the gap degenerates
    to 0 and experiments parameterized by it are meaningless.
    """
    if not is_connected(g):
        raise ValueError("spectral_gap is undefined for disconnected graphs")
    vals = np.linalg.eigvalsh(lazy_diffusion_matrix(g))
    return float(1.0 - vals[-2])


def save_edge_list(g: Graph, path) -> None:
    """Write the graph as text: first line "n m", then one "u v" line per edge."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def load_edge_list(path) -> Graph:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("expected header line 'n m'")
        n, m = int(header[0]), int(header[1])
        edges = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            u, v = line.split()
            edges.append((int(u), int(v)))
    if len(edges) != m:
        raise ValueError(f"header claims {m} edges, file has {len(edges)}")
    return _finish(n, edges)
