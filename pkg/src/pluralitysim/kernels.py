"""Hot inner loops, JIT-compiled with numba when available.

The backend is chosen once at import from the PLURALITYSIM_BACKEND
environment variable:

  auto   (default) compile with numba if importable, else run uncompiled
  numba  require numba, raise if missing
  numpy  force the uncompiled pure-Python/numpy fallback

Every kernel is a plain function over numpy arrays and a numpy Generator,
and both backends execute the same source, drawing from the Generator in
the same order. Results are therefore bit-identical across backends; only
speed differs (see benchmarks/bench_backends.py).

Bounded integer draws use int(rng.random() * m), which is ~10x faster than
rng.integers inside tight loops; the 2^-53-level bias is irrelevant at
simulation scale.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "shuffle_round",
    "balance_round",
    "walk_round",
    "shuffle_tracked_runs",
    "walk_tracked_runs",
]

_env = os.environ.get("PLURALITYSIM_BACKEND", "auto").strip().lower()
if _env not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"PLURALITYSIM_BACKEND={_env!r} not understood; use auto, numba, or numpy"
    )

_njit = None
if _env != "numpy":
    try:
        from numba import njit as _njit  # type: ignore
    except ImportError:
        if _env == "numba":
            raise
        _njit = None

BACKEND = "numpy" if _njit is None else "numba"


def _maybe_jit(fn):
    return fn if _njit is None else _njit(cache=True)(fn)


def _shuffle_round(counts, indptr, indices, gamma, two_delta, rng):
    """One shuffle round over token-count rows.

    counts[u, l] is the number of label-l tokens at node u (row sums all
    gamma). Each node deals a uniformly random permutation of its tokens
    into one slot of size gamma/(2*Delta) per active neighbor; the rest
    stays. Deliveries are simultaneous. Returns the new count matrix.
    """
    n, k = counts.shape
    out = np.zeros((n, k), dtype=np.int64)
    labels = np.empty(gamma, dtype=np.int64)
    slot = gamma // two_delta
    for u in range(n):
        lo = indptr[u]
        d = indptr[u + 1] - lo
        if d == 0:
            for l in range(k):
                out[u, l] += counts[u, l]
            continue
        pos = 0
        for l in range(k):
            for _ in range(counts[u, l]):
                labels[pos] = l
                pos += 1
        sent = d * slot
        for i in range(sent):
            j = i + int(rng.random() * (gamma - i))
            tmp = labels[i]
            labels[i] = labels[j]
            labels[j] = tmp
        for e in range(d):
            v = indices[lo + e]
            base = e * slot
            for i in range(base, base + slot):
                out[v, labels[i]] += 1
        for i in range(sent, gamma):
            out[u, labels[i]] += 1
    return out


def _balance_round(loads, indptr, indices, two_delta, rng):
    """One vertex-based balancing round over per-dimension integer loads.

    Each node sends floor(load/(2*Delta)) per dimension to every active
    neighbor and keeps floor(load*(2*Delta-d)/(2*Delta)); the excess
    (at most d tokens) is offered to the active neighbors in a uniformly
    random order, each taking one token on an independent coin flip, and
    whatever is left stays put. Per-dimension sums are conserved exactly.
    """
    n, k = loads.shape
    out = np.zeros((n, k), dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    for u in range(n):
        lo = indptr[u]
        d = indptr[u + 1] - lo
        if d == 0:
            for i in range(k):
                out[u, i] += loads[u, i]
            continue
        for i in range(k):
            load = loads[u, i]
            q = load // two_delta
            keep = (load * (two_delta - d)) // two_delta
            x = load - d * q - keep
            out[u, i] += keep
            for e in range(d):
                out[indices[lo + e], i] += q
            if x > 0:
                for e in range(d):
                    order[e] = e
                placed = 0
                for e in range(d):
                    if placed >= x:
                        break
                    j = e + int(rng.random() * (d - e))
                    tmp = order[e]
                    order[e] = order[j]
                    order[j] = tmp
                    if rng.random() < 0.5:
                        out[indices[lo + order[e]], i] += 1
                        placed += 1
                out[u, i] += x - placed
    return out


def _walk_round(pos, indptr, indices, two_delta, rng):
    """Advance independent walkers one round, in place.

    A walker at u moves to each active neighbor with probability
    1/(2*Delta) and stays otherwise.
    """
    for j in range(pos.shape[0]):
        u = pos[j]
        lo = indptr[u]
        d = indptr[u + 1] - lo
        if d > 0:
            i = int(rng.random() * two_delta)
            if i < d:
                pos[j] = indices[lo + i]


shuffle_round = _maybe_jit(_shuffle_round)
balance_round = _maybe_jit(_balance_round)
walk_round = _maybe_jit(_walk_round)


def _shuffle_tracked_runs(starts, n, gamma, two_delta, indptr, indices, record_rounds, reps, rng):
    """Monte Carlo replicas of the full shuffle dynamics with tracked tokens.

    Tracked tokens are given unique labels (one count column each) so they
    ride through exactly the same dealing code as any protocol run; all
    other tokens share label 0. indptr has shape (rounds, n+1) with global
    offsets into indices. Returns tracked positions with shape
    (reps, len(record_rounds), len(starts)); record_rounds is sorted and
    1-based.
    """
    m = starts.shape[0]
    n_rec = record_rounds.shape[0]
    rounds = indptr.shape[0]
    positions = np.empty((reps, n_rec, m), dtype=np.int64)
    for rep in range(reps):
        counts = np.zeros((n, m + 1), dtype=np.int64)
        for u in range(n):
            counts[u, 0] = gamma
        for j in range(m):
            counts[starts[j], 0] -= 1
            counts[starts[j], 1 + j] += 1
        ri = 0
        for r in range(rounds):
            counts = shuffle_round(counts, indptr[r], indices, gamma, two_delta, rng)
            if ri < n_rec and record_rounds[ri] == r + 1:
                for j in range(m):
                    for u in range(n):
                        if counts[u, 1 + j] == 1:
                            positions[rep, ri, j] = u
                            break
                ri += 1
    return positions


def _walk_tracked_runs(starts, indptr, indices, two_delta, record_rounds, reps, rng):
    """Monte Carlo replicas of independent walkers over a fixed pattern.

    Same layout conventions as shuffle_tracked_runs.
    """
    m = starts.shape[0]
    n_rec = record_rounds.shape[0]
    rounds = indptr.shape[0]
    positions = np.empty((reps, n_rec, m), dtype=np.int64)
    pos = np.empty(m, dtype=np.int64)
    for rep in range(reps):
        for j in range(m):
            pos[j] = starts[j]
        ri = 0
        for r in range(rounds):
            walk_round(pos, indptr[r], indices, two_delta, rng)
            if ri < n_rec and record_rounds[ri] == r + 1:
                for j in range(m):
                    positions[rep, ri, j] = pos[j]
                ri += 1
    return positions


shuffle_tracked_runs = _maybe_jit(_shuffle_tracked_runs)
walk_tracked_runs = _maybe_jit(_walk_tracked_runs)
