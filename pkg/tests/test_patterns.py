from fractions import Fraction
from itertools import permutations, product

import numpy as np
import pytest

from pluralitysim.graphs import build_graph
from pluralitysim.patterns import (
    ActiveEdgeSet,
    PatternSpec,
    canonical_matchings,
    empirical_pmin,
    generate,
    matching_from_file,
    max_active_degree,
    neighbor_csr,
    round_robin_matchings,
)


def _is_matching(pairs):
    touched = set()
    for u, v in pairs:
        if u in touched or v in touched:
            return False
        touched.add(u)
        touched.add(v)
    return True


def test_diffusion_all_edges():
    g = build_graph("complete", 4)
    spec = PatternSpec(model="diffusion", graph=g)
    for t in (1, 7, 100):
        assert generate(spec, t).pairs == g.edges


def test_balancing_circuit_round_robin_index():
    g = build_graph("complete", 4)
    matchings = round_robin_matchings(4, 2)
    spec = PatternSpec(model="balancing_circuit", graph=g, matchings=tuple(matchings))
    assert generate(spec, 5).pairs == tuple(matchings[1])


def test_balancing_circuit_periodicity():
    g = build_graph("hypercube", 8)
    matchings = canonical_matchings("hypercube", g)
    spec = PatternSpec(model="balancing_circuit", graph=g, matchings=matchings)
    d = len(matchings)
    for t in range(1, 3 * d):
        assert generate(spec, t).pairs == generate(spec, t + d).pairs


def test_sequential_one_edge():
    g = build_graph("cycle", 6)
    spec = PatternSpec(model="sequential", graph=g, seed=3)
    seen = set()
    for t in range(1, 200):
        act = generate(spec, t)
        assert len(act.pairs) == 1
        assert act.pairs[0] in g.edges
        seen.add(act.pairs[0])
    assert seen == set(g.edges)  # every edge eventually drawn


def test_generate_deterministic_per_round():
    g = build_graph("random_regular", 10, d=3, seed=9)
    spec = PatternSpec(model="random_matching", graph=g, matching_probability=0.7, seed=5)
    for t in (1, 2, 17, 400):
        assert generate(spec, t).pairs == generate(spec, t).pairs
    # out-of-order regeneration matches in-order
    early = generate(spec, 3).pairs
    generate(spec, 999)
    assert generate(spec, 3).pairs == early


def test_random_matching_is_matching_on_random_graphs():
    rng = np.random.default_rng(1)
    for i in range(10):
        n = int(rng.integers(6, 16))
        d = int(rng.integers(2, 5))
        if (n * d) % 2:
            n += 1
        g = build_graph("random_regular", n, d=d, seed=int(rng.integers(1 << 30)))
        spec = PatternSpec(model="random_matching", graph=g, matching_probability=0.8, seed=i)
        edge_set = set(g.edges)
        for t in range(1, 1001):
            pairs = generate(spec, t).pairs
            assert _is_matching(pairs)
            assert all(p in edge_set for p in pairs)


def test_max_active_degree_by_model():
    g = build_graph("random_regular", 8, d=3, seed=1)
    assert max_active_degree(PatternSpec(model="diffusion", graph=g)) == 3
    assert max_active_degree(PatternSpec(model="sequential", graph=g)) == 1
    assert max_active_degree(PatternSpec(model="random_matching", graph=g)) == 1


def test_empirical_pmin_single_edge():
    g = build_graph("complete", 2)
    spec = PatternSpec(model="random_matching", graph=g, matching_probability=1.0, seed=0)
    est = empirical_pmin(spec, 500)
    assert est.value == 1.0
    assert est.samples == 500


def test_empirical_pmin_wrong_model():
    g = build_graph("complete", 4)
    with pytest.raises(ValueError):
        empirical_pmin(PatternSpec(model="diffusion", graph=g), 10)


def _exact_greedy_marginals_c4(p: Fraction):
    """Enumerate the greedy construction on the 4-cycle: all 4! edge orders
    times all coin outcomes, exact rational weights."""
    edges = [(0, 1), (1, 2), (2, 3), (0, 3)]
    marg = {e: Fraction(0) for e in edges}
    for order in permutations(range(4)):
        for coins in product([0, 1], repeat=4):
            w = Fraction(1, 24)
            for c in coins:
                w *= p if c else 1 - p
            matched = set()
            for e in order:
                u, v = edges[e]
                if coins[e] and u not in matched and v not in matched:
                    matched.update((u, v))
                    marg[edges[e]] += w
    return marg


def test_random_matching_pmin_cycle4_vs_enumeration():
    g = build_graph("cycle", 4)
    spec = PatternSpec(model="random_matching", graph=g, matching_probability=0.5, seed=42)
    exact = _exact_greedy_marginals_c4(Fraction(1, 2))
    assert all(v == Fraction(31, 96) for v in exact.values())
    samples = 10_000
    index = {e: i for i, e in enumerate(g.edges)}
    hits = np.zeros(4)
    for t in range(1, samples + 1):
        for pair in generate(spec, t).pairs:
            hits[index[pair]] += 1
    freq = hits / samples
    sigma = np.sqrt(float(Fraction(31, 96)) * (1 - float(Fraction(31, 96))) / samples)
    assert (np.abs(freq - float(Fraction(31, 96))) <= 3 * sigma).all()
    assert (freq >= 0.25 - 3 * sigma).all()
    est = empirical_pmin(spec, samples)
    assert 0.0 <= est.value <= 1.0
    assert abs(est.value - float(Fraction(31, 96))) <= 4 * sigma


def test_neighbor_csr():
    indptr, indices = neighbor_csr([(0, 1), (1, 2)], 4)
    assert indptr.tolist() == [0, 1, 3, 4, 4]
    assert sorted(indices[1:3].tolist()) == [0, 2]


def test_pattern_spec_validation():
    g = build_graph("complete", 4)
    with pytest.raises(ValueError):
        PatternSpec(model="balancing_circuit", graph=g, matchings=())
    with pytest.raises(ValueError):
        PatternSpec(model="balancing_circuit", graph=g, matchings=(((0, 1),),))
    with pytest.raises(ValueError):
        PatternSpec(model="random_matching", graph=g, matching_probability=0.0)
    with pytest.raises(ValueError):
        PatternSpec(model="gossip", graph=g)


def test_round_robin_matchings_are_perfect():
    for n in (4, 8, 10):
        g = build_graph("complete", n)
        for m in round_robin_matchings(n, n - 1):
            assert _is_matching(m)
            assert len(m) == n // 2
            assert all(p in set(g.edges) for p in m)


def test_matching_from_file(tmp_path):
    g = build_graph("complete", 4)
    path = tmp_path / "m.txt"
    path.write_text("4 2\n0 1\n2 3\n")
    assert matching_from_file(path, g) == ((0, 1), (2, 3))
    bad = tmp_path / "bad.txt"
    bad.write_text("4 1\n0 1\n")
    with pytest.raises(ValueError):
        matching_from_file(bad, g)


def test_active_edge_set_degree():
    act = ActiveEdgeSet(round=1, n=4, pairs=((0, 1), (2, 3)))
    assert act.active_degree().tolist() == [1, 1, 1, 1]
