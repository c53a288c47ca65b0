import numpy as np
import pytest

from pluralitysim.graphs import (
    GenerationError,
    build_graph,
    is_connected,
    lazy_diffusion_matrix,
    load_edge_list,
    save_edge_list,
    spectral_gap,
)


def test_complete_k4_structure():
    g = build_graph("complete", 4)
    assert g.m == 6
    assert (g.degree == 3).all()


def test_cycle_structure():
    g = build_graph("cycle", 5)
    assert g.m == 5
    assert (g.degree == 2).all()
    assert is_connected(g)


def test_hypercube_structure():
    g = build_graph("hypercube", 8)
    assert g.m == 12
    assert (g.degree == 3).all()
    assert is_connected(g)


def test_torus_structure():
    g = build_graph("torus", 9)
    assert g.m == 18
    assert (g.degree == 4).all()
    assert is_connected(g)


def test_random_regular_handshake():
    g = build_graph("random_regular", 8, d=3, seed=1)
    assert int(g.degree.sum()) == 24
    assert len(set(g.edges)) == g.m
    assert all(u < v for u, v in g.edges)
    assert is_connected(g)


@pytest.mark.parametrize(
    "kind,n,d",
    [
        ("complete", 1, None),
        ("cycle", 2, None),
        ("hypercube", 12, None),
        ("torus", 8, None),
        ("torus", 4, None),  # side 2 would duplicate wrap edges
        ("random_regular", 8, 9),
        ("random_regular", 5, 3),  # odd n*d
        ("nonsense", 8, None),
    ],
)
def test_invalid_parameters(kind, n, d):
    with pytest.raises(ValueError):
        build_graph(kind, n, d=d)


def test_random_regular_generation_failure():
    # d = n-1 forces the complete graph; the pairing model almost never
    # produces it in one shot, so a tiny retry budget gives up.
    with pytest.raises(GenerationError):
        import pluralitysim.graphs as graphs

        graphs._random_regular(8, 7, seed=0, retries=1)


def test_handshake_identity_across_families():
    samples = [
        build_graph("complete", 7),
        build_graph("cycle", 9),
        build_graph("hypercube", 16),
        build_graph("torus", 16),
        build_graph("random_regular", 10, d=4, seed=3),
    ]
    for g in samples:
        assert int(g.degree.sum()) == 2 * g.m


def test_spectral_gap_k4():
    # adjacency eigenvalues of K_4 are {3, -1, -1, -1}; the lazy matrix
    # maps them through 1/2 + a/6, so lambda_2 = 1/3
    assert spectral_gap(build_graph("complete", 4)) == pytest.approx(2 / 3, abs=1e-12)


def test_spectral_gap_cycle4():
    assert spectral_gap(build_graph("cycle", 4)) == pytest.approx(1 / 2, abs=1e-12)


def test_spectral_gap_k2():
    # the lazy matrix of K_2 is [[1/2, 1/2], [1/2, 1/2]] with eigenvalues
    # {1, 0}, so the gap is a full 1 - computed, not assumed
    assert spectral_gap(build_graph("complete", 2)) == pytest.approx(1.0, abs=1e-12)


def test_spectral_gap_clique_lower_bound():
    for n in (3, 5, 8, 13, 21):
        assert spectral_gap(build_graph("complete", n)) >= 0.5


def test_lazy_matrix_eigenvalues_in_unit_interval():
    for g in (
        build_graph("cycle", 8),
        build_graph("hypercube", 16),
        build_graph("random_regular", 12, d=3, seed=5),
    ):
        vals = np.linalg.eigvalsh(lazy_diffusion_matrix(g))
        assert vals.min() >= -1e-12
        assert vals.max() <= 1 + 1e-12


def test_spectral_gap_relabel_invariant():
    g = build_graph("random_regular", 10, d=4, seed=11)
    rng = np.random.default_rng(0)
    perm = rng.permutation(g.n)
    import pluralitysim.graphs as graphs

    relabeled = graphs._finish(g.n, [(int(perm[u]), int(perm[v])) for u, v in g.edges])
    assert spectral_gap(relabeled) == pytest.approx(spectral_gap(g), abs=1e-9)


def test_spectral_gap_disconnected_rejected():
    import pluralitysim.graphs as graphs

    g = graphs._finish(4, [(0, 1), (2, 3)])
    with pytest.raises(ValueError):
        spectral_gap(g)


def test_edge_list_roundtrip(tmp_path):
    g = build_graph("random_regular", 10, d=3, seed=2)
    path = tmp_path / "g.txt"
    save_edge_list(g, path)
    loaded = load_edge_list(path)
    assert loaded.n == g.n
    assert loaded.edges == g.edges
    first = path.read_text().splitlines()[0]
    assert first == f"{g.n} {g.m}"


def test_edge_list_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3 2\n0 1\n")
    with pytest.raises(ValueError):
        load_edge_list(path)
