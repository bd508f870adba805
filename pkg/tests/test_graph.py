import itertools

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from commute_embed.errors import DegenerateInputError, DisconnectedGraphError, InputError
from commute_embed.graph import (
    GraphConfig,
    build_graph,
    clustering_coefficients,
    gaussian_weight,
    graph_from_edges,
    graph_from_weights,
    knn_neighbors,
    save_graph_csv,
    sigma_heuristic,
)
from commute_embed.graphgen import complete_graph


def on_line(*xs):
    return np.column_stack([xs, np.zeros(len(xs))]).astype(float)


def brute_knn(x, k):
    d = np.sqrt(((x[:, None] - x[None]) ** 2).sum(-1))
    out = []
    for i in range(len(x)):
        others = sorted((d[i, j], j) for j in range(len(x)) if j != i)
        out.append([j for _, j in others[:k]])
    return np.array(out)


def test_knn_on_a_line():
    np.testing.assert_array_equal(knn_neighbors(on_line(0, 1, 3, 7), 1).ravel(), [1, 0, 1, 2])


def test_knn_duplicates_find_each_other():
    x = on_line(5, 5, 0, 9)
    nb = knn_neighbors(x, 1).ravel()
    assert nb[0] == 1 and nb[1] == 0


def test_knn_ties_go_to_smaller_index():
    # 0 is equidistant from 1 and 2
    assert knn_neighbors(on_line(0, -1, 1, 10), 1)[0, 0] == 1


def test_knn_matches_brute_force(rng):
    x = rng.normal(size=(50, 4))
    np.testing.assert_array_equal(knn_neighbors(x, 5), brute_knn(x, 5))


def test_knn_range():
    with pytest.raises(InputError):
        knn_neighbors(on_line(0, 1, 2), 3)


@given(st.integers(0, 2**32 - 1))
def test_knn_permutation_equivariant(seed):
    g = np.random.default_rng(seed)
    x = g.normal(size=(15, 3))
    perm = g.permutation(15)
    a = knn_neighbors(x, 3)
    b = knn_neighbors(x[perm], 3)
    # continuous random data has no ties, so the tables agree after relabelling
    np.testing.assert_array_equal(perm[b], a[perm])


def test_sigma_line():
    assert sigma_heuristic(on_line(0, 1, 3)) == 2.0


def test_sigma_default_multiplier_is_two():
    assert GraphConfig(3).sigma_multiplier == 2.0


def test_sigma_matches_min_pair(rng):
    x = rng.normal(size=(20, 3))
    d = [np.linalg.norm(a - b) for a, b in itertools.combinations(x, 2)]
    assert sigma_heuristic(x, 1.5) == pytest.approx(1.5 * min(d), rel=1e-12)


def test_sigma_duplicates_rejected():
    with pytest.raises(DegenerateInputError, match="rows 0 and 2"):
        sigma_heuristic(on_line(1, 4, 1))


def test_weight_values():
    assert gaussian_weight(0.0, 3.0) == 1.0
    assert gaussian_weight(4.0, 2.0) == pytest.approx(0.36787944117144233, abs=1e-15)


def test_explicit_sigma_with_duplicates():
    G = build_graph(on_line(0, 0, 1), GraphConfig(1, explicit_sigma=1.0))
    assert G.weights[0, 1] == 1.0


def test_config_validation():
    with pytest.raises(InputError):
        GraphConfig(0)
    with pytest.raises(InputError):
        GraphConfig(3, sigma_multiplier=0)
    with pytest.raises(InputError):
        GraphConfig(3, explicit_sigma=-1.0)


def test_union_symmetrisation():
    # 7's nearest is 3, but 3's nearest is 1: the edge (2,3) exists only by union
    G = build_graph(on_line(0, 1, 3, 7), GraphConfig(1))
    i, j, _ = G.edges()
    assert list(zip(i.tolist(), j.tolist())) == [(0, 1), (1, 2), (2, 3)]


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_graph_invariants(seed, k):
    x = np.random.default_rng(seed).normal(size=(25, 4))
    try:
        G = build_graph(x, GraphConfig(k))
    except DisconnectedGraphError:
        assume(False)
    W = G.weights.toarray()
    assert np.array_equal(W, W.T)
    assert np.all(np.diag(W) == 0)
    np.testing.assert_allclose(G.degrees, W.sum(1), rtol=1e-12)
    for i, nb in enumerate(G.neighbor_lists):
        np.testing.assert_array_equal(nb, np.nonzero(W[i])[0])


@given(st.integers(0, 2**32 - 1))
def test_weights_increase_with_sigma(seed):
    x = np.random.default_rng(seed).normal(size=(12, 3))
    try:
        lo = build_graph(x, GraphConfig(3, explicit_sigma=1.0)).weights.toarray()
    except DisconnectedGraphError:
        assume(False)
    hi = build_graph(x, GraphConfig(3, explicit_sigma=1.5)).weights.toarray()
    on = lo > 0
    assert np.all(hi[on] > lo[on])


def test_disconnected_reports_sizes():
    with pytest.raises(DisconnectedGraphError, match=r"\[3, 2\]"):
        graph_from_edges(5, [0, 1, 3], [1, 2, 4], [1.0, 1.0, 1.0])


def test_disconnected_knn_input():
    x = on_line(0, 1, 2, 100, 101)
    with pytest.raises(DisconnectedGraphError):
        build_graph(x, GraphConfig(1))


def test_graph_from_weights_rejects_asymmetric():
    with pytest.raises(InputError):
        graph_from_weights(np.array([[0, 1.0], [2.0, 0]]))


def test_clustering_clique():
    c, mean = clustering_coefficients(complete_graph(4))
    np.testing.assert_array_equal(c, 1.0)
    assert mean == 1.0


def test_clustering_star_hub():
    G = graph_from_edges(4, [0, 0, 0], [1, 2, 3], [1.0, 1.0, 1.0])
    assert clustering_coefficients(G)[0][0] == 0.0


def test_clustering_brute_force(rng):
    x = rng.normal(size=(30, 3))
    G = build_graph(x, GraphConfig(4))
    A = G.weights.toarray() > 0
    c, _ = clustering_coefficients(G)
    for i in range(30):
        nb = np.nonzero(A[i])[0]
        if len(nb) < 2:
            assert c[i] == 0
            continue
        links = sum(A[a, b] for a, b in itertools.combinations(nb, 2))
        assert c[i] == pytest.approx(links / (len(nb) * (len(nb) - 1) / 2), rel=1e-12)


def test_save_graph_csv(tmp_path):
    save_graph_csv(graph_from_edges(3, [0, 1], [1, 2], [0.5, 1.0]), tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text() == "i,j,weight\n0,1,0.5\n1,2,1.0\n"


def test_barbell_layout():
    from commute_embed.graphgen import barbell_graph

    G = barbell_graph(4)
    assert G.n_nodes == 8 and G.weights.nnz == 2 * (2 * 6 + 1)
    assert G.weights[3, 4] == 1.0 and G.weights[0, 4] == 0.0


def test_random_suite_is_seeded_and_connected():
    from commute_embed.graphgen import random_graph_suite

    a = random_graph_suite(5, seed=3)
    b = random_graph_suite(5, seed=3)
    for g, h in zip(a, b):
        assert 5 <= g.n_nodes <= 30
        assert (g.weights != h.weights).nnz == 0
        w = g.weights.data
        assert np.all((w > 0) & (w <= 1))
