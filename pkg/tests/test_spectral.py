import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from commute_embed.errors import InputError, NumericError
from commute_embed.graph import GraphConfig, build_graph, graph_from_edges
from commute_embed.graphgen import (
    barbell_graph,
    cycle_graph,
    path_graph,
    random_connected_graph,
)
from commute_embed.spectral import (
    ResidualCurve,
    commute_distance,
    commute_matrix,
    decompose,
    embed,
    load_embedding_csv,
    normalized_affinity,
    residual_curve,
    save_eigenvalues_csv,
    save_eigenvectors_csv,
    save_embedding_csv,
    select_dimension,
)
from commute_embed.walk import build_walk_model, hitting_times

seeds = st.integers(0, 2**32 - 1)


def random_graph(seed, lo=5, hi=30):
    g = np.random.default_rng(seed)
    return random_connected_graph(int(g.integers(lo, hi + 1)), g)


def resistance_commute(G):
    # vol(G) times effective resistance from the Laplacian pseudo-inverse
    W = G.weights.toarray()
    Lp = np.linalg.pinv(np.diag(W.sum(1)) - W)
    d = np.diag(Lp)
    return W.sum() * (d[:, None] + d[None, :] - 2 * Lp)


def full(G):
    return decompose(G, G.n_nodes)


def test_two_node_spectrum():
    dec = full(graph_from_edges(2, [0], [1], [1.0]))
    np.testing.assert_allclose(dec.eigenvalues, [1.0, -1.0], atol=1e-15)
    np.testing.assert_allclose(dec.eigenvectors[:, 0], [2**-0.5, 2**-0.5], atol=1e-15)


def test_two_node_embedding():
    # Psi = phi_2 / sqrt(pi (1 - lambda_2)) with phi_2 = (1, -1)/sqrt(2), pi = 1/2, lambda_2 = -1
    emb = embed(full(graph_from_edges(2, [0], [1], [1.0])), 1)
    np.testing.assert_allclose(np.abs(emb.coords.ravel()), [2**-0.5, 2**-0.5], atol=1e-15)
    assert emb.coords[0, 0] == -emb.coords[1, 0]
    # squared distance is the commute time 2 = vol * R_eff = 2 * 1
    assert (emb.coords[0, 0] - emb.coords[1, 0]) ** 2 == pytest.approx(2.0, rel=1e-14)


def test_path_spectrum():
    dec = full(path_graph(3))
    np.testing.assert_allclose(dec.eigenvalues, [1.0, 0.0, -1.0], atol=1e-14)


def test_path_commute_times():
    dec = full(path_graph(3))
    assert commute_distance(dec, 0, 1) == pytest.approx(4.0, rel=1e-12)
    assert commute_distance(dec, 0, 2) == pytest.approx(8.0, rel=1e-12)


@given(seeds)
def test_top_eigenvector_is_sqrt_pi(seed):
    dec = decompose(random_graph(seed), 3)
    assert dec.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(dec.eigenvectors[:, 0], np.sqrt(dec.stationary), atol=1e-10)


@given(seeds)
def test_eigen_equation(seed):
    G = random_graph(seed)
    dec = full(G)
    S = normalized_affinity(G).toarray()
    resid = S @ dec.eigenvectors - dec.eigenvectors * dec.eigenvalues
    assert np.abs(resid).max() <= 1e-8
    # the same pairs solve the normalized Laplacian problem with eigenvalue 1 - lambda
    L = np.eye(G.n_nodes) - S
    assert np.abs(L @ dec.eigenvectors - dec.eigenvectors * (1 - dec.eigenvalues)).max() <= 1e-8


@given(seeds)
def test_commute_matches_resistance_oracle(seed):
    G = random_graph(seed)
    spec = commute_matrix(full(G))
    ref = resistance_commute(G)
    off = ~np.eye(G.n_nodes, dtype=bool)
    assert np.max(np.abs(spec[off] - ref[off]) / ref[off]) <= 1e-8


@given(seeds)
def test_commute_matches_walk_oracle(seed):
    G = random_graph(seed)
    dec = full(G)
    H = hitting_times(build_walk_model(G))
    n = G.n_nodes
    for i in range(n):
        for j in range(i + 1, n):
            exact = H[i, j] + H[j, i]
            assert abs(commute_distance(dec, i, j) - exact) <= 1e-8 * exact


@given(seeds)
def test_isometry(seed):
    G = random_graph(seed)
    dec = full(G)
    psi = embed(dec, G.n_nodes - 1).coords
    d2 = ((psi[:, None] - psi[None]) ** 2).sum(-1)
    kappa = commute_matrix(dec)
    off = ~np.eye(G.n_nodes, dtype=bool)
    assert np.max(np.abs(d2[off] - kappa[off]) / kappa[off]) <= 1e-8


@given(seeds)
def test_truncation_monotone(seed):
    G = random_graph(seed, 5, 15)
    dec = full(G)
    for i, j in [(0, 1), (0, G.n_nodes - 1), (1, 2)]:
        series = [commute_distance(dec, i, j, m) for m in range(1, G.n_nodes + 1)]
        assert all(b >= a for a, b in zip(series, series[1:]))


def test_self_distance_and_symmetry(rng):
    dec = full(random_connected_graph(12, rng))
    assert commute_distance(dec, 3, 3) == 0.0
    assert commute_distance(dec, 2, 7) == commute_distance(dec, 7, 2)


def test_sign_convention_is_deterministic(rng):
    G = random_connected_graph(25, rng)
    a, b = decompose(G, 6), decompose(G, 6)
    np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)
    idx = np.argmax(np.abs(a.eigenvectors), axis=0)
    assert np.all(a.eigenvectors[idx, np.arange(6)] > 0)


def test_sparse_solver_agrees_with_dense(rng):
    x = rng.normal(size=(200, 5))
    G = build_graph(x, GraphConfig(8))
    sparse = decompose(G, 6)
    dense = decompose(G, 6, dense_cutoff=10**6)
    np.testing.assert_allclose(sparse.eigenvalues, dense.eigenvalues, atol=1e-10)
    np.testing.assert_allclose(np.abs(sparse.eigenvectors.T @ dense.eigenvectors), np.eye(6), atol=1e-7)


def test_fiedler_split_barbell():
    dec = decompose(barbell_graph(10), 2)
    side = dec.eigenvectors[:, 1] > 0
    assert side[:10].all() != side[10:].all()
    assert len(set(side[:10])) == 1 and len(set(side[10:])) == 1


def test_degenerate_pairs_flagged():
    dec = full(cycle_graph(6))
    # the 6-cycle has eigenvalues cos(2 pi k / 6): 1, 1/2, 1/2, -1/2, -1/2, -1
    np.testing.assert_array_equal(dec.degenerate, [0, 1, 1, 1, 1, 0])
    # commute time is still well defined: 6-cycle, adjacent nodes, vol 12, R = 5/6
    assert commute_distance(dec, 0, 1) == pytest.approx(10.0, rel=1e-12)


def test_n_pairs_range():
    G = path_graph(4)
    with pytest.raises(InputError):
        decompose(G, 1)
    with pytest.raises(InputError):
        decompose(G, 5)
    with pytest.raises(InputError):
        embed(decompose(G, 2), 2)


def test_nearly_disconnected_is_numeric_error():
    G = graph_from_edges(4, [0, 1, 2], [1, 2, 3], [1.0, 1e-300, 1.0])
    with pytest.raises(NumericError):
        decompose(G, 3)


# -- residual curves ----------------------------------------------------------


def projection_oracle(x, G, region, K):
    S = normalized_affinity(G).toarray()
    vals, vecs = np.linalg.eigh(S)
    phi = vecs[:, ::-1][:, :K]
    xhat = phi @ np.linalg.solve(phi.T @ phi, phi.T @ x)
    err = ((x - xhat) ** 2).sum(1) / (x**2).sum(1)
    return err[region].mean()


def test_residual_full_basis_is_zero(rng):
    G = random_connected_graph(15, rng)
    x = rng.normal(size=(15, 6))
    curve = residual_curve(x, full(G), np.arange(15), 15)
    assert curve.values[-1] <= 1e-10


def test_residual_one_term_exact_for_phi1(rng):
    G = random_connected_graph(10, rng)
    dec = full(G)
    x = np.outer(dec.eigenvectors[:, 0], rng.normal(size=5))
    assert residual_curve(x, dec, np.arange(10), 3).values[0] <= 1e-12


def test_residual_matches_projection_oracle(rng):
    G = random_connected_graph(20, rng)
    x = rng.normal(size=(20, 7))
    region = np.array([1, 4, 5, 11, 19])
    curve = residual_curve(x, full(G), region, 20)
    ref = [projection_oracle(x, G, region, K) for K in range(1, 21)]
    np.testing.assert_allclose(curve.values, ref, atol=1e-10)


def test_residual_rejects_zero_row(rng):
    G = random_connected_graph(6, rng)
    x = rng.normal(size=(6, 4))
    x[2] = 0
    with pytest.raises(InputError):
        residual_curve(x, full(G), [2, 3], 3)
    with pytest.raises(InputError):
        residual_curve(x, full(G), [], 3)


def test_knee_by_hand():
    # largest drop 1.0 -> 0.2 at K=1; the next drop 0.01 is below 0.1 * 0.8
    assert select_dimension([[1.0, 0.2, 0.19, 0.18, 0.17]]) == 2


def test_knee_max_over_curves():
    a = [1.0, 0.2, 0.19, 0.18, 0.17]
    b = [1.0, 0.9, 0.8, 0.1, 0.09, 0.085]
    assert select_dimension([a]) == 2
    assert select_dimension([b]) == 4
    assert select_dimension([ResidualCurve(np.arange(2), np.array(a)), b]) == 4


def test_knee_linear_decay_has_none():
    with pytest.raises(NumericError):
        select_dimension([np.linspace(1.0, 0.0, 10)])


def test_knee_flat_curve():
    with pytest.raises(NumericError, match="manually"):
        select_dimension([[0.5, 0.5, 0.5]])


def test_output_files(tmp_path):
    dec = full(path_graph(3))
    emb = embed(dec, 2)
    save_embedding_csv(emb, tmp_path / "e.csv")
    np.testing.assert_array_equal(load_embedding_csv(tmp_path / "e.csv").coords, emb.coords)
    save_eigenvectors_csv(dec, tmp_path / "v.csv")
    assert (tmp_path / "v.csv").read_text().splitlines()[0] == "index,phi2,phi3"
    save_eigenvalues_csv(dec, tmp_path / "l.csv")
    assert (tmp_path / "l.csv").read_text().splitlines()[1] == "1,1.0,0"
