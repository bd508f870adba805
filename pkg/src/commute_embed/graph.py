"""Nearest-neighbour connectivity graph with Gaussian edge weights."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .dataset import as_matrix
from .errors import DegenerateInputError, DisconnectedGraphError, InputError

DEFAULT_SIGMA_MULTIPLIER = 2.0
# Upper bound on the size of one block of pairwise differences (float64 entries).
_BLOCK_ENTRIES = 1 << 23


@dataclass(frozen=True)
class GraphConfig:
    n_neighbors: int
    sigma_multiplier: float = DEFAULT_SIGMA_MULTIPLIER
    explicit_sigma: float | None = None

    def __post_init__(self):
        if int(self.n_neighbors) < 1:
            raise InputError(f"n_neighbors must be >= 1, got {self.n_neighbors}")
        if not 0 < self.sigma_multiplier <= 5:
            raise InputError(f"sigma_multiplier must be in (0, 5], got {self.sigma_multiplier}")
        if self.explicit_sigma is not None and not self.explicit_sigma > 0:
            raise InputError(f"explicit_sigma must be positive, got {self.explicit_sigma}")


@dataclass(frozen=True, eq=False)
class ConnectivityGraph:
    """Symmetric weighted graph.

    ``weights`` is a CSR matrix with zero diagonal, ``degrees[i]`` the row sum
    of ``weights``, ``neighbor_lists[i]`` the sorted ids adjacent to ``i``.
    ``knn`` keeps the directed nearest-neighbour table the graph was built
    from (``None`` for graphs built directly from a weight matrix).
    """

    weights: sp.csr_matrix
    degrees: np.ndarray
    sigma: float
    neighbor_lists: list
    knn: np.ndarray | None = None

    @property
    def n_nodes(self):
        return self.weights.shape[0]

    @property
    def volume(self):
        return float(self.degrees.sum())

    def edges(self):
        """Return ``(i, j, w)`` arrays of the edges with ``i < j``."""
        upper = sp.triu(self.weights, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return upper.row[order], upper.col[order], upper.data[order]


def _pairwise_sq_blocks(values):
    """Yield ``(start, sqdist)`` for row blocks of the squared-distance matrix.

    Distances are summed from explicit differences so that ``d(i, j)`` and
    ``d(j, i)`` are bitwise equal and exact duplicates give exactly zero.
    """
    n, t = values.shape
    step = max(1, _BLOCK_ENTRIES // max(1, n * t))
    for start in range(0, n, step):
        block = values[start:start + step]
        diff = block[:, None, :] - values[None, :, :]
        yield start, np.einsum("ijk,ijk->ij", diff, diff)


def _scan(values, n_neighbors):
    """One pass over all pairs: kNN table and the closest distinct pair."""
    n = values.shape[0]
    knn = np.empty((n, n_neighbors), dtype=np.int64)
    best = (np.inf, -1, -1)
    for start, d2 in _pairwise_sq_blocks(values):
        rows = np.arange(start, start + d2.shape[0])
        d2[rows - start, rows] = np.inf
        if n_neighbors:
            # stable sort: equal distances keep ascending index order
            knn[rows] = np.argsort(d2, axis=1, kind="stable")[:, :n_neighbors]
        upper = np.where(np.arange(n)[None, :] > rows[:, None], d2, np.inf)
        flat = int(np.argmin(upper))
        r, c = divmod(flat, n)
        if upper[r, c] < best[0]:
            best = (float(upper[r, c]), start + r, c)
    return knn, best


def knn_neighbors(X, n_neighbors):
    """Indices of the ``n_neighbors`` nearest rows of every row (self excluded).

    Returns an ``(N, n_neighbors)`` integer array ordered by increasing
    Euclidean distance; ties go to the smaller index.
    """
    X = as_matrix(X)
    n_neighbors = int(n_neighbors)
    if not 1 <= n_neighbors < X.n_points:
        raise InputError(f"n_neighbors must be in [1, N={X.n_points}), got {n_neighbors}")
    return _scan(X.values, n_neighbors)[0]


def _sigma_from_min(best, multiplier):
    d2, i, j = best
    if d2 == 0.0:
        raise DegenerateInputError(
            f"rows {i} and {j} are identical; the sigma heuristic would give 0 "
            "(remove duplicates or pass an explicit sigma)"
        )
    return multiplier * float(np.sqrt(d2))


def sigma_heuristic(X, multiplier=DEFAULT_SIGMA_MULTIPLIER):
    """``multiplier`` times the smallest distance between two distinct rows."""
    X = as_matrix(X)
    if not multiplier > 0:
        raise InputError(f"multiplier must be positive, got {multiplier}")
    return _sigma_from_min(_scan(X.values, 0)[1], multiplier)


def gaussian_weight(sq_dist, sigma):
    return np.exp(-np.asarray(sq_dist) / sigma**2)


def build_graph(X, cfg):
    """Union-symmetrised kNN graph with weights ``exp(-|x_i - x_j|^2 / sigma^2)``."""
    X = as_matrix(X)
    n = X.n_points
    k = int(cfg.n_neighbors)
    if k >= n:
        raise InputError(f"n_neighbors must be < N={n}, got {k}")
    knn, best = _scan(X.values, k)
    if cfg.explicit_sigma is not None:
        sigma = float(cfg.explicit_sigma)
    else:
        sigma = _sigma_from_min(best, cfg.sigma_multiplier)

    rows = np.repeat(np.arange(n), k)
    cols = knn.ravel()
    lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
    diff = X.values[pairs[:, 0]] - X.values[pairs[:, 1]]
    w = gaussian_weight(np.einsum("ij,ij->i", diff, diff), sigma)
    return graph_from_edges(n, pairs[:, 0], pairs[:, 1], w, sigma=sigma, knn=knn)


def graph_from_edges(n, i, j, w, sigma=float("nan"), knn=None):
    """Assemble a graph from undirected edges; zero-weight edges are dropped.

    Raises :class:`DisconnectedGraphError` unless the positive-weight graph
    is connected.
    """
    i, j, w = np.asarray(i), np.asarray(j), np.asarray(w, dtype=np.float64)
    if np.any(i == j):
        raise InputError("self-loops are not allowed")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InputError("edge weights must be finite and non-negative")
    keep = w > 0
    i, j, w = i[keep], j[keep], w[keep]
    upper = sp.coo_matrix((w, (np.minimum(i, j), np.maximum(i, j))), shape=(n, n)).tocsr()
    upper.sum_duplicates()
    W = (upper + upper.T).tocsr()
    W.sort_indices()
    n_comp, labels = connected_components(W, directed=False)
    if n_comp > 1:
        raise DisconnectedGraphError(np.bincount(labels).tolist())
    degrees = np.asarray(W.sum(axis=1)).ravel()
    neighbor_lists = [W.indices[W.indptr[r]:W.indptr[r + 1]].copy() for r in range(n)]
    return ConnectivityGraph(W, degrees, float(sigma), neighbor_lists, knn)


def graph_from_weights(W):
    """Wrap a symmetric dense or sparse weight matrix as a graph."""
    W = sp.coo_matrix(W)
    if (abs(sp.csr_matrix(W) - sp.csr_matrix(W).T)).sum() != 0:
        raise InputError("weight matrix is not symmetric")
    mask = W.row < W.col
    return graph_from_edges(W.shape[0], W.row[mask], W.col[mask], W.data[mask])


def clustering_coefficients(G):
    """Per-node clustering coefficients and their mean.

    ``C_i = 2 e_i / (k_i (k_i - 1))`` with ``k_i`` the number of neighbours
    of ``i`` and ``e_i`` the number of edges among them; nodes with fewer
    than two neighbours get 0.
    """
    A = (G.weights > 0).astype(np.float64)
    k = np.asarray(A.sum(axis=1)).ravel()
    e = np.asarray((A @ A).multiply(A).sum(axis=1)).ravel() / 2.0
    c = np.zeros_like(k)
    ok = k >= 2
    c[ok] = 2.0 * e[ok] / (k[ok] * (k[ok] - 1.0))
    return c, float(c.mean())


def save_graph_csv(G, path):
    i, j, w = G.edges()
    with open(path, "w") as fh:
        fh.write("i,j,weight\n")
        for a, b, c in zip(i, j, w):
            fh.write(f"{a},{b},{float(c)!r}\n")
