"""Small test graphs: random kNN topologies, paths, cycles, barbells."""

import numpy as np

from .graph import graph_from_edges


def path_graph(n, weight=1.0):
    i = np.arange(n - 1)
    return graph_from_edges(n, i, i + 1, np.full(n - 1, weight))


def cycle_graph(n, weight=1.0):
    i = np.arange(n)
    return graph_from_edges(n, i, (i + 1) % n, np.full(n, weight))


def complete_graph(n, weight=1.0):
    i, j = np.triu_indices(n, k=1)
    return graph_from_edges(n, i, j, np.full(len(i), weight))


def barbell_graph(clique_size, weight=1.0, bridge_weight=1.0):
    """Two cliques of ``clique_size`` nodes joined by one edge (last of the first, first of the second)."""
    i, j = np.triu_indices(clique_size, k=1)
    ii = np.r_[i, i + clique_size, clique_size - 1]
    jj = np.r_[j, j + clique_size, clique_size]
    w = np.r_[np.full(2 * len(i), weight), bridge_weight]
    return graph_from_edges(2 * clique_size, ii, jj, w)


def random_knn_edges(n, rng, dim=3, max_k=4):
    """Union kNN edges over random points, with components chained by their closest pair."""
    pts = rng.normal(size=(n, dim))
    k = int(rng.integers(1, min(max_k, n - 1) + 1))
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d2, np.inf)
    nbrs = np.argsort(d2, axis=1, kind="stable")[:, :k]
    edges = {(min(a, b), max(a, b)) for a in range(n) for b in nbrs[a]}
    # union-find to join components
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        parent[find(a)] = find(b)
    roots = sorted({find(a) for a in range(n)})
    for r1, r2 in zip(roots[:-1], roots[1:]):
        c1 = [a for a in range(n) if find(a) == find(r1)]
        c2 = [a for a in range(n) if find(a) == find(r2)]
        sub = d2[np.ix_(c1, c2)]
        a, b = np.unravel_index(np.argmin(sub), sub.shape)
        a, b = c1[a], c2[b]
        edges.add((min(a, b), max(a, b)))
        parent[find(a)] = find(b)
    return np.array(sorted(edges), dtype=np.int64)


def random_connected_graph(n, rng, dim=3, max_k=4):
    """Connected random kNN graph with i.i.d. weights uniform on (0, 1]."""
    e = random_knn_edges(n, rng, dim, max_k)
    w = 1.0 - rng.random(len(e))
    return graph_from_edges(n, e[:, 0], e[:, 1], w)


def random_graph_suite(n_graphs=100, seed=0, n_range=(5, 30)):
    """Seeded list of random connected graphs with sizes drawn from ``n_range``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    sizes = rng.integers(n_range[0], n_range[1] + 1, size=n_graphs)
    return [random_connected_graph(int(n), rng) for n in sizes]
