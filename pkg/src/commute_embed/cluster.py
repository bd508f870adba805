"""Background/arm clustering of an embedding.

Points close to the origin form the background. The remaining points are
projected on the unit sphere and clustered by angle, then clusters that
are too small are merged into their angular nearest neighbour.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError, NumericError

BACKGROUND = 0
_ZERO_RADIUS = 1e-12


class EmptyForegroundError(NumericError):
    pass


@dataclass(frozen=True)
class ClusterConfig:
    n_clusters: int | None = None  # None means K + 1
    radius_quantile: float = 0.5
    min_cluster_fraction: float = 0.01
    max_merge_iters: int = 10
    max_iters: int = 300
    n_init: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_clusters is not None and self.n_clusters < 2:
            raise InputError(f"n_clusters must be >= 2, got {self.n_clusters}")
        if not 0 < self.radius_quantile < 1:
            raise InputError(f"radius_quantile must be in (0, 1), got {self.radius_quantile}")
        if not 0 <= self.min_cluster_fraction < 1:
            raise InputError("min_cluster_fraction must be in [0, 1)")
        if self.max_merge_iters < 0 or self.max_iters < 1 or self.n_init < 1:
            raise InputError("iteration counts must be positive")


@dataclass(frozen=True, eq=False)
class ClusterLabels:
    """``labels[i]`` is 0 for background, 1..k for the foreground clusters."""

    labels: np.ndarray
    centroids: np.ndarray
    radius_threshold: float
    background_label: int = BACKGROUND

    @property
    def n_clusters(self):
        return len(self.centroids) + 1

    @property
    def sizes(self):
        return np.bincount(self.labels, minlength=self.n_clusters)


@dataclass(frozen=True, eq=False)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    objective: float
    history: np.ndarray
    n_iter: int


def _coords(emb):
    return np.asarray(emb.coords if hasattr(emb, "coords") else emb, dtype=np.float64)


def split_background(emb, radius_quantile=0.5):
    """Split points by distance to the origin.

    Returns ``(background_ids, foreground_ids, threshold)``; points whose
    radius is at most the ``radius_quantile`` quantile are background.
    """
    x = _coords(emb)
    if len(x) < 2:
        raise InputError("need at least two points")
    r = np.linalg.norm(x, axis=1)
    rmax = r.max()
    if rmax == 0 or np.ptp(r) <= _ZERO_RADIUS * rmax:
        warnings.warn("all radii are identical; every point is background", RuntimeWarning)
        return np.arange(len(r)), np.array([], dtype=np.int64), float(rmax)
    threshold = float(np.quantile(r, radius_quantile))
    bg = (r <= threshold) | (r <= _ZERO_RADIUS * rmax)
    return np.nonzero(bg)[0], np.nonzero(~bg)[0], threshold


def _unit(x):
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise InputError("cannot project the zero vector on the sphere")
    return x / norms


def _angles(u, centroids, labels):
    cos = np.einsum("ij,ij->i", u, centroids[labels])
    return np.arccos(np.clip(cos, -1.0, 1.0))


def _seed_centroids(u, k, rng):
    # k-means++ with squared chordal distance 2 - 2 cos
    n = len(u)
    chosen = [int(rng.integers(n))]
    best = 2.0 - 2.0 * u @ u[chosen[0]]
    for _ in range(1, k):
        w = np.maximum(best, 0.0)
        total = w.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(w), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        chosen.append(idx)
        best = np.minimum(best, 2.0 - 2.0 * u @ u[idx])
    return u[chosen].copy()


def _lloyd(u, centroids, max_iters):
    k = len(centroids)
    labels = np.argmax(u @ centroids.T, axis=1)
    history = [float(_angles(u, centroids, labels).sum())]
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        new = centroids.copy()
        for c in range(k):
            members = u[labels == c]
            if len(members) == 0:
                continue
            s = members.sum(axis=0)
            norm = np.linalg.norm(s)
            if norm == 0:
                continue
            cand = s / norm
            # keep the old centroid if the normalised mean would not lower the angle sum
            old = np.arccos(np.clip(members @ centroids[c], -1, 1)).sum()
            if np.arccos(np.clip(members @ cand, -1, 1)).sum() <= old:
                new[c] = cand
        centroids = new
        new_labels = np.argmax(u @ centroids.T, axis=1)
        history.append(float(_angles(u, centroids, new_labels).sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centroids, np.array(history), n_iter


def _canonical(labels, centroids):
    """Relabel clusters by decreasing size, ties broken by centroid coordinates."""
    k = len(centroids)
    sizes = np.bincount(labels, minlength=k)
    order = sorted(range(k), key=lambda c: (-sizes[c], tuple(-centroids[c])))
    remap = np.empty(k, dtype=np.int64)
    remap[order] = np.arange(k)
    return remap[labels], centroids[order]


def n_directions(points, decimals=12):
    return len(np.unique(np.round(_unit(np.asarray(points, dtype=np.float64)), decimals), axis=0))


def angular_kmeans(points, k, seed=0, max_iters=300, n_init=1):
    """Spherical k-means: assign by largest cosine, centroids are unit vectors.

    Seeding is k-means++ on the sphere driven by PCG64 seeded from
    ``(seed, restart)``. With ``n_init > 1`` the run with the smallest sum
    of point-to-centroid angles is kept.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2 or len(x) == 0:
        raise InputError("points must be a non-empty 2-D array")
    k = int(k)
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    u = _unit(x)
    if k > n_directions(u):
        raise InputError(f"k={k} exceeds the number of distinct directions ({n_directions(u)})")
    # seed on a canonical (lexicographic) ordering so that permuting the
    # input permutes the labels and nothing else
    order = np.lexsort(u.T[::-1])
    inverse = np.empty_like(order)
    inverse[order] = np.arange(len(order))
    u = u[order]
    best = None
    for restart in range(int(n_init)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), restart])))
        labels, cents, hist, it = _lloyd(u, _seed_centroids(u, k, rng), max_iters)
        if best is None or hist[-1] < best.objective:
            labels, cents = _canonical(labels, cents)
            best = KMeansResult(labels, cents, float(hist[-1]), hist, it)
    return replace(best, labels=best.labels[inverse])


def cluster_embedding(emb, cfg=ClusterConfig()):
    """Label every point as background (0) or one of the foreground clusters (1..k)."""
    x = _coords(emb)
    n = len(x)
    n_clusters = cfg.n_clusters if cfg.n_clusters is not None else x.shape[1] + 1
    bg, fg, threshold = split_background(x, cfg.radius_quantile)
    if fg.size == 0:
        raise EmptyForegroundError("no foreground points after the background split")
    u = _unit(x[fg])
    k = min(n_clusters - 1, n_directions(u))
    res = angular_kmeans(u, k, cfg.seed, cfg.max_iters, cfg.n_init)
    labels, cents = res.labels, res.centroids
    min_size = cfg.min_cluster_fraction * n
    for _ in range(cfg.max_merge_iters):
        sizes = np.bincount(labels, minlength=len(cents))
        small = np.nonzero(sizes < min_size)[0]
        if len(cents) == 1 or small.size == 0:
            break
        c = int(small[np.argmin(sizes[small])])
        sim = cents @ cents[c]
        sim[c] = -np.inf
        target = int(np.argmax(sim))
        labels = np.where(labels == c, target, labels)
        keep = np.delete(np.arange(len(cents)), c)
        remap = np.full(len(cents), -1)
        remap[keep] = np.arange(len(keep))
        labels = remap[labels]
        merged = u[labels == remap[target]].sum(axis=0)
        cents = cents[keep]
        cents[remap[target]] = merged / np.linalg.norm(merged)
        labels, cents, _, _ = _lloyd(u, cents, cfg.max_iters)
        labels, cents = _canonical(labels, cents)
    out = np.zeros(n, dtype=np.int64)
    out[fg] = labels + 1
    return ClusterLabels(out, cents, threshold)


def save_labels_csv(labels, path):
    with open(path, "w") as fh:
        fh.write("index,label\n")
        for i, lab in enumerate(labels.labels if hasattr(labels, "labels") else labels):
            fh.write(f"{i},{int(lab)}\n")


def load_labels_csv(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)[:, 1]
