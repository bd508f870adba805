"""Spectral decomposition of the normalized affinity and commute-time embedding.

Eigenpairs are indexed from 1: ``phi_1`` is the top eigenvector
(proportional to ``sqrt(pi)``, eigenvalue 1) and is never used as a
coordinate. Coordinate ``k`` of the embedding comes from ``phi_{k+1}``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .dataset import as_matrix
from .errors import ConvergenceError, InputError, NumericError

DENSE_CUTOFF = 64
MIN_SPECTRAL_DISTANCE = 1e-12
DEGENERACY_TOL = 1e-10
_V0_SEED = 7919


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Top eigenpairs of ``S = D^-1/2 W D^-1/2``.

    ``eigenvalues`` is sorted in descending order, ``eigenvectors[:, k]``
    is the unit eigenvector of ``eigenvalues[k]``, and ``stationary`` is
    the stationary distribution of the walk ``P = D^-1 W``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    stationary: np.ndarray
    degenerate: np.ndarray = field(default=None)

    @property
    def n_pairs(self):
        return len(self.eigenvalues)

    @property
    def n_nodes(self):
        return self.eigenvectors.shape[0]

    @property
    def spectral_gap(self):
        return float(self.eigenvalues[0] - self.eigenvalues[1])


@dataclass(frozen=True, eq=False)
class Embedding:
    coords: np.ndarray
    eigenvalue_gap: float

    @property
    def dim(self):
        return self.coords.shape[1]

    @property
    def n_points(self):
        return self.coords.shape[0]


@dataclass(frozen=True, eq=False)
class ResidualCurve:
    """``values[K - 1]`` is the mean relative residual over ``region`` with K terms."""

    region: np.ndarray
    values: np.ndarray

    @property
    def k_max(self):
        return len(self.values)


def normalized_affinity(G):
    d = 1.0 / np.sqrt(G.degrees)
    dm = sp.diags(d)
    return (dm @ G.weights @ dm).tocsr()


def _fix_signs(vecs):
    # largest |entry| positive; argmax takes the first on ties
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def decompose(G, n_pairs, dense_cutoff=DENSE_CUTOFF, maxiter=None, tol=0.0):
    """Compute the ``n_pairs`` largest eigenpairs of the normalized affinity.

    Graphs with at most ``dense_cutoff`` nodes (or requests for nearly the
    whole spectrum) are solved densely; otherwise ARPACK's implicitly
    restarted Lanczos iteration runs on the sparse matrix.
    """
    n = G.n_nodes
    n_pairs = int(n_pairs)
    if not 2 <= n_pairs <= n:
        raise InputError(f"n_pairs must be in [2, N={n}], got {n_pairs}")
    S = normalized_affinity(G)
    if n <= dense_cutoff or n_pairs >= n - 1:
        vals, vecs = np.linalg.eigh(S.toarray())
        vals, vecs = vals[::-1][:n_pairs], vecs[:, ::-1][:, :n_pairs]
    else:
        v0 = np.random.default_rng(_V0_SEED).uniform(0.5, 1.5, size=n)
        try:
            vals, vecs = eigsh(S, k=n_pairs, which="LA", v0=v0, maxiter=maxiter, tol=tol)
        except ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"eigensolver did not converge: {len(exc.eigenvalues)} of {n_pairs} "
                "eigenpairs found (raise maxiter or reduce n_pairs)"
            ) from None
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], vecs[:, order]
    vals = np.clip(vals, -1.0, 1.0)
    vecs = _fix_signs(vecs)
    if 1.0 - vals[1] < MIN_SPECTRAL_DISTANCE:
        raise NumericError(
            f"second eigenvalue {vals[1]!r} is numerically 1: the graph is "
            "effectively disconnected"
        )
    gaps = np.abs(np.diff(vals)) < DEGENERACY_TOL
    degenerate = np.zeros(len(vals), dtype=bool)
    degenerate[:-1] |= gaps
    degenerate[1:] |= gaps
    pi = G.degrees / G.degrees.sum()
    return SpectralDecomposition(vals, vecs, pi, degenerate)


def _scaled_vectors(dec, stop):
    """``phi_k(i) / sqrt(pi_i (1 - lambda_k))`` for k = 2..stop (1-based)."""
    lam = dec.eigenvalues[1:stop]
    denom = 1.0 - lam
    if np.any(denom < MIN_SPECTRAL_DISTANCE):
        raise NumericError(
            "an eigenvalue beyond the first is numerically 1; commute "
            "coordinates are undefined"
        )
    return dec.eigenvectors[:, 1:stop] / np.sqrt(dec.stationary)[:, None] / np.sqrt(denom)


def embed(dec, K):
    """Commute-time coordinates of every point using ``phi_2 .. phi_{K+1}``."""
    K = int(K)
    if K < 1:
        raise InputError(f"embedding dimension must be >= 1, got {K}")
    if dec.n_pairs < K + 1:
        raise InputError(f"embedding with K={K} needs {K + 1} eigenpairs, have {dec.n_pairs}")
    return Embedding(_scaled_vectors(dec, K + 1), dec.spectral_gap)


def commute_matrix(dec, n_terms=None):
    """All-pairs truncated commute times using eigenpairs 2..n_terms."""
    n_terms = dec.n_pairs if n_terms is None else int(n_terms)
    if not 1 <= n_terms <= dec.n_pairs:
        raise InputError(f"n_terms must be in [1, {dec.n_pairs}], got {n_terms}")
    psi = _scaled_vectors(dec, n_terms)
    sq = np.einsum("ij,ij->i", psi, psi)
    kappa = sq[:, None] + sq[None, :] - 2.0 * psi @ psi.T
    np.fill_diagonal(kappa, 0.0)
    return np.maximum(kappa, 0.0)


def commute_distance(dec, i, j, n_terms=None):
    """Truncated spectral commute time between points ``i`` and ``j``."""
    n_terms = dec.n_pairs if n_terms is None else int(n_terms)
    if not 1 <= n_terms <= dec.n_pairs:
        raise InputError(f"n_terms must be in [1, {dec.n_pairs}], got {n_terms}")
    n = dec.n_nodes
    if not (0 <= i < n and 0 <= j < n):
        raise InputError(f"point ids must be in [0, {n}), got {i}, {j}")
    lam = dec.eigenvalues[1:n_terms]
    if np.any(1.0 - lam < MIN_SPECTRAL_DISTANCE):
        raise NumericError("an eigenvalue beyond the first is numerically 1")
    phi = dec.eigenvectors[:, 1:n_terms]
    pi = dec.stationary
    diff = phi[i] / np.sqrt(pi[i]) - phi[j] / np.sqrt(pi[j])
    return float(np.sum(diff**2 / (1.0 - lam)))


def residual_curve(X, dec, region, K_max):
    """Mean relative reconstruction error over ``region`` for K = 1..K_max.

    Each scan (a column of ``X``, i.e. a function on the graph nodes) is
    expanded on the first K eigenvectors. For every voxel the squared error
    summed over time is divided by the voxel's energy, then averaged over
    the region.
    """
    X = as_matrix(X)
    if X.n_points != dec.n_nodes:
        raise InputError(f"dataset has {X.n_points} points, decomposition {dec.n_nodes}")
    region = np.unique(np.asarray(region, dtype=np.int64))
    if region.size == 0:
        raise InputError("region is empty")
    K_max = int(K_max)
    if not 1 <= K_max <= dec.n_pairs:
        raise InputError(f"K_max must be in [1, {dec.n_pairs}], got {K_max}")
    x = X.values
    energy = np.einsum("ij,ij->i", x[region], x[region])
    if np.any(energy == 0):
        raise InputError(f"point {region[np.argmax(energy == 0)]} has an all-zero time series")
    phi = dec.eigenvectors[:, :K_max]
    coef = phi.T @ x
    resid = x[region].copy()
    values = np.empty(K_max)
    for k in range(K_max):
        resid -= np.outer(phi[region, k], coef[k])
        values[k] = np.mean(np.einsum("ij,ij->i", resid, resid) / energy)
    return ResidualCurve(region, values)


def select_dimension(curves, theta=0.1, noise=1e-12):
    """Pick the embedding dimension at the knee of the residual curves.

    For each curve the knee is the first K, after the largest one-step
    drop, whose drop ``eps(K) - eps(K+1)`` falls below ``theta`` times
    that largest drop. The returned dimension is the largest knee.
    """
    if not curves:
        raise InputError("no residual curves given")
    knees = []
    for curve in curves:
        v = np.asarray(curve.values if hasattr(curve, "values") else curve, dtype=np.float64)
        if len(v) < 3:
            raise InputError(f"residual curve needs >= 3 values, got {len(v)}")
        drops = v[:-1] - v[1:]
        biggest = int(np.argmax(drops))
        if drops[biggest] <= noise:
            raise NumericError("residual curve is flat; choose K manually")
        cut = theta * drops[biggest]
        below = np.nonzero(drops[biggest + 1:] < cut)[0]
        if below.size == 0:
            raise NumericError("residual curve has no knee; choose K manually")
        knees.append(biggest + 2 + int(below[0]))
    return max(knees)


def _write_table(path, header, columns):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i, row in enumerate(columns):
            fh.write(str(i) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def save_embedding_csv(emb, path):
    header = ["index"] + [f"c{k}" for k in range(1, emb.dim + 1)]
    _write_table(path, header, emb.coords)


def load_embedding_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Embedding(data[:, 1:], float("nan"))


def save_eigenvectors_csv(dec, path):
    header = ["index"] + [f"phi{k}" for k in range(2, dec.n_pairs + 1)]
    _write_table(path, header, dec.eigenvectors[:, 1:])


def save_eigenvalues_csv(dec, path):
    with open(path, "w") as fh:
        fh.write("k,lambda,degenerate\n")
        for k, (lam, flag) in enumerate(zip(dec.eigenvalues, dec.degenerate), start=1):
            fh.write(f"{k},{float(lam)!r},{int(flag)}\n")
