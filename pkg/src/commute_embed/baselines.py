"""Reference methods: GLM t-maps, PCA, ISOMAP and ROC analysis."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.special import stdtr

from .dataset import as_matrix
from .errors import DisconnectedGraphError, InputError, NumericError
from .graph import knn_neighbors


@dataclass(frozen=True, eq=False)
class GlmResult:
    beta: np.ndarray
    t_stat: np.ndarray
    p_value: np.ndarray
    dof: int

    def active(self, p_threshold):
        return self.p_value < p_threshold


def student_sf(t, dof):
    """Upper tail probability ``P(T > t)`` of Student's t with ``dof`` degrees of freedom."""
    return stdtr(dof, -np.asarray(t, dtype=np.float64))


def glm_tmap(X, regressor, two_sided=False):
    """Per-row OLS on ``[1, regressor]`` and a t-test on the slope.

    The default p-value is one-sided (activation means a positive slope).
    """
    X = as_matrix(X)
    x = np.asarray(regressor, dtype=np.float64).ravel()
    t = X.n_samples
    if x.size != t:
        raise InputError(f"regressor has {x.size} samples, data has {t}")
    if t <= 2:
        raise InputError("GLM needs T > 2")
    xc = x - x.mean()
    sxx = xc @ xc
    if sxx <= 1e-12 * max(1.0, x @ x):
        raise InputError("regressor is constant")
    y = X.values
    ym = y.mean(axis=1, keepdims=True)
    beta = (y - ym) @ xc / sxx
    resid = y - ym - np.outer(beta, xc)
    dof = t - 2
    s2 = np.einsum("ij,ij->i", resid, resid) / dof
    se = np.sqrt(s2 / sxx)
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.where(se > 0, beta / se, np.sign(beta) * np.inf)
    tstat = np.nan_to_num(tstat, nan=0.0)
    if two_sided:
        p = 2.0 * student_sf(np.abs(tstat), dof)
    else:
        p = student_sf(tstat, dof)
    return GlmResult(beta, tstat, np.clip(p, 0.0, 1.0), dof)


def dale_hrf(t, delta=2.5, tau=1.5):
    """``((t - delta)/tau)^2 exp(-(t - delta)/tau)`` for ``t >= delta``, else 0."""
    t = np.asarray(t, dtype=np.float64)
    if not (delta > 0 and tau > 0):
        raise InputError("delta and tau must be positive")
    s = (t - delta) / tau
    return np.where(t >= delta, s**2 * np.exp(-np.maximum(s, 0.0)), 0.0)


def dale_hrf_regressor(stimulus, delta=2.5, tau=1.5):
    n = len(stimulus)
    kernel = dale_hrf(np.arange(n) * stimulus.tr_seconds, delta, tau)
    return np.convolve(stimulus.samples, kernel)[:n]


def _fix_signs(vecs):
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def pca_embed(X, K):
    """Project the centred rows on the top-K principal axes.

    Points are rows, so the data are centred by subtracting the mean row
    (the mean time series) before the SVD.
    """
    X = as_matrix(X)
    K = int(K)
    if not 1 <= K <= min(X.values.shape):
        raise InputError(f"K must be in [1, {min(X.values.shape)}], got {K}")
    xc = X.values - X.values.mean(axis=0)
    _, _, vt = np.linalg.svd(xc, full_matrices=False)
    axes = _fix_signs(vt[:K].T)
    return xc @ axes


def knn_distance_graph(X, n_neighbors):
    """Union-symmetrised kNN graph whose edge lengths are Euclidean distances."""
    X = as_matrix(X)
    knn = knn_neighbors(X, n_neighbors)
    n = X.n_points
    rows = np.repeat(np.arange(n), knn.shape[1])
    cols = knn.ravel()
    lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
    diff = X.values[pairs[:, 0]] - X.values[pairs[:, 1]]
    length = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    upper = sp.coo_matrix((length, (pairs[:, 0], pairs[:, 1])), shape=(n, n)).tocsr()
    return (upper + upper.T).tocsr()


def geodesic_distances(graph):
    """All-pairs shortest path lengths, one Dijkstra run per source."""
    n_comp, labels = connected_components(graph, directed=False)
    if n_comp > 1:
        raise DisconnectedGraphError(np.bincount(labels).tolist())
    return dijkstra(graph, directed=False)


def classical_mds(dist, K):
    """Coordinates whose Euclidean distances best match ``dist`` (Torgerson scaling)."""
    dist = np.asarray(dist, dtype=np.float64)
    n = dist.shape[0]
    K = int(K)
    if not 1 <= K < n:
        raise InputError(f"K must be in [1, {n}), got {K}")
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (dist**2) @ J
    vals, vecs = np.linalg.eigh((B + B.T) / 2.0)
    vals, vecs = vals[::-1][:K], _fix_signs(vecs[:, ::-1][:, :K])
    return vecs * np.sqrt(np.maximum(vals, 0.0))


def isomap_embed(X, n_neighbors, K):
    return classical_mds(geodesic_distances(knn_distance_graph(X, n_neighbors)), K)


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def auc(self):
        return float(np.trapezoid(self.tpr, self.fpr))

    def tpr_at(self, fpr):
        """TPR of the best threshold whose false-positive rate does not exceed ``fpr``."""
        return float(_step_tpr(self.fpr, self.tpr, np.asarray(fpr, dtype=np.float64)))


def _step_tpr(fpr, tpr, grid):
    # highest operating point whose fpr does not exceed the grid value
    idx = np.searchsorted(fpr, grid, side="right") - 1
    return tpr[np.clip(idx, 0, len(fpr) - 1)]


def roc_curve(scores, truth):
    """ROC curve sweeping a threshold over the distinct scores (higher = more active).

    Point ``k`` classifies ``score >= thresholds[k]`` as active; the curve
    starts at ``(0, 0)`` (threshold ``+inf``) and ends at ``(1, 1)``.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    truth = np.asarray(truth).astype(bool).ravel()
    if scores.shape != truth.shape:
        raise InputError("scores and truth differ in length")
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("truth needs at least one positive and one negative")
    if not np.all(np.isfinite(scores)):
        raise NumericError("scores must be finite")
    order = np.argsort(-scores, kind="stable")
    s, t = scores[order], truth[order]
    distinct = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tp = np.cumsum(t)[distinct]
    fp = np.cumsum(~t)[distinct]
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thresholds = np.r_[np.inf, s[distinct]]
    return RocCurve(fpr, tpr, thresholds)


def average_roc(curves, grid=None):
    """Vertical averaging: mean TPR of several curves on a common FPR grid."""
    if not curves:
        raise InputError("no ROC curves to average")
    grid = np.linspace(0.0, 1.0, 1001) if grid is None else np.asarray(grid, dtype=np.float64)
    tpr = np.mean([_step_tpr(c.fpr, c.tpr, grid) for c in curves], axis=0)
    return RocCurve(grid, tpr, np.full(grid.shape, np.nan))


def save_roc_csv(curve, path):
    with open(path, "w") as fh:
        fh.write("fpr,tpr,threshold\n")
        for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds):
            fh.write(f"{float(f)!r},{float(t)!r},{float(th)!r}\n")


def save_tmap_csv(res, path):
    with open(path, "w") as fh:
        fh.write("index,beta,t,p\n")
        for i, (b, t, p) in enumerate(zip(res.beta, res.t_stat, res.p_value)):
            fh.write(f"{i},{float(b)!r},{float(t)!r},{float(p)!r}\n")
