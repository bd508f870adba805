"""Scores used to compare embeddings and cluster maps against ground truth."""

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InputError


def silhouette_score(x, labels):
    """Mean silhouette width of a labelling under Euclidean distance."""
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if len(classes) < 2 or len(classes) >= len(labels):
        raise InputError("silhouette needs 2 <= n_labels < n_points")
    d = cdist(x, x)
    member = labels[:, None] == classes[None, :]
    sums = d @ member
    counts = member.sum(axis=0)
    own = np.argmax(member, axis=1)
    n_own = counts[own] - 1
    a = np.where(n_own > 0, sums[np.arange(len(x)), own] / np.maximum(n_own, 1), 0.0)
    mean_other = sums / counts
    mean_other[np.arange(len(x)), own] = np.inf
    b = mean_other.min(axis=1)
    s = np.where(n_own > 0, (b - a) / np.maximum(np.maximum(a, b), 1e-300), 0.0)
    return float(s.mean())


def cluster_recovery(labels, truth, background=0):
    """Recall and precision of the foreground cluster that overlaps the truth most.

    Returns ``(label, recall, precision)``; ``label`` is ``None`` when no
    foreground cluster contains a true positive.
    """
    labels = np.asarray(labels)
    truth = np.asarray(truth).astype(bool)
    n_true = truth.sum()
    if n_true == 0:
        raise InputError("truth has no positives")
    best = (None, 0.0, 0.0)
    best_tp = 0
    for c in np.unique(labels):
        if c == background:
            continue
        members = labels == c
        tp = int((members & truth).sum())
        if tp > best_tp:
            best_tp = tp
            best = (int(c), tp / n_true, tp / members.sum())
    return best
