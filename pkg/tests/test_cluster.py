import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from commute_embed.cluster import (
    BACKGROUND,
    ClusterConfig,
    EmptyForegroundError,
    angular_kmeans,
    cluster_embedding,
    load_labels_csv,
    save_labels_csv,
    split_background,
)
from commute_embed.errors import InputError
from commute_embed.metrics import cluster_recovery, silhouette_score

seeds = st.integers(0, 2**32 - 1)


def star(rng, dirs, n_arm=60, n_blob=150, blob_sd=0.3):
    """Arms along ``dirs`` at radius 2..6 plus a Gaussian blob at the origin."""
    dirs = np.asarray(dirs, dtype=float)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts, truth = [rng.normal(scale=blob_sd, size=(n_blob, dirs.shape[1]))], [np.zeros(n_blob, int)]
    for a, d in enumerate(dirs, start=1):
        r = rng.uniform(2, 6, size=n_arm)
        pts.append(r[:, None] * d + rng.normal(scale=0.15, size=(n_arm, dirs.shape[1])))
        truth.append(np.full(n_arm, a))
    return np.vstack(pts), np.concatenate(truth)


ARMS3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]


def test_split_by_hand():
    bg, fg, thr = split_background(np.array([[1.0, 0], [0, 1], [-1, 0], [10, 0]]))
    assert bg.tolist() == [0, 1, 2] and fg.tolist() == [3]
    assert thr == 1.0


def test_split_all_at_origin_warns():
    with pytest.warns(RuntimeWarning):
        bg, fg, _ = split_background(np.zeros((5, 2)))
    assert len(bg) == 5 and len(fg) == 0


def test_star_blob_goes_to_background(rng):
    x, truth = star(rng, ARMS3)
    bg, _, _ = split_background(x, radius_quantile=0.45)
    blob = np.nonzero(truth == 0)[0]
    assert np.isin(blob, bg).mean() >= 0.95


def test_antipodal_groups(rng):
    x = np.vstack([rng.normal([5, 0], 0.3, (20, 2)), rng.normal([-5, 0], 0.3, (20, 2))])
    res = angular_kmeans(x, 2, seed=3)
    assert len(set(res.labels[:20])) == 1 and len(set(res.labels[20:])) == 1
    assert res.labels[0] != res.labels[20]


def test_single_cluster_centroid_is_mean_direction(rng):
    x = rng.normal([2, 1, 0.5], 0.2, size=(30, 3))
    res = angular_kmeans(x, 1)
    u = x / np.linalg.norm(x, axis=1, keepdims=True)
    m = u.sum(0)
    np.testing.assert_allclose(res.centroids[0], m / np.linalg.norm(m), atol=1e-12)


def test_three_arms_recovered_for_twenty_seeds(rng):
    dirs = [[1, 0, 0], [0.5, np.sqrt(3) / 2, 0], [0, 0, 1]]
    x, truth = star(rng, dirs, n_blob=0)
    for seed in range(20):
        labels = angular_kmeans(x, 3, seed=seed).labels
        for a in (1, 2, 3):
            assert len(set(labels[truth == a])) == 1
        assert len(set(labels)) == 3


@given(seeds)
def test_objective_non_increasing(seed):
    x = np.random.default_rng(seed).normal(size=(60, 3))
    hist = angular_kmeans(x, 4, seed=seed).history
    assert np.all(np.diff(hist) <= 1e-9)


@given(seeds, st.floats(1e-3, 1e3))
def test_scale_invariance(seed, scale):
    x = np.random.default_rng(seed).normal(size=(40, 3))
    a = cluster_embedding(x, ClusterConfig(n_clusters=3, seed=1))
    b = cluster_embedding(x * scale, ClusterConfig(n_clusters=3, seed=1))
    np.testing.assert_array_equal(a.labels, b.labels)


def test_determinism(rng):
    x, _ = star(rng, ARMS3)
    a = cluster_embedding(x, ClusterConfig(seed=5))
    b = cluster_embedding(x, ClusterConfig(seed=5))
    np.testing.assert_array_equal(a.labels, b.labels)


@given(seeds)
def test_permutation_equivariance(seed):
    g = np.random.default_rng(seed)
    x, _ = star(np.random.default_rng(0), ARMS3, n_arm=30, n_blob=60)
    perm = g.permutation(len(x))
    a = cluster_embedding(x, ClusterConfig(seed=2))
    b = cluster_embedding(x[perm], ClusterConfig(seed=2))
    np.testing.assert_array_equal(b.labels, a.labels[perm])


def test_two_arm_star(rng):
    x, truth = star(rng, [[1, 0], [-0.2, 1]])
    # the blob is 150 of 270 points, so the split sits above the median
    res = cluster_embedding(x, ClusterConfig(radius_quantile=0.56))
    assert res.n_clusters == 3
    for a in (1, 2):
        _, recall, precision = cluster_recovery(res.labels, truth == a)
        assert recall >= 0.95 and precision >= 0.95


def test_default_cluster_count_is_k_plus_one(rng):
    x, _ = star(rng, ARMS3 + [[1, 1, 1]])
    # K = 3 dimensions: K + 1 = 4 labels in total, background plus three
    assert cluster_embedding(x, ClusterConfig(min_cluster_fraction=0)).n_clusters == 4


def test_small_clusters_merge(rng):
    x, truth = star(rng, [[1, 0], [0, 1]])
    tiny = np.array([[4.0, 4.2], [4.1, 4.0]])
    x = np.vstack([x, tiny])
    res = cluster_embedding(x, ClusterConfig(n_clusters=4, min_cluster_fraction=0.05))
    assert res.n_clusters == 3


def test_empty_foreground_raises():
    with pytest.warns(RuntimeWarning), pytest.raises(EmptyForegroundError):
        cluster_embedding(np.ones((6, 2)))


def test_config_validation():
    with pytest.raises(InputError):
        ClusterConfig(n_clusters=1)
    with pytest.raises(InputError):
        ClusterConfig(radius_quantile=1.0)


def test_k_exceeding_directions():
    with pytest.raises(InputError):
        angular_kmeans(np.array([[1.0, 0], [2.0, 0], [3.0, 0]]), 2)


def test_labels_round_trip(tmp_path, rng):
    x, _ = star(rng, ARMS3)
    res = cluster_embedding(x)
    save_labels_csv(res, tmp_path / "l.csv")
    np.testing.assert_array_equal(load_labels_csv(tmp_path / "l.csv"), res.labels)
    assert BACKGROUND in res.labels


def test_silhouette_matches_sklearn(rng):
    sklearn = pytest.importorskip("sklearn.metrics")
    x = rng.normal(size=(80, 3))
    labels = rng.integers(0, 4, size=80)
    labels[:2] = [5, 6]  # two singletons
    assert silhouette_score(x, labels) == pytest.approx(sklearn.silhouette_score(x, labels), abs=1e-12)


def test_silhouette_separated_by_hand():
    x = np.array([[0.0], [1.0], [10.0], [11.0]])
    # a = 1, b = 10 (points 0 and 3) or 9.0/... compute per point
    s = [(10.5 - 1) / 10.5, (9.5 - 1) / 9.5, (9.5 - 1) / 9.5, (10.5 - 1) / 10.5]
    assert silhouette_score(x, [0, 0, 1, 1]) == pytest.approx(np.mean(s), rel=1e-14)


def test_recovery_by_hand():
    labels = np.array([0, 1, 1, 2, 2, 2])
    truth = np.array([0, 1, 1, 1, 0, 0])
    assert cluster_recovery(labels, truth) == (1, 2 / 3, 1.0)
    with pytest.raises(InputError):
        cluster_recovery(labels, np.zeros(6))
