"""End-to-end workflows behind the CLI subcommands.

Each ``cmd_*`` function takes a resolved config, writes its artifacts into
the output directory and returns the list of files written. Output is a
pure function of config and inputs: rerunning gives byte-identical files.
"""

import logging
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import baselines, dataset, graph, graphgen, maps, metrics, spectral, walk
from .cluster import ClusterLabels, EmptyForegroundError, cluster_embedding, save_labels_csv
from .config import pipeline_config_text, synth_config_text
from .errors import EmbedError, InputError
from .phantom import (
    HrfParams,
    block_stimulus,
    convolve_stimulus,
    generate_phantom,
    load_stimulus,
    save_stimulus,
)

log = logging.getLogger(__name__)

SUMMARY_FPRS = (0.003, 0.005, 0.009)


def _outdir(cfg):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_effective(cfg, out):
    path = out / "effective_config.ini"
    path.write_text(pipeline_config_text(cfg))
    return path


def load_input(cfg):
    """Load and precondition the dataset named in ``cfg.input``."""
    if not cfg.input.path:
        raise InputError("[input] path is required")
    if not Path(cfg.input.path).is_file():
        raise InputError(f"input file {cfg.input.path} does not exist")
    X = dataset.load_dataset(cfg.input.path, cfg.input.format)
    pre = cfg.preprocess
    if pre.trial_onsets is not None:
        onsets = pre.trial_onsets if isinstance(pre.trial_onsets, tuple) else (pre.trial_onsets,)
        if pre.trial_len is None:
            raise InputError("[preprocess] trial_len is required with trial_onsets")
        X = dataset.average_trials(X, onsets, pre.trial_len)
    if pre.detrend:
        X = dataset.detrend_linear(X)
    if pre.svd_modes is not None:
        X = dataset.svd_denoise(X, pre.svd_modes)
    return X


def _load_mask(cfg):
    return dataset.load_mask(cfg.input.mask) if cfg.input.mask else None


def _load_truth(path):
    table = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    return table[:, 1]


def _auto_dimension(X, dec, cfg, k_max):
    """Knee of the whole-dataset residual curve and of each provisional cluster's curve."""
    everyone = np.arange(X.n_points)
    whole = spectral.residual_curve(X, dec, everyone, k_max)
    curves = [whole]
    try:
        k0 = spectral.select_dimension([whole], cfg.embedding.theta)
    except EmbedError:
        k0 = 2
    k0 = min(max(k0, 1), dec.n_pairs - 1)
    try:
        labels = cluster_embedding(spectral.embed(dec, k0), cfg.cluster).labels
        for c in np.unique(labels):
            region = np.nonzero(labels == c)[0]
            if len(region) >= 2:
                curves.append(spectral.residual_curve(X, dec, region, k_max))
    except EmptyForegroundError:
        pass
    knees = []
    for curve in curves:
        try:
            knees.append(spectral.select_dimension([curve], cfg.embedding.theta))
        except EmbedError:
            continue
    if not knees:
        raise InputError("could not find a knee in any residual curve; set [embedding] K")
    return min(max(knees), dec.n_pairs - 1), curves


def run_embedding(X, cfg):
    """Graph, decomposition and embedding. Returns ``(G, dec, emb, K, curves)``."""
    G = graph.build_graph(X, cfg.graph)
    curves = []
    if cfg.embedding.K == "auto":
        k_max = min(cfg.embedding.k_max, X.n_points)
        dec = spectral.decompose(G, k_max)
        K, curves = _auto_dimension(X, dec, cfg, k_max)
    else:
        K = cfg.embedding.K
        if K + 1 > X.n_points:
            raise InputError(f"K={K} needs at least {K + 1} points")
        dec = spectral.decompose(G, K + 1)
    emb = spectral.embed(dec, K)
    return G, dec, emb, K, curves


def _write_report(path, items):
    with open(path, "w") as fh:
        for key, value in items:
            fh.write(f"{key} = {value!r}\n" if isinstance(value, float) else f"{key} = {value}\n")


def cmd_embed(cfg):
    out = _outdir(cfg)
    X = load_input(cfg)
    G, dec, emb, K, curves = run_embedding(X, cfg)
    files = [_write_effective(cfg, out)]
    spectral.save_embedding_csv(emb, out / "embedding.csv")
    spectral.save_eigenvectors_csv(dec, out / "eigenvectors.csv")
    spectral.save_eigenvalues_csv(dec, out / "eigenvalues.csv")
    files += [out / "embedding.csv", out / "eigenvectors.csv", out / "eigenvalues.csv"]
    _, mean_cc = graph.clustering_coefficients(G)
    _write_report(
        out / "spectral_gap.txt",
        [
            ("n_points", X.n_points),
            ("n_samples", X.n_samples),
            ("n_edges", int(G.weights.nnz // 2)),
            ("sigma", float(G.sigma)),
            ("mean_clustering_coefficient", mean_cc),
            ("lambda_1", float(dec.eigenvalues[0])),
            ("lambda_2", float(dec.eigenvalues[1])),
            ("spectral_gap", float(dec.spectral_gap)),
            ("K", K),
            ("degenerate_eigenvalues", int(dec.degenerate.sum())),
        ],
    )
    files.append(out / "spectral_gap.txt")
    if curves:
        with open(out / "residual_curves.csv", "w") as fh:
            fh.write("region,K,epsilon\n")
            for r, curve in enumerate(curves):
                for k, v in enumerate(curve.values, start=1):
                    fh.write(f"{r},{k},{float(v)!r}\n")
        files.append(out / "residual_curves.csv")
    return files


def _cluster_timeseries(X, labels, path):
    with open(path, "w") as fh:
        fh.write("label,t,mean,sd,count\n")
        for c in np.unique(labels):
            rows = X.values[labels == c]
            mean = rows.mean(axis=0)
            sd = rows.std(axis=0, ddof=1) if len(rows) > 1 else np.zeros_like(mean)
            for t in range(X.n_samples):
                fh.write(f"{int(c)},{t},{float(mean[t])!r},{float(sd[t])!r},{len(rows)}\n")


def run_clustering(emb, cfg, K):
    ccfg = cfg.cluster
    if ccfg.n_clusters is None:
        ccfg = replace(ccfg, n_clusters=K + 1)
    try:
        return cluster_embedding(emb, ccfg)
    except EmptyForegroundError:
        warnings.warn("empty foreground after the background split; all points are background")
        return ClusterLabels(np.zeros(emb.n_points, dtype=np.int64), np.zeros((0, K)), float("nan"))


def cmd_cluster(cfg):
    out = _outdir(cfg)
    X = load_input(cfg)
    _, _, emb, K, _ = run_embedding(X, cfg)
    labels = run_clustering(emb, cfg, K)
    files = [_write_effective(cfg, out)]
    spectral.save_embedding_csv(emb, out / "embedding.csv")
    save_labels_csv(labels, out / "labels.csv")
    _cluster_timeseries(X, labels.labels, out / "cluster_timeseries.csv")
    files += [out / "embedding.csv", out / "labels.csv", out / "cluster_timeseries.csv"]
    report = [("K", K), ("radius_threshold", float(labels.radius_threshold))]
    report += [(f"size_{c}", int(s)) for c, s in enumerate(labels.sizes)]
    if cfg.input.truth:
        truth = _load_truth(cfg.input.truth)
        if len(truth) != X.n_points:
            raise InputError(f"truth has {len(truth)} rows, dataset {X.n_points}")
        label, recall, precision = metrics.cluster_recovery(labels.labels, truth)
        report += [("activated_label", label), ("recall", float(recall)), ("precision", float(precision))]
    _write_report(out / "cluster_report.txt", report)
    files.append(out / "cluster_report.txt")
    mask = _load_mask(cfg)
    if mask is not None:
        files += maps.write_label_maps(labels.labels, mask, out, "clusters", labels.n_clusters)
    return files


def make_stimulus(stim_cfg):
    if stim_cfg.file:
        return load_stimulus(stim_cfg.file, stim_cfg.tr)
    return block_stimulus(stim_cfg.on_seconds, stim_cfg.off_seconds, stim_cfg.tr, stim_cfg.n_cycles)


def cmd_synth(scfg):
    """Write ``n_realizations`` phantoms with seeds ``seed + r``."""
    out = Path(scfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stim = make_stimulus(scfg.stimulus)
    (out / "effective_config.ini").write_text(synth_config_text(scfg))
    save_stimulus(stim, out / "stimulus.csv")
    files = [out / "effective_config.ini", out / "stimulus.csv"]
    counts = []
    for r in range(scfg.n_realizations):
        ph = generate_phantom(scfg.phantom.with_seed(scfg.phantom.seed + r), stim)
        dataset.save_dataset(ph.data, out / f"dataset_{r:03d}.fts")
        with open(out / f"truth_{r:03d}.csv", "w") as fh:
            fh.write("index,activated\n")
            for i, a in enumerate(ph.truth):
                fh.write(f"{i},{int(a)}\n")
        files += [out / f"dataset_{r:03d}.fts", out / f"truth_{r:03d}.csv"]
        counts.append((r, scfg.phantom.seed + r, ph.data.n_points, ph.n_activated))
        if r == 0:
            dataset.save_mask(ph.mask, out / "mask.csv")
            files.append(out / "mask.csv")
    with open(out / "counts.csv", "w") as fh:
        fh.write("realization,seed,n_voxels,n_activated\n")
        for row in counts:
            fh.write(",".join(str(v) for v in row) + "\n")
    files.append(out / "counts.csv")
    return files


def glm_regressor(cfg, stimulus):
    g = cfg.glm
    if g.hrf == "dale":
        return baselines.dale_hrf_regressor(stimulus, g.delta, g.tau)
    return convolve_stimulus(stimulus, HrfParams(alpha=g.alpha, b1=g.b1))


def _stimulus_for(cfg, n_samples):
    if not cfg.input.stimulus:
        raise InputError("[input] stimulus is required for the GLM")
    if cfg.input.tr is None:
        raise InputError("[input] tr is required for the GLM")
    stim = load_stimulus(cfg.input.stimulus, cfg.input.tr)
    if len(stim) != n_samples:
        raise InputError(f"stimulus has {len(stim)} samples, data has {n_samples}")
    return stim


def realization_pairs(directory):
    """Matching ``dataset_XXX.fts`` / ``truth_XXX.csv`` files of a synth directory."""
    directory = Path(directory)
    data = sorted(directory.glob("dataset_*.fts"))
    truth = sorted(directory.glob("truth_*.csv"))
    if not data:
        raise InputError(f"no dataset_*.fts files in {directory}")
    if len(data) != len(truth) or any(
        d.stem.split("_")[1] != t.stem.split("_")[1] for d, t in zip(data, truth)
    ):
        raise InputError(
            f"mismatched realizations in {directory}: {len(data)} datasets, {len(truth)} truth files"
        )
    return list(zip(data, truth))


def evaluate_realization(X, truth, cfg, stimulus):
    """ROC curves of the embedding radius and of the GLM t-statistic, plus the cluster operating point."""
    _, _, emb, K, _ = run_embedding(X, cfg)
    radius = np.linalg.norm(emb.coords, axis=1)
    roc_emb = baselines.roc_curve(radius, truth)
    glm = baselines.glm_tmap(X, glm_regressor(cfg, stimulus), cfg.glm.two_sided)
    roc_glm = baselines.roc_curve(glm.t_stat, truth)
    labels = run_clustering(emb, cfg, K)
    label, _, _ = metrics.cluster_recovery(labels.labels, truth)
    called = labels.labels == label if label is not None else np.zeros(len(truth), bool)
    t = truth.astype(bool)
    point = (float((called & ~t).sum() / (~t).sum()), float((called & t).sum() / t.sum()))
    return roc_emb, roc_glm, point, emb


def cmd_roc(cfg):
    """Vertically averaged ROC curves of the embedding and the GLM over a synth directory."""
    out = _outdir(cfg)
    if not cfg.input.path:
        raise InputError("[input] path must name a synth output directory")
    pairs = realization_pairs(cfg.input.path)
    stim_path = cfg.input.stimulus or str(Path(cfg.input.path) / "stimulus.csv")
    tr = cfg.input.tr if cfg.input.tr is not None else 3.0
    stimulus = load_stimulus(stim_path, tr)
    emb_curves, glm_curves, points = [], [], []
    for data_path, truth_path in pairs:
        X = load_input(replace(cfg, input=replace(cfg.input, path=str(data_path), format=None)))
        truth = _load_truth(truth_path)
        if len(stimulus) != X.n_samples:
            raise InputError(f"stimulus has {len(stimulus)} samples, data has {X.n_samples}")
        roc_e, roc_g, point, _ = evaluate_realization(X, truth, cfg, stimulus)
        emb_curves.append(roc_e)
        glm_curves.append(roc_g)
        points.append(point)
        log.info("%s: AUC embedding %.3f, GLM %.3f", data_path.name, roc_e.auc, roc_g.auc)
    avg_e = baselines.average_roc(emb_curves)
    avg_g = baselines.average_roc(glm_curves)
    baselines.save_roc_csv(avg_e, out / "roc_embedding.csv")
    baselines.save_roc_csv(avg_g, out / "roc_glm.csv")
    pts = np.array(points)
    with open(out / "roc_summary.csv", "w") as fh:
        fh.write("method,n_realizations,auc," + ",".join(f"tpr@{f}" for f in SUMMARY_FPRS) + "\n")
        for name, curve in (("embedding", avg_e), ("glm", avg_g)):
            tprs = ",".join(repr(curve.tpr_at(f)) for f in SUMMARY_FPRS)
            fh.write(f"{name},{len(pairs)},{curve.auc!r},{tprs}\n")
    with open(out / "cluster_operating_point.csv", "w") as fh:
        fh.write("fpr,tpr\n")
        fh.write(f"{float(pts[:, 0].mean())!r},{float(pts[:, 1].mean())!r}\n")
    files = [_write_effective(cfg, out)]
    files += [out / n for n in ("roc_embedding.csv", "roc_glm.csv", "roc_summary.csv",
                                "cluster_operating_point.csv")]
    return files


def _save_coords(coords, path):
    header = ["index"] + [f"c{k}" for k in range(1, coords.shape[1] + 1)]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i, row in enumerate(coords):
            fh.write(str(i) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def cmd_baseline(cfg, method):
    out = _outdir(cfg)
    X = load_input(cfg)
    files = [_write_effective(cfg, out)]
    K = cfg.embedding.K if cfg.embedding.K != "auto" else 3
    if method == "pca":
        _save_coords(baselines.pca_embed(X, K), out / "pca_embedding.csv")
        files.append(out / "pca_embedding.csv")
    elif method == "isomap":
        coords = baselines.isomap_embed(X, cfg.graph.n_neighbors, K)
        _save_coords(coords, out / "isomap_embedding.csv")
        files.append(out / "isomap_embedding.csv")
    elif method == "glm":
        stim = _stimulus_for(cfg, X.n_samples)
        res = baselines.glm_tmap(X, glm_regressor(cfg, stim), cfg.glm.two_sided)
        baselines.save_tmap_csv(res, out / "tmap.csv")
        active = res.active(cfg.glm.p_threshold).astype(np.int64)
        save_labels_csv(active, out / "glm_active.csv")
        files += [out / "tmap.csv", out / "glm_active.csv"]
        mask = _load_mask(cfg)
        if mask is not None:
            files += maps.write_label_maps(active, mask, out, "glm", 2)
    else:
        raise InputError(f"unknown baseline method {method!r}")
    return files


def oracle_check(n_graphs=100, seed=0, n_range=(5, 30)):
    """Spectral commute times against the fundamental-matrix oracle on random graphs.

    Returns one row per graph: ``(n_nodes, max relative error, one-step residual)``.
    """
    rows = []
    for G in graphgen.random_graph_suite(n_graphs, seed, n_range):
        dec = spectral.decompose(G, G.n_nodes, dense_cutoff=G.n_nodes)
        spec = spectral.commute_matrix(dec)
        model = walk.build_walk_model(G)
        H = walk.hitting_times(model)
        exact = H + H.T
        off = ~np.eye(G.n_nodes, dtype=bool)
        rel = float(np.max(np.abs(spec[off] - exact[off]) / exact[off]))
        rows.append((G.n_nodes, rel, walk.verify_one_step(model, H)))
    return rows


def cmd_oracle_check(output_dir, n_graphs=100, seed=0, tol=1e-6):
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = oracle_check(n_graphs, seed)
    with open(out / "oracle_check.csv", "w") as fh:
        fh.write("graph,n_nodes,max_rel_error,one_step_residual\n")
        for g, (n, rel, res) in enumerate(rows):
            fh.write(f"{g},{n},{rel!r},{res!r}\n")
    worst = max(r[1] for r in rows)
    return out / "oracle_check.csv", worst, worst <= tol
