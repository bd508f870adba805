"""``commute-embed`` command line entry point."""

import argparse
import logging
import sys
import warnings
from dataclasses import replace

from . import __version__, pipeline
from .config import (
    PipelineConfig,
    SynthConfig,
    load_pipeline_config,
    load_synth_config,
)
from .errors import EmbedError, InputError
from .graph import GraphConfig

log = logging.getLogger("commute_embed")


def _pipeline_args(p):
    p.add_argument("--config", help="pipeline config file")
    p.add_argument("--input", help="dataset file (overrides [input] path)")
    p.add_argument("--format", choices=["fts-binary", "csv"])
    p.add_argument("--mask", help="voxel mask CSV")
    p.add_argument("--truth", help="ground-truth CSV (index,activated)")
    p.add_argument("--stimulus", help="stimulus CSV")
    p.add_argument("--tr", type=float, help="sampling interval in seconds")
    p.add_argument("--n-neighbors", type=int)
    p.add_argument("--sigma-multiplier", type=float)
    p.add_argument("--K", help="embedding dimension or 'auto'")
    p.add_argument("--n-clusters", type=int)
    p.add_argument("--seed", type=int, help="clustering seed")
    p.add_argument("--output", "-o", help="output directory")


def _pipeline_config(args):
    cfg = load_pipeline_config(args.config) if args.config else PipelineConfig()
    inp = cfg.input
    for name in ("input", "format", "mask", "truth", "stimulus", "tr"):
        value = getattr(args, name)
        if value is not None:
            inp = replace(inp, **{"path" if name == "input" else name: value})
    cfg = replace(cfg, input=inp)
    if args.n_neighbors is not None or args.sigma_multiplier is not None:
        g = cfg.graph
        cfg = replace(cfg, graph=GraphConfig(
            args.n_neighbors if args.n_neighbors is not None else g.n_neighbors,
            args.sigma_multiplier if args.sigma_multiplier is not None else g.sigma_multiplier,
            g.explicit_sigma,
        ))
    if args.K is not None:
        if args.K == "auto":
            K = "auto"
        else:
            try:
                K = int(args.K)
            except ValueError:
                raise InputError(f"--K must be an integer or 'auto', got {args.K!r}") from None
        cfg = replace(cfg, embedding=replace(cfg.embedding, K=K))
    if args.n_clusters is not None:
        cfg = replace(cfg, cluster=replace(cfg.cluster, n_clusters=args.n_clusters))
    if args.seed is not None:
        cfg = replace(cfg, cluster=replace(cfg.cluster, seed=args.seed))
    if args.output is not None:
        cfg = replace(cfg, output_dir=args.output)
    return cfg


def _synth_config(args):
    cfg = load_synth_config(args.config) if args.config else SynthConfig()
    if args.seed is not None:
        cfg = replace(cfg, phantom=cfg.phantom.with_seed(args.seed))
    if args.n_realizations is not None:
        if args.n_realizations < 1:
            raise InputError("--n-realizations must be >= 1")
        cfg = replace(cfg, n_realizations=args.n_realizations)
    if args.noise_sigma is not None:
        cfg = replace(cfg, phantom=replace(cfg.phantom, noise_sigma=args.noise_sigma))
    if args.output is not None:
        cfg = replace(cfg, output_dir=args.output)
    return cfg


def build_parser():
    parser = argparse.ArgumentParser(
        prog="commute-embed", description="Commute-time spectral embedding of time-series datasets."
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="build the graph and write the commute-time embedding")
    _pipeline_args(p)
    p = sub.add_parser("cluster", help="embed, then cluster the embedding by direction")
    _pipeline_args(p)
    p = sub.add_parser("roc", help="ROC of embedding radius and GLM over a synth directory")
    _pipeline_args(p)
    p = sub.add_parser("baseline", help="PCA, ISOMAP or GLM on the same dataset")
    _pipeline_args(p)
    p.add_argument("--method", choices=["pca", "isomap", "glm"], required=True)

    p = sub.add_parser("synth", help="generate synthetic phantoms")
    p.add_argument("--config", help="synth config file")
    p.add_argument("--seed", type=int, help="base seed; realization r uses seed + r")
    p.add_argument("--n-realizations", type=int)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--output", "-o")

    p = sub.add_parser("oracle-check", help="compare spectral and walk commute times on random graphs")
    p.add_argument("--n-graphs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--output", "-o", default="oracle")
    return parser


def run(args):
    if args.command == "synth":
        files = pipeline.cmd_synth(_synth_config(args))
    elif args.command == "oracle-check":
        path, worst, ok = pipeline.cmd_oracle_check(args.output, args.n_graphs, args.seed, args.tol)
        print(f"max relative error {worst:.3e} over {args.n_graphs} graphs: {'ok' if ok else 'FAILED'}")
        if not ok:
            raise EmbedError(f"spectral and walk commute times disagree by {worst:.3e}")
        files = [path]
    else:
        cfg = _pipeline_config(args)
        if args.command == "embed":
            files = pipeline.cmd_embed(cfg)
        elif args.command == "cluster":
            files = pipeline.cmd_cluster(cfg)
        elif args.command == "roc":
            files = pipeline.cmd_roc(cfg)
        else:
            files = pipeline.cmd_baseline(cfg, args.method)
    for f in files:
        log.info("wrote %s", f)
    return files


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    warnings.simplefilter("default")
    try:
        run(args)
    except EmbedError as exc:
        print(f"commute-embed: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
