"""Line-oriented ``key = value`` configuration with sections.

Pipeline runs read ``[input] [preprocess] [graph] [embedding] [cluster]
[glm] [output]``; synthetic batches read ``[phantom] [stimulus] [batch]``.
Every run writes back an ``effective_config.ini`` that reproduces it.
"""

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .cluster import ClusterConfig
from .errors import InputError
from .graph import GraphConfig
from .phantom import HrfParams, PhantomSpec


@dataclass(frozen=True)
class InputConfig:
    path: str | None = None
    format: str | None = None
    mask: str | None = None
    truth: str | None = None
    stimulus: str | None = None
    tr: float | None = None


@dataclass(frozen=True)
class PreprocessConfig:
    detrend: bool = False
    svd_modes: int | None = None
    trial_onsets: tuple | None = None
    trial_len: int | None = None


@dataclass(frozen=True)
class EmbeddingConfig:
    K: int | str = 2
    theta: float = 0.1
    k_max: int = 20

    def __post_init__(self):
        if self.K != "auto" and (not isinstance(self.K, int) or self.K < 1):
            raise InputError(f"embedding K must be a positive integer or 'auto', got {self.K!r}")


@dataclass(frozen=True)
class GlmConfig:
    hrf: str = "spm"
    p_threshold: float = 0.001
    two_sided: bool = False
    alpha: float = 1.0
    b1: float = 1.0
    delta: float = 2.5
    tau: float = 1.5

    def __post_init__(self):
        if self.hrf not in ("spm", "dale"):
            raise InputError(f"glm hrf must be 'spm' or 'dale', got {self.hrf!r}")
        if not 0 < self.p_threshold < 1:
            raise InputError("glm p_threshold must be in (0, 1)")


@dataclass(frozen=True)
class PipelineConfig:
    input: InputConfig = field(default_factory=InputConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    graph: GraphConfig = field(default_factory=lambda: GraphConfig(n_neighbors=9))
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    glm: GlmConfig = field(default_factory=GlmConfig)
    output_dir: str = "out"


@dataclass(frozen=True)
class StimulusConfig:
    file: str | None = None
    tr: float = 3.0
    on_seconds: float = 30.0
    off_seconds: float = 30.0
    n_cycles: int = 4


@dataclass(frozen=True)
class SynthConfig:
    phantom: PhantomSpec = field(default_factory=PhantomSpec)
    stimulus: StimulusConfig = field(default_factory=StimulusConfig)
    n_realizations: int = 1
    output_dir: str = "synth"


# -- value parsing ----------------------------------------------------------

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse(raw, current, name):
    raw = raw.strip()
    if raw.lower() in ("", "none"):
        return None
    try:
        if isinstance(current, bool):
            low = raw.lower()
            if low not in _TRUE | _FALSE:
                raise ValueError(raw)
            return low in _TRUE
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
        if isinstance(current, tuple):
            parts = [p for p in raw.replace(",", " ").split() if p]
            return tuple(int(p) if p.lstrip("-").isdigit() else float(p) for p in parts)
    except ValueError:
        raise InputError(f"bad value for {name}: {raw!r}") from None
    # untyped default (None or str): try number, fall back to text
    for conv in (int, float):
        try:
            return conv(raw)
        except ValueError:
            pass
    if "," in raw:
        return tuple(_parse(p, None, name) for p in raw.split(","))
    return raw


def _fill(cls, section, defaults=None, name=""):
    base = defaults if defaults is not None else cls()
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, raw in section.items():
        if key not in known:
            raise InputError(f"unknown key [{name}] {key}")
        kwargs[key] = _parse(raw, getattr(base, key), f"[{name}] {key}")
    return replace(base, **kwargs)


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def _read(path):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    if not Path(path).is_file():
        raise InputError(f"config file {path} does not exist")
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise InputError(f"{path}: {exc}") from None
    return parser


def _resolve(base, value):
    if value is None or Path(value).is_absolute():
        return value
    return str((base / value).resolve())


def load_pipeline_config(path):
    """Read a pipeline config; relative paths are taken relative to the config file."""
    parser = _read(path)
    sections = {s: dict(parser[s]) for s in parser.sections()}
    allowed = {"input", "preprocess", "graph", "embedding", "cluster", "glm", "output"}
    unknown = set(sections) - allowed
    if unknown:
        raise InputError(f"unknown config sections: {sorted(unknown)}")
    base = Path(path).resolve().parent
    inp = _fill(InputConfig, sections.get("input", {}), name="input")
    inp = replace(
        inp,
        path=_resolve(base, inp.path),
        mask=_resolve(base, inp.mask),
        truth=_resolve(base, inp.truth),
        stimulus=_resolve(base, inp.stimulus),
    )
    graph_sec = sections.get("graph", {})
    if "n_neighbors" not in graph_sec:
        raise InputError("[graph] n_neighbors is required")
    graph = GraphConfig(
        n_neighbors=int(graph_sec["n_neighbors"]),
        sigma_multiplier=float(graph_sec.get("sigma_multiplier", 2.0)),
        explicit_sigma=_parse(graph_sec.get("explicit_sigma", "none"), 1.0, "[graph] explicit_sigma"),
    )
    extra = set(graph_sec) - {"n_neighbors", "sigma_multiplier", "explicit_sigma"}
    if extra:
        raise InputError(f"unknown key [graph] {sorted(extra)[0]}")
    emb_sec = dict(sections.get("embedding", {}))
    K = emb_sec.pop("K", "2").strip()
    embedding = _fill(EmbeddingConfig, emb_sec, EmbeddingConfig(K=2), name="embedding")
    embedding = replace(embedding, K="auto" if K == "auto" else _parse(K, 0, "[embedding] K"))
    cluster_sec = dict(sections.get("cluster", {}))
    n_clusters = _parse(cluster_sec.pop("n_clusters", "none"), 0, "[cluster] n_clusters")
    cluster = _fill(ClusterConfig, cluster_sec, name="cluster")
    cluster = replace(cluster, n_clusters=n_clusters)
    out = sections.get("output", {})
    output_dir = _resolve(base, out.get("directory", "out"))
    return PipelineConfig(
        input=inp,
        preprocess=_fill(PreprocessConfig, sections.get("preprocess", {}), name="preprocess"),
        graph=graph,
        embedding=embedding,
        cluster=cluster,
        glm=_fill(GlmConfig, sections.get("glm", {}), name="glm"),
        output_dir=output_dir,
    )


def pipeline_config_text(cfg):
    """Serialise a pipeline config in the same format :func:`load_pipeline_config` reads."""
    parts = []
    for section, obj in (
        ("input", cfg.input),
        ("preprocess", cfg.preprocess),
        ("graph", cfg.graph),
        ("embedding", cfg.embedding),
        ("cluster", cfg.cluster),
        ("glm", cfg.glm),
    ):
        parts.append(f"[{section}]")
        parts += [f"{f.name} = {_format(getattr(obj, f.name))}" for f in fields(obj)]
        parts.append("")
    parts += ["[output]", f"directory = {cfg.output_dir}", ""]
    return "\n".join(parts)


def load_synth_config(path):
    parser = _read(path)
    sections = {s: dict(parser[s]) for s in parser.sections()}
    unknown = set(sections) - {"phantom", "hrf", "stimulus", "batch", "output"}
    if unknown:
        raise InputError(f"unknown config sections: {sorted(unknown)}")
    base = Path(path).resolve().parent
    hrf_sec = sections.get("hrf", {})
    extra = set(hrf_sec) - {f.name for f in fields(HrfParams)}
    if extra:
        raise InputError(f"unknown key [hrf] {sorted(extra)[0]}")
    # built fresh so that the derived delays d1, d2 follow the given b1, b2
    hrf = HrfParams(**{k: _parse(v, 1.0, f"[hrf] {k}") for k, v in hrf_sec.items()})
    ph_sec = dict(sections.get("phantom", {}))
    pspec = _fill(_PhantomFields, ph_sec, name="phantom")
    pspec = {f.name: getattr(pspec, f.name) for f in fields(_PhantomFields)}
    pspec["pool_file"] = _resolve(base, pspec["pool_file"])
    phantom = PhantomSpec(**pspec, hrf=hrf)
    stim = _fill(StimulusConfig, sections.get("stimulus", {}), name="stimulus")
    stim = replace(stim, file=_resolve(base, stim.file))
    batch = sections.get("batch", {})
    n_real = int(batch.get("n_realizations", 1))
    if n_real < 1:
        raise InputError("[batch] n_realizations must be >= 1")
    output_dir = _resolve(base, sections.get("output", {}).get("directory", "synth"))
    return SynthConfig(phantom, stim, n_real, output_dir)


@dataclass(frozen=True)
class _PhantomFields:
    grid: tuple = PhantomSpec.grid
    brain_center: tuple = PhantomSpec.brain_center
    brain_radius: float = PhantomSpec.brain_radius
    activation_center: tuple | None = None
    activation_radius: float = PhantomSpec.activation_radius
    background: str = PhantomSpec.background
    ar_rho: float = PhantomSpec.ar_rho
    noise_sigma: float = PhantomSpec.noise_sigma
    pool_file: str | None = None
    pool_variance_quantile: float = PhantomSpec.pool_variance_quantile
    alpha_range: tuple = PhantomSpec.alpha_range
    b1_range: tuple = PhantomSpec.b1_range
    b1_unit_seconds: float = PhantomSpec.b1_unit_seconds
    seed: int = PhantomSpec.seed


def synth_config_text(cfg):
    ph = cfg.phantom
    lines = ["[phantom]"]
    lines += [f"{f.name} = {_format(getattr(ph, f.name))}" for f in fields(_PhantomFields)]
    lines += ["", "[hrf]"]
    # d1 is re-derived per voxel from the drawn b1, so it is not written
    lines += [f"{f.name} = {_format(getattr(ph.hrf, f.name))}" for f in fields(HrfParams)
              if f.name != "d1"]
    lines += ["", "[stimulus]"]
    lines += [f"{f.name} = {_format(getattr(cfg.stimulus, f.name))}" for f in fields(StimulusConfig)]
    lines += ["", "[batch]", f"n_realizations = {cfg.n_realizations}", ""]
    lines += ["[output]", f"directory = {cfg.output_dir}", ""]
    return "\n".join(lines)
