"""Synthetic ground truth: a disk of activated voxels inside a disk-shaped brain.

Activated voxels carry background noise plus the stimulus convolved with a
two-gamma hemodynamic response whose scale and dispersion vary per voxel.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import TimeSeriesMatrix, VoxelMask, load_dataset
from .errors import InputError


@dataclass(frozen=True)
class HrfParams:
    alpha: float = 1.0
    a1: float = 6.0
    a2: float = 12.0
    b1: float = 1.0
    b2: float = 0.9
    c: float = 0.35
    d1: float | None = None
    d2: float | None = None

    def __post_init__(self):
        # peak delays follow the SPM convention d_j = a_j * b_j unless given
        if self.d1 is None:
            object.__setattr__(self, "d1", self.a1 * self.b1)
        if self.d2 is None:
            object.__setattr__(self, "d2", self.a2 * self.b2)
        for name in ("a1", "a2", "b1", "b2", "d1", "d2"):
            if not getattr(self, name) > 0:
                raise InputError(f"HRF parameter {name} must be positive")
        if self.c < 0:
            raise InputError("HRF undershoot weight c must be non-negative")


@dataclass(frozen=True, eq=False)
class StimulusSeries:
    samples: np.ndarray
    tr_seconds: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64).ravel()
        if s.size < 1 or not np.all(np.isfinite(s)):
            raise InputError("stimulus must be a non-empty finite series")
        if not self.tr_seconds > 0:
            raise InputError(f"TR must be positive, got {self.tr_seconds}")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size


def block_stimulus(on_seconds=30.0, off_seconds=30.0, tr_seconds=3.0, n_cycles=4):
    """On/off boxcar sampled every TR, starting with the on block."""
    on = int(round(on_seconds / tr_seconds))
    off = int(round(off_seconds / tr_seconds))
    cycle = np.r_[np.ones(on), np.zeros(off)]
    return StimulusSeries(np.tile(cycle, n_cycles), tr_seconds)


def load_stimulus(path, tr_seconds):
    values = np.loadtxt(path, delimiter=",", ndmin=1)
    return StimulusSeries(values, tr_seconds)


def save_stimulus(stimulus, path):
    with open(path, "w") as fh:
        for v in stimulus.samples:
            fh.write(f"{float(v):g}\n")


def hrf(t, p=HrfParams()):
    """Two-gamma response ``alpha (t/d1)^a1 e^{-(t-d1)/b1} - c (t/d2)^a2 e^{-(t-d2)/b2}``."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise InputError("HRF is defined for t >= 0 only")
    peak = p.alpha * (t / p.d1) ** p.a1 * np.exp(-(t - p.d1) / p.b1)
    undershoot = p.c * (t / p.d2) ** p.a2 * np.exp(-(t - p.d2) / p.b2)
    out = peak - undershoot
    return float(out) if out.ndim == 0 else out


def convolve_stimulus(g, p=HrfParams()):
    """Causal convolution of the stimulus with the HRF sampled at the TR, truncated to len(g)."""
    n = len(g)
    kernel = hrf(np.arange(n) * g.tr_seconds, p)
    return np.convolve(g.samples, kernel)[:n]


@dataclass(frozen=True)
class PhantomSpec:
    """Geometry and signal model of the disk phantom.

    The default radii and centre give 1067 brain voxels of which 97 are
    activated. ``background`` is ``"ar1"`` (Gaussian AR(1) noise with
    coefficient ``ar_rho`` and innovation s.d. ``noise_sigma``) or
    ``"pool"`` (series drawn from ``pool_file``, after dropping those whose
    variance exceeds the ``pool_variance_quantile`` quantile).

    ``b1_range`` is drawn in units of ``b1_unit_seconds``: the default
    range 5..10 tenths of a second puts the response peak ``a1 * b1`` at
    3..6 s. With ``b1_unit_seconds=1`` the peak moves to 30..60 s.
    """

    grid: tuple = (40, 40)
    brain_center: tuple = (19.0, 19.7)
    brain_radius: float = 18.4
    activation_center: tuple | None = None
    activation_radius: float = 5.55
    background: str = "ar1"
    ar_rho: float = 0.3
    noise_sigma: float = 0.5
    pool_file: str | None = None
    pool_variance_quantile: float = 0.95
    alpha_range: tuple = (0.8, 1.2)
    b1_range: tuple = (5.0, 10.0)
    b1_unit_seconds: float = 0.1
    hrf: HrfParams = field(default_factory=HrfParams)
    seed: int = 0

    def __post_init__(self):
        if self.activation_center is None:
            object.__setattr__(self, "activation_center", tuple(self.brain_center))
        if self.background not in ("ar1", "pool"):
            raise InputError(f"background must be 'ar1' or 'pool', got {self.background!r}")
        if self.background == "pool" and not self.pool_file:
            raise InputError("pool background needs pool_file")
        if not -1 < self.ar_rho < 1:
            raise InputError("ar_rho must lie in (-1, 1)")
        if not self.noise_sigma >= 0:
            raise InputError("noise_sigma must be non-negative")
        for name in ("alpha_range", "b1_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InputError(f"{name} is empty: {lo} > {hi}")
        if self.b1_range[0] <= 0 or self.b1_unit_seconds <= 0:
            raise InputError("b1_range and b1_unit_seconds must be positive")
        gap = np.hypot(*np.subtract(self.activation_center, self.brain_center))
        if self.activation_radius <= 0 or gap + self.activation_radius >= self.brain_radius:
            raise InputError("activation disk must lie strictly inside the brain disk")

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


@dataclass(frozen=True, eq=False)
class Phantom:
    data: TimeSeriesMatrix
    truth: np.ndarray
    mask: VoxelMask
    alpha: np.ndarray
    b1: np.ndarray

    @property
    def n_activated(self):
        return int(self.truth.sum())


def phantom_geometry(spec):
    """Grid coordinates (x, y) of brain voxels in row-major order, and the activation flag."""
    nx, ny = spec.grid
    y, x = np.mgrid[0:ny, 0:nx]
    bx, by = spec.brain_center
    ax, ay = spec.activation_center
    brain = np.hypot(x - bx, y - by) <= spec.brain_radius
    active = np.hypot(x - ax, y - ay) <= spec.activation_radius
    xs, ys = x[brain], y[brain]
    return np.column_stack([xs, ys]), active[brain]


def ar1_series(rng, n, rho, sigma):
    x = np.empty(n)
    x[0] = rng.normal(0.0, sigma / np.sqrt(1.0 - rho**2))
    eps = rng.normal(0.0, sigma, size=n - 1)
    for t in range(1, n):
        x[t] = rho * x[t - 1] + eps[t - 1]
    return x


def load_background_pool(path, quantile=0.95):
    """Pool series with the highest-variance ones screened out."""
    pool = load_dataset(path).values
    var = pool.var(axis=1)
    return pool[var <= np.quantile(var, quantile)]


def generate_phantom(spec, stimulus):
    """One realization of the phantom for ``stimulus``.

    Every brain voxel draws from its own generator derived from
    ``(spec.seed, voxel)``; activated voxels draw ``alpha`` and ``b1``
    uniformly from the configured ranges.
    """
    xy, truth = phantom_geometry(spec)
    n, t = len(xy), len(stimulus)
    if t < 2:
        raise InputError("stimulus needs at least two samples")
    seeds = np.random.SeedSequence(int(spec.seed)).spawn(n + 1)
    if spec.background == "pool":
        pool = load_background_pool(spec.pool_file, spec.pool_variance_quantile)
        if pool.shape[1] != t:
            raise InputError(f"pool series have T={pool.shape[1]}, stimulus has {t}")
        if len(pool) < n:
            raise InputError(f"background pool exhausted: need {n} series, have {len(pool)}")
        order = np.random.Generator(np.random.PCG64(seeds[n])).permutation(len(pool))[:n]
        background = pool[order]
    else:
        background = np.stack(
            [ar1_series(np.random.Generator(np.random.PCG64(s)), t, spec.ar_rho, spec.noise_sigma)
             for s in seeds[:n]]
        )
    values = background.copy()
    alpha = np.zeros(n)
    b1 = np.zeros(n)
    for v in np.nonzero(truth)[0]:
        rng = np.random.Generator(np.random.PCG64(seeds[v].spawn(1)[0]))
        alpha[v] = rng.uniform(*spec.alpha_range)
        b1[v] = rng.uniform(*spec.b1_range) * spec.b1_unit_seconds
        # alpha scales the whole response so that alpha = 0 means no activation
        p = replace(spec.hrf, alpha=1.0, b1=b1[v], d1=None)
        values[v] += alpha[v] * convolve_stimulus(stimulus, p)
    coords = np.column_stack([xy, np.zeros(n, dtype=np.int64)])
    mask = VoxelMask(np.arange(n), coords, (spec.grid[0], spec.grid[1], 1))
    return Phantom(TimeSeriesMatrix(values), truth.astype(np.int64), mask, alpha, b1)
