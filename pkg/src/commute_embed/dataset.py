"""Time-series datasets: storage, file formats and preconditioning.

A dataset is an N x T matrix whose row ``i`` is the time series of point
(voxel) ``i``. Values are float64 in memory and float32 on disk.
"""

import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    InputError,
    MalformedHeaderError,
    NonFiniteValueError,
)

FTS_MAGIC = b"FTS1"
_FTS_HEADER = struct.Struct("<4sII")
_DELIMITER = re.compile(r"[,\s]+")


@dataclass(frozen=True, eq=False)
class TimeSeriesMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2:
            raise DimensionMismatchError(f"expected a 2-D matrix, got shape {v.shape}")
        if v.shape[0] < 2 or v.shape[1] < 2:
            raise DimensionMismatchError(f"need N >= 2 and T >= 2, got {v.shape}")
        if not np.all(np.isfinite(v)):
            bad = np.argwhere(~np.isfinite(v))[0]
            raise NonFiniteValueError(f"non-finite value at row {bad[0]}, column {bad[1]}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_points(self):
        return self.values.shape[0]

    @property
    def n_samples(self):
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.n_points


def as_matrix(X):
    """Return ``X`` as a :class:`TimeSeriesMatrix` (no copy if it already is one)."""
    return X if isinstance(X, TimeSeriesMatrix) else TimeSeriesMatrix(X)


@dataclass(frozen=True)
class VoxelMask:
    """Spatial location of every point on a (x, y, slice) grid.

    ``coords[k]`` is the grid position of point ``indices[k]``.
    """

    indices: np.ndarray
    coords: np.ndarray
    grid_dims: tuple

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        xyz = np.asarray(self.coords, dtype=np.int64).reshape(-1, 3)
        dims = tuple(int(d) for d in self.grid_dims)
        if len(dims) != 3 or min(dims) < 1:
            raise InputError(f"grid_dims must be three positive integers, got {dims}")
        if len(idx) != len(xyz):
            raise DimensionMismatchError("mask indices and coordinates differ in length")
        if len(np.unique(idx)) != len(idx):
            raise InputError("mask indices are not unique")
        if len(xyz) and (xyz.min() < 0 or np.any(xyz.max(axis=0) >= np.array(dims))):
            raise InputError(f"mask coordinates fall outside grid {dims}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "coords", xyz)
        object.__setattr__(self, "grid_dims", dims)

    def __len__(self):
        return len(self.indices)


# -- file formats ---------------------------------------------------------


def load_dataset(path, format=None):
    """Read a dataset from ``path``.

    ``format`` is ``"fts-binary"`` or ``"csv"``; when omitted it is guessed
    from the file extension (``.fts`` is binary, anything else CSV).
    """
    path = Path(path)
    if format is None:
        format = "fts-binary" if path.suffix.lower() == ".fts" else "csv"
    if format == "fts-binary":
        return _load_fts(path)
    if format == "csv":
        return _load_csv(path)
    raise InputError(f"unknown dataset format {format!r}")


def save_dataset(X, path, format=None):
    path = Path(path)
    if format is None:
        format = "fts-binary" if path.suffix.lower() == ".fts" else "csv"
    X = as_matrix(X)
    if format == "fts-binary":
        n, t = X.values.shape
        data = X.values.astype("<f4").tobytes(order="C")
        path.write_bytes(_FTS_HEADER.pack(FTS_MAGIC, n, t) + data)
    elif format == "csv":
        with open(path, "w") as fh:
            for row in X.values:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    else:
        raise InputError(f"unknown dataset format {format!r}")


def _load_fts(path):
    raw = path.read_bytes()
    if len(raw) < _FTS_HEADER.size:
        raise MalformedHeaderError(f"{path}: file shorter than the 12-byte header")
    magic, n, t = _FTS_HEADER.unpack_from(raw)
    if magic != FTS_MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic {magic!r}, expected {FTS_MAGIC!r}")
    body = raw[_FTS_HEADER.size:]
    if len(body) != 4 * n * t:
        raise DimensionMismatchError(
            f"{path}: header declares N={n}, T={t} ({4 * n * t} bytes) "
            f"but payload has {len(body)} bytes"
        )
    values = np.frombuffer(body, dtype="<f4").reshape(n, t).astype(np.float64)
    return TimeSeriesMatrix(values)


def _load_csv(path):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in _DELIMITER.split(line)]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            if not all(np.isfinite(row)):
                raise NonFiniteValueError(f"{path}:{lineno}: non-finite value")
            if rows and len(row) != len(rows[0]):
                raise DimensionMismatchError(
                    f"{path}:{lineno}: {len(row)} fields, expected {len(rows[0])}"
                )
            rows.append(row)
    if not rows:
        raise DimensionMismatchError(f"{path}: no data rows")
    return TimeSeriesMatrix(np.array(rows))


def save_mask(mask, path):
    with open(path, "w") as fh:
        fh.write("index,x,y,slice\n")
        for i, (x, y, z) in zip(mask.indices, mask.coords):
            fh.write(f"{i},{x},{y},{z}\n")


def load_mask(path, grid_dims=None):
    """Read a mask sidecar. ``grid_dims`` defaults to the bounding box of the coordinates."""
    with open(path) as fh:
        header = fh.readline().strip().replace(" ", "")
        if header != "index,x,y,slice":
            raise MalformedHeaderError(f"{path}: expected header 'index,x,y,slice'")
        table = np.array(
            [[int(tok) for tok in line.split(",")] for line in fh if line.strip()],
            dtype=np.int64,
        ).reshape(-1, 4)
    if grid_dims is None:
        grid_dims = tuple(int(m) + 1 for m in table[:, 1:].max(axis=0)) if len(table) else (1, 1, 1)
    return VoxelMask(table[:, 0], table[:, 1:], grid_dims)


# -- preconditioning ------------------------------------------------------


def detrend_linear(X):
    """Remove the least-squares affine trend from every row."""
    X = as_matrix(X)
    t = X.n_samples
    if t < 3:
        raise InputError(f"detrending needs T >= 3 samples, got {t}")
    design = np.column_stack([np.ones(t), np.arange(t, dtype=np.float64)])
    q, _ = np.linalg.qr(design)
    v = X.values
    return TimeSeriesMatrix(v - (v @ q) @ q.T)


def svd_denoise(X, n_modes):
    """Subtract the rank-``n_modes`` truncated SVD of ``X``.

    There is deliberately no default for ``n_modes``.
    """
    X = as_matrix(X)
    n_modes = int(n_modes)
    if not 0 <= n_modes < min(X.values.shape):
        raise InputError(f"n_modes must be in [0, {min(X.values.shape)}), got {n_modes}")
    if n_modes == 0:
        return X
    u, s, vt = np.linalg.svd(X.values, full_matrices=False)
    low_rank = (u[:, :n_modes] * s[:n_modes]) @ vt[:n_modes]
    return TimeSeriesMatrix(X.values - low_rank)


def average_trials(X, trial_onsets, trial_len):
    """Average the windows ``[onset, onset + trial_len)`` of every row."""
    X = as_matrix(X)
    onsets = [int(o) for o in trial_onsets]
    trial_len = int(trial_len)
    if not onsets:
        raise InputError("no trial onsets given")
    if trial_len < 1:
        raise InputError(f"trial_len must be positive, got {trial_len}")
    for o in onsets:
        if o < 0 or o + trial_len > X.n_samples:
            raise InputError(
                f"trial window [{o}, {o + trial_len}) outside [0, {X.n_samples})"
            )
    windows = np.stack([X.values[:, o:o + trial_len] for o in onsets])
    return TimeSeriesMatrix(windows.mean(axis=0))
