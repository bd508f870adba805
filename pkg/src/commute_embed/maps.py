"""Label maps on the voxel grid, written as binary PGM images (one per slice)."""

from pathlib import Path

import numpy as np

from .errors import InputError

OUTSIDE = 0
BACKGROUND_GRAY = 128


def gray_levels(n_labels):
    """Gray value for labels ``0..n_labels-1``: 128 for background, distinct bright levels otherwise."""
    levels = [BACKGROUND_GRAY]
    if n_labels > 1:
        fg = np.linspace(255, 160, n_labels - 1) if n_labels > 2 else np.array([255.0])
        levels += [int(round(v)) for v in fg]
    if n_labels - 1 > 255 - BACKGROUND_GRAY:
        raise InputError(f"too many labels ({n_labels}) for distinct gray levels")
    return np.array(levels, dtype=np.uint8)


def label_volume(labels, mask):
    """``(slice, y, x)`` array of labels; voxels outside the mask are -1."""
    labels = np.asarray(labels, dtype=np.int64)
    nx, ny, nz = mask.grid_dims
    vol = np.full((nz, ny, nx), -1, dtype=np.int64)
    if mask.indices.max(initial=-1) >= len(labels):
        raise InputError("mask refers to points beyond the label vector")
    x, y, z = mask.coords.T
    vol[z, y, x] = labels[mask.indices]
    return vol


def write_pgm(image, path):
    image = np.asarray(image, dtype=np.uint8)
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes(order="C"))


def read_pgm(path):
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise InputError(f"{path}: not a binary PGM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


def write_label_maps(labels, mask, outdir, prefix="labels", n_labels=None):
    """Write ``{prefix}_slice{z:03d}.pgm`` for every slice and return the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    vol = label_volume(labels, mask)
    n_labels = int(vol.max()) + 1 if n_labels is None else int(n_labels)
    levels = gray_levels(max(n_labels, 1))
    paths = []
    for z, plane in enumerate(vol):
        img = np.full(plane.shape, OUTSIDE, dtype=np.uint8)
        inside = plane >= 0
        img[inside] = levels[plane[inside]]
        path = outdir / f"{prefix}_slice{z:03d}.pgm"
        write_pgm(img, path)
        paths.append(path)
    return paths
