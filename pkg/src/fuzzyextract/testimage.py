"""Procedural 256x256 color test texture.

A deterministic stand-in for the classic primate test photo: multi-octave
value noise shared across channels for luma structure, independent per
channel detail for chroma, and a warm-center/cool-rim radial cast.  Pixel
values span the midtones so binarization is meaningfully lossy.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

DEFAULT_SIZE = 256
DEFAULT_SEED = 1897


def _octave(rng: np.random.Generator, size: int, cells: int) -> np.ndarray:
    coarse = rng.standard_normal((cells, cells))
    reps = -(-size // cells)
    fine = np.kron(coarse, np.ones((reps, reps)))[:size, :size]
    smooth = max(3, (size // cells) | 1)
    for _ in range(2):
        fine = uniform_filter(fine, size=smooth, mode="nearest")
    return fine


def _normalize(plane: np.ndarray, lo: float, hi: float) -> np.ndarray:
    span = plane.max() - plane.min()
    unit = (plane - plane.min()) / span
    return lo + unit * (hi - lo)


def synthetic_baboon(size: int = DEFAULT_SIZE, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Deterministic textured color image, shape (size, size, 3) uint8."""
    if size < 8:
        raise ValueError(f"size must be >= 8, got {size}")
    rng = np.random.Generator(np.random.PCG64(seed))

    octaves = [(4, 0.45), (8, 0.30), (16, 0.15), (32, 0.10)]
    base = sum(w * _octave(rng, size, c) for c, w in octaves)

    detail = [_octave(rng, size, 32) for _ in range(3)]

    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    center = (size - 1) / 2.0
    radius = np.hypot(xx - center, yy - center) / size

    r = 0.8 * base + 0.3 * detail[0] + 0.55 * (1.0 - radius)
    g = 0.8 * base + 0.3 * detail[1] + 0.25
    b = 0.8 * base + 0.3 * detail[2] + 0.55 * radius

    planes = [_normalize(p, 18.0, 238.0) for p in (r, g, b)]
    stacked = np.stack(planes, axis=-1)
    return np.clip(np.floor(stacked + 0.5), 0, 255).astype(np.uint8)
