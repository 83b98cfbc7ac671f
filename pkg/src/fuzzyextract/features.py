"""Per-pixel features feeding the rule base, ROI masks, and mask fusion.

Features per pixel: the color components (replicated intensity for gray
input), the local window mean and population standard deviation of the luma
plane, and one above-threshold flag per thresholding method.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from fuzzyextract.imaging import ensure_gray, ensure_image, is_color, luma_plane
from fuzzyextract.thresholding import ThresholdMethod, ThresholdResult

# Hard bounds of window statistics on 8-bit data (the std peaks when half the
# mass sits at 0 and half at 255); local_stats clamps the ulp-level overshoot
# the moving-average filter can produce on saturated windows.
MAX_LOCAL_MEAN = 255.0
MAX_LOCAL_STD = 127.5


def local_stats(img: np.ndarray, window: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Window mean and population std per pixel, edges replicated.

    ``window`` must be odd and no larger than either image dimension;
    window=1 returns the image itself and an all-zero std plane.
    """
    ensure_gray(img)
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    if window > min(img.shape):
        raise ValueError(f"window {window} exceeds image size {img.shape}")
    f = img.astype(np.float64)
    mean = uniform_filter(f, size=window, mode="nearest")
    mean_sq = uniform_filter(f * f, size=window, mode="nearest")
    var = np.maximum(mean_sq - mean * mean, 0.0)
    return np.clip(mean, 0.0, MAX_LOCAL_MEAN), np.minimum(np.sqrt(var), MAX_LOCAL_STD)


@dataclass(frozen=True)
class FeatureVector:
    """Features of a single pixel."""

    r: int
    g: int
    b: int
    local_mean: float
    local_std: float
    threshold_bits: tuple[bool, ...]


@dataclass
class FeaturePlanes:
    """Whole-image feature planes; ``bits`` carries one plane per method."""

    r: np.ndarray
    g: np.ndarray
    b: np.ndarray
    local_mean: np.ndarray
    local_std: np.ndarray
    bits: np.ndarray  # (H, W, 16) bool, method order = ThresholdMethod order
    methods: tuple[ThresholdMethod, ...]
    degenerate: tuple[ThresholdMethod, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.r.shape

    def at(self, x: int, y: int) -> FeatureVector:
        """Feature vector of pixel (x, y) = (column, row)."""
        return FeatureVector(
            r=int(self.r[y, x]),
            g=int(self.g[y, x]),
            b=int(self.b[y, x]),
            local_mean=float(self.local_mean[y, x]),
            local_std=float(self.local_std[y, x]),
            threshold_bits=tuple(bool(v) for v in self.bits[y, x]),
        )


def extract_features(
    img: np.ndarray,
    thresholds: dict[ThresholdMethod, ThresholdResult],
    window: int = 3,
) -> FeaturePlanes:
    """Build the feature planes of an image from its threshold map.

    A pixel's bit for a method is True iff its luma is strictly above that
    method's threshold; degenerate methods contribute all-False planes and
    are listed in ``degenerate``.
    """
    ensure_image(img)
    gray = luma_plane(img)
    mean, std = local_stats(gray, window)
    if is_color(img):
        r, g, b = img[..., 0], img[..., 1], img[..., 2]
    else:
        r = g = b = img
    bits = np.zeros(gray.shape + (len(ThresholdMethod),), dtype=bool)
    degenerate = []
    for i, method in enumerate(ThresholdMethod):
        res = thresholds[method]
        if res.ok:
            bits[..., i] = gray > res.t
        else:
            degenerate.append(method)
    return FeaturePlanes(
        r=r,
        g=g,
        b=b,
        local_mean=mean,
        local_std=std,
        bits=bits,
        methods=tuple(ThresholdMethod),
        degenerate=tuple(degenerate),
    )


def write_features_csv(planes: FeaturePlanes, path: str) -> None:
    """Dump one row per pixel: x, y, r, g, b, mean, std, 16 bit flags."""
    header = "x,y,r,g,b,mean,std," + ",".join(m.value for m in planes.methods)
    h, w = planes.shape
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header + "\n")
        for y in range(h):
            for x in range(w):
                bits = ",".join("1" if v else "0" for v in planes.bits[y, x])
                fh.write(
                    f"{x},{y},{planes.r[y, x]},{planes.g[y, x]},{planes.b[y, x]},"
                    f"{planes.local_mean[y, x]!r},{planes.local_std[y, x]!r},{bits}\n"
                )


@dataclass(frozen=True)
class RoiMask:
    """Foreground decision plane of one detector (or of the fused vote)."""

    mask: np.ndarray
    source: str

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape


def roi_masks(
    img: np.ndarray,
    thresholds: dict[ThresholdMethod, ThresholdResult],
) -> list[RoiMask]:
    """One foreground mask (luma > t) per non-degenerate method."""
    ensure_image(img)
    gray = luma_plane(img)
    masks = []
    for method in ThresholdMethod:
        res = thresholds[method]
        if res.ok:
            masks.append(RoiMask(mask=gray > res.t, source=method.value))
    return masks


def fuse_decisions(masks: list[RoiMask]) -> RoiMask:
    """Strict per-pixel majority vote; an exact tie counts as background."""
    if not masks:
        raise ValueError("cannot fuse an empty mask list")
    shape = masks[0].shape
    if any(m.shape != shape for m in masks):
        raise ValueError("masks must share dimensions")
    votes = np.zeros(shape, dtype=np.int64)
    for m in masks:
        votes += m.mask
    return RoiMask(mask=votes * 2 > len(masks), source="majority")
