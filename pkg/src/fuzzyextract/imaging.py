"""Image values, netpbm I/O, seeded Gaussian noise, and luma conversion.

Images are plain numpy arrays throughout the package: a grayscale image is a
2-D ``uint8`` array, a color image an ``(H, W, 3)`` ``uint8`` array with
channels in RGB order.  Everything is 8-bit; 16-bit input is rejected.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

GRAY_LEVELS = 256

# BT.601 luma weights; green intentionally carries the largest weight.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageFormatError(ValueError):
    """Unreadable, malformed, or unsupported image file."""


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise: ``sigma`` in intensity units plus a 64-bit seed."""

    sigma: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


def is_color(img: np.ndarray) -> bool:
    return img.ndim == 3


def ensure_image(img: np.ndarray) -> np.ndarray:
    """Validate an image array (gray 2-D or color HxWx3, uint8, non-empty)."""
    if not isinstance(img, np.ndarray):
        raise TypeError(f"expected numpy array, got {type(img).__name__}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {img.dtype}")
    if img.ndim == 3 and img.shape[2] != 3:
        raise ValueError(f"color image must have 3 channels, got {img.shape[2]}")
    if img.ndim not in (2, 3):
        raise ValueError(f"expected 2-D gray or 3-D color array, got ndim={img.ndim}")
    if img.size == 0:
        raise ValueError("empty image")
    return img


def ensure_gray(img: np.ndarray) -> np.ndarray:
    ensure_image(img)
    if is_color(img):
        raise ValueError("expected a grayscale image, got color")
    return img


def ensure_color(img: np.ndarray) -> np.ndarray:
    ensure_image(img)
    if not is_color(img):
        raise ValueError("expected a color image, got grayscale")
    return img


def round_half_up(x: np.ndarray | float) -> np.ndarray | float:
    """Half-up rounding (0.5 always rounds toward +inf), platform independent."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


# ---------------------------------------------------------------------------
# File I/O: binary PGM (P5) / PPM (P6) with maxval 255, plus read-only PNG.
# ---------------------------------------------------------------------------


def _read_netpbm_header(stream: io.BufferedReader) -> tuple[bytes, int, int, int]:
    """Parse magic, width, height, maxval; '#' comments allowed between tokens."""
    magic = stream.read(2)
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"unsupported netpbm magic {magic!r}")

    tokens: list[int] = []
    while len(tokens) < 3:
        ch = stream.read(1)
        if not ch:
            raise ImageFormatError("truncated netpbm header")
        if ch.isspace():
            continue
        if ch == b"#":
            while ch not in (b"", b"\n", b"\r"):
                ch = stream.read(1)
            continue
        digits = bytearray()
        while ch and not ch.isspace():
            if not ch.isdigit():
                raise ImageFormatError(f"malformed netpbm header near {ch!r}")
            digits += ch
            ch = stream.read(1)
        tokens.append(int(digits))
        # the final whitespace after maxval is the single raster separator
    width, height, maxval = tokens
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"invalid dimensions {width}x{height}")
    if maxval > 255:
        raise ImageFormatError(f"unsupported bit depth (maxval {maxval} > 255)")
    if maxval <= 0:
        raise ImageFormatError(f"invalid maxval {maxval}")
    return magic, width, height, maxval


def _read_netpbm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        magic, width, height, _ = _read_netpbm_header(fh)
        channels = 1 if magic == b"P5" else 3
        count = width * height * channels
        raster = fh.read(count)
        if len(raster) < count:
            raise ImageFormatError(f"truncated raster: expected {count} bytes, got {len(raster)}")
    data = np.frombuffer(raster, dtype=np.uint8, count=count)
    if channels == 1:
        return data.reshape(height, width)
    return data.reshape(height, width, 3)


def _read_png(path: str) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode == "P":
            im = im.convert("RGB")
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        if im.mode == "RGB":
            return np.asarray(im, dtype=np.uint8)
        if im.mode in ("I", "I;16", "I;16B", "I;16L"):
            raise ImageFormatError("unsupported bit depth (>8 bits per sample)")
        raise ImageFormatError(f"unsupported PNG mode {im.mode!r}")


def read_image(path: str) -> np.ndarray:
    """Read a PGM (P5), PPM (P6), or PNG file into a uint8 array.

    PGM yields a gray 2-D array, PPM/RGB-PNG an (H, W, 3) array.  Any sample
    depth above 8 bits is rejected.
    """
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic in (b"P5", b"P6"):
        return _read_netpbm(path)
    if magic == b"\x89P":
        return _read_png(path)
    raise ImageFormatError(f"unrecognized image format in {path!r}")


def write_image(img: np.ndarray, path: str) -> None:
    """Write a gray image as binary PGM or a color image as binary PPM.

    The extension must match the image kind (.pgm for gray, .ppm for color);
    the written file round-trips bit-exactly through :func:`read_image`.
    """
    ensure_image(img)
    lower = path.lower()
    if is_color(img):
        if not lower.endswith(".ppm"):
            raise ValueError("color images are written as .ppm")
        magic = b"P6"
    else:
        if not lower.endswith(".pgm"):
            raise ValueError("gray images are written as .pgm")
        magic = b"P5"
    h, w = img.shape[:2]
    header = magic + f"\n{w} {h}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(img).tobytes())


# ---------------------------------------------------------------------------
# Noise injection and color conversion.
# ---------------------------------------------------------------------------


def add_gaussian_noise(img: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Add i.i.d. Gaussian noise, rounded half-up and clamped to [0, 255].

    The noise stream is ``standard_normal`` from numpy's PCG64 generator
    seeded with ``spec.seed`` and scaled by ``spec.sigma``, drawn in C order
    over the full array (per channel for color images).  Identical
    ``(img, spec)`` pairs always produce bit-identical output.
    """
    ensure_image(img)
    if spec.sigma == 0:
        return img.copy()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    noise = rng.standard_normal(img.shape) * spec.sigma
    noisy = round_half_up(img.astype(np.float64) + noise)
    return np.clip(noisy, 0, 255).astype(np.uint8)


def to_luma(img: np.ndarray) -> np.ndarray:
    """Collapse RGB to luma with BT.601 weights, rounded half-up."""
    ensure_color(img)
    planes = img.astype(np.float64)
    wr, wg, wb = LUMA_WEIGHTS
    luma = planes[..., 0] * wr + planes[..., 1] * wg + planes[..., 2] * wb
    return np.clip(round_half_up(luma), 0, 255).astype(np.uint8)


def luma_plane(img: np.ndarray) -> np.ndarray:
    """The gray working plane of an image: itself if gray, BT.601 luma if color."""
    ensure_image(img)
    return to_luma(img) if is_color(img) else img
