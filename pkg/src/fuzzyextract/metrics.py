"""Image quality metrics: MSE, MAE, SNR, PSNR, with the luma convention for
color pairs.

All arithmetic runs in double precision.  A zero MSE yields an explicit
infinity marker (``math.inf``), serialized as the literal string ``inf`` so
no non-finite float leaks into CSV output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fuzzyextract.imaging import ensure_image, is_color, to_luma

R_PEAK = 255.0

INFINITY_DB = math.inf


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    ensure_image(a)
    ensure_image(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared pixel difference."""
    _check_pair(a, b)
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(d * d))


def mae(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute pixel difference."""
    _check_pair(a, b)
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(np.abs(d)))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10 log10(255^2 / MSE) in dB; the infinity marker when MSE is 0."""
    m = mse(a, b)
    if m == 0:
        return INFINITY_DB
    return 10.0 * math.log10(R_PEAK * R_PEAK / m)


def psnr_color(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR of the luma planes (the eye weighs intensity, G most of all)."""
    _check_pair(a, b)
    if not (is_color(a) and is_color(b)):
        raise ValueError("psnr_color expects two color images")
    return psnr(to_luma(a), to_luma(b))


def snr(a: np.ndarray, b: np.ndarray) -> float:
    """10 log10(signal power / MSE) with ``a`` as the reference signal."""
    _check_pair(a, b)
    power = float(np.mean(a.astype(np.float64) ** 2))
    if power == 0:
        raise ValueError("SNR undefined for an all-zero reference")
    m = mse(a, b)
    if m == 0:
        return INFINITY_DB
    return 10.0 * math.log10(power / m)


def format_db(value: float) -> str:
    """CSV rendering of a dB value; infinities become the literal ``inf``."""
    if math.isinf(value):
        return "inf"
    return repr(value)


@dataclass(frozen=True)
class QualityReport:
    """MSE/MAE/SNR/PSNR bundle for one reference/test pair."""

    mse: float
    mae: float
    snr_db: float
    psnr_db: float
    r_peak: float = R_PEAK

    @classmethod
    def compare(cls, reference: np.ndarray, test: np.ndarray) -> "QualityReport":
        """Score ``test`` against ``reference``; color pairs compare lumas."""
        _check_pair(reference, test)
        if is_color(reference) != is_color(test):
            raise ValueError("cannot compare a gray image with a color image")
        if is_color(reference):
            reference, test = to_luma(reference), to_luma(test)
        return cls(
            mse=mse(reference, test),
            mae=mae(reference, test),
            snr_db=snr(reference, test),
            psnr_db=psnr(reference, test),
        )

    def csv_fields(self) -> tuple[str, str, str, str]:
        return (repr(self.mse), repr(self.mae), format_db(self.snr_db), format_db(self.psnr_db))
