"""Fuzzy rule based image extraction.

A noisy image is segmented by a suite of 16 classic histogram auto-threshold
methods; per-pixel features (color, local mean, local spread, threshold
votes) seed a data-driven Mamdani rule base that reconstructs a clean
estimate of the image.  A benchmark harness compares the reconstruction
against each binary thresholding baseline with MSE/MAE/SNR/PSNR over a grid
of Gaussian noise levels.
"""

from fuzzyextract.imaging import (
    NoiseSpec,
    add_gaussian_noise,
    read_image,
    to_luma,
    write_image,
)
from fuzzyextract.thresholding import (
    ThresholdMethod,
    ThresholdResult,
    apply_threshold,
    compute_threshold,
    histogram,
    threshold_all,
)
from fuzzyextract.metrics import QualityReport, mae, mse, psnr, psnr_color, snr
from fuzzyextract.pipeline import PipelineConfig, run_baseline, run_extraction

__version__ = "0.1.0"

__all__ = [
    "NoiseSpec",
    "PipelineConfig",
    "QualityReport",
    "ThresholdMethod",
    "ThresholdResult",
    "add_gaussian_noise",
    "apply_threshold",
    "compute_threshold",
    "histogram",
    "mae",
    "mse",
    "psnr",
    "psnr_color",
    "read_image",
    "run_baseline",
    "run_extraction",
    "snr",
    "threshold_all",
    "to_luma",
    "write_image",
]
