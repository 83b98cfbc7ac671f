"""End-to-end extraction: noisy image in, reconstructed image out.

Stages, in order: threshold suite on the luma plane; per-pixel features;
fuzzy partitions (threshold values anchor the intensity partition when
anchor mode is on); self-supervised rule learning; per-pixel Mamdani
inference with centroid defuzzification; image assembly.

Training targets come from the noisy input alone: each sampled pixel's
target is the local window mean over neighbors sharing its fused
majority-vote class, a denoised estimate that needs no clean reference.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import uniform_filter

from fuzzyextract.features import MAX_LOCAL_STD, fuse_decisions, local_stats, roi_masks
from fuzzyextract.fuzzy import (
    Partition,
    RuleBase,
    fuzzify_gaussian,
    generate_rules,
    infer_many,
    partition_universe,
)
from fuzzyextract.imaging import ensure_image, is_color, luma_plane, round_half_up
from fuzzyextract.thresholding import (
    DegenerateHistogramError,
    ThresholdMethod,
    ThresholdResult,
    apply_threshold,
    compute_threshold,
    histogram,
    threshold_all,
)

VARIABLE_UNIVERSES = {
    "intensity": (0.0, 255.0),
    "local_mean": (0.0, 255.0),
    "local_std": (0.0, MAX_LOCAL_STD),
}

FALLBACK_POLICIES = ("fused-mean",)


class DegenerateImageError(ValueError):
    """The image offers no class separation to build a rule base from."""


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs of the extraction pipeline.

    ``fuzzifier=None`` means auto: half the intensity standard deviation of
    the luma plane.  ``anchor_mode`` places the intensity partition's peaks
    at the distinct computed thresholds instead of spacing them uniformly.
    The only fallback policy, ``fused-mean``, paints pixels where no rule
    fires with their local mean if the fused vote says foreground and with 0
    otherwise.
    """

    window: int = 3
    fuzzifier: float | None = None
    variables: tuple[str, ...] = ("intensity", "local_mean", "local_std")
    region_counts: tuple[int, ...] = (15, 15, 7)
    output_regions: int = 15
    anchor_mode: bool = True
    sample_stride: int = 4
    fallback: str = "fused-mean"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError(f"window must be odd and >= 1, got {self.window}")
        if self.fuzzifier is not None and self.fuzzifier <= 0:
            raise ValueError(f"fuzzifier must be > 0, got {self.fuzzifier}")
        if not self.variables:
            raise ValueError("at least one input variable is required")
        unknown = [v for v in self.variables if v not in VARIABLE_UNIVERSES]
        if unknown:
            raise ValueError(f"unknown variables {unknown}; choose from {sorted(VARIABLE_UNIVERSES)}")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variables")
        if len(self.region_counts) != len(self.variables):
            raise ValueError("region_counts must match variables")
        if any(k < 2 for k in self.region_counts) or self.output_regions < 2:
            raise ValueError("every region count must be >= 2")
        if self.sample_stride < 1:
            raise ValueError(f"sample_stride must be >= 1, got {self.sample_stride}")
        if self.fallback not in FALLBACK_POLICIES:
            raise ValueError(f"unknown fallback policy {self.fallback!r}")

    # -- flat key=value text form ------------------------------------------

    def to_text(self) -> str:
        fuzz = "auto" if self.fuzzifier is None else repr(self.fuzzifier)
        return (
            f"window = {self.window}\n"
            f"fuzzifier = {fuzz}\n"
            f"variables = {','.join(self.variables)}\n"
            f"regions = {','.join(str(k) for k in self.region_counts)}\n"
            f"output_regions = {self.output_regions}\n"
            f"anchors = {'on' if self.anchor_mode else 'off'}\n"
            f"sample_stride = {self.sample_stride}\n"
            f"fallback = {self.fallback}\n"
            f"seed = {self.seed}\n"
        )

    @classmethod
    def from_text(cls, text: str) -> "PipelineConfig":
        cfg = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (s.strip() for s in line.partition("="))
            if not sep or not key:
                raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
            try:
                cfg = cfg._with(key, value)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        return cfg

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def _with(self, key: str, value: str) -> "PipelineConfig":
        if key == "window":
            return replace(self, window=int(value))
        if key == "fuzzifier":
            return replace(self, fuzzifier=None if value == "auto" else float(value))
        if key == "variables":
            return replace(self, variables=tuple(v.strip() for v in value.split(",")))
        if key == "regions":
            return replace(self, region_counts=tuple(int(v) for v in value.split(",")))
        if key == "output_regions":
            return replace(self, output_regions=int(value))
        if key == "anchors":
            if value not in ("on", "off"):
                raise ValueError(f"anchors must be on/off, got {value!r}")
            return replace(self, anchor_mode=value == "on")
        if key == "sample_stride":
            return replace(self, sample_stride=int(value))
        if key == "fallback":
            return replace(self, fallback=value)
        if key == "seed":
            return replace(self, seed=int(value))
        raise ValueError(f"unknown config key {key!r}")


@dataclass
class ExtractionRun:
    """Everything one pipeline invocation produced."""

    output: np.ndarray
    config: PipelineConfig
    rule_base: RuleBase
    thresholds: dict[ThresholdMethod, ThresholdResult]
    anchors: tuple[int, ...] | None
    fuzzifier: float
    envelope_mean: float
    fallback_pixels: int
    timings: dict[str, float] = field(default_factory=dict)

    SUMMARY_HEADER = (
        "height,width,color,window,variables,rules,anchors,fuzzifier,"
        "fallback_pixels,seconds_total"
    )

    def summary_csv_row(self) -> str:
        h, w = self.output.shape[:2]
        anchors = "-" if self.anchors is None else ";".join(str(a) for a in self.anchors)
        return (
            f"{h},{w},{'yes' if is_color(self.output) else 'no'},{self.config.window},"
            f"{';'.join(self.config.variables)},{len(self.rule_base)},{anchors},"
            f"{self.fuzzifier:.4f},{self.fallback_pixels},{self.timings.get('total', 0.0):.3f}"
        )


def class_conditional_means(
    gray: np.ndarray, fg_mask: np.ndarray, window: int
) -> np.ndarray:
    """Window mean over the neighbors sharing each pixel's mask class.

    Edge handling matches :func:`local_stats` (replication).  The pixel
    itself is in its own class, so the denominator is never zero.
    """
    f = gray.astype(np.float64)
    fg = fg_mask.astype(np.float64)
    num_fg = uniform_filter(f * fg, size=window, mode="nearest")
    den_fg = uniform_filter(fg, size=window, mode="nearest")
    num_bg = uniform_filter(f * (1.0 - fg), size=window, mode="nearest")
    den_bg = uniform_filter(1.0 - fg, size=window, mode="nearest")
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_fg = np.where(den_fg > 0, num_fg / np.where(den_fg > 0, den_fg, 1.0), 0.0)
        mean_bg = np.where(den_bg > 0, num_bg / np.where(den_bg > 0, den_bg, 1.0), 0.0)
    return np.clip(np.where(fg_mask, mean_fg, mean_bg), 0.0, 255.0)


def _build_partitions(
    cfg: PipelineConfig, anchors: tuple[int, ...] | None
) -> tuple[tuple[Partition, ...], Partition]:
    parts = []
    for name, k in zip(cfg.variables, cfg.region_counts):
        lo, hi = VARIABLE_UNIVERSES[name]
        if name == "intensity" and anchors is not None:
            parts.append(partition_universe(lo, hi, anchors=anchors, name=name))
        else:
            parts.append(partition_universe(lo, hi, k=k, name=name))
    out = partition_universe(0.0, 255.0, k=cfg.output_regions, name="brightness")
    return tuple(parts), out


def _plane_stack(planes: dict[str, np.ndarray], variables: tuple[str, ...]) -> np.ndarray:
    return np.stack([planes[v].ravel() for v in variables], axis=1)


def run_extraction(noisy: np.ndarray, cfg: PipelineConfig | None = None) -> ExtractionRun:
    """Reconstruct a clean estimate of ``noisy``; deterministic per (image, cfg).

    Color input trains the rule base on luma once and applies it per channel,
    with the channel's own value/mean/spread standing in for the luma
    features.  Raises :class:`DegenerateImageError` when no threshold can
    separate two classes (for example on a constant image).
    """
    ensure_image(noisy)
    cfg = cfg or PipelineConfig()
    timings: dict[str, float] = {}
    t_start = time.perf_counter()

    gray = luma_plane(noisy)
    if len(np.flatnonzero(histogram(gray))) < 2:
        raise DegenerateImageError("single-intensity image: no class separation possible")

    t0 = time.perf_counter()
    thresholds = threshold_all(gray)
    usable = [res for res in thresholds.values() if res.ok]
    timings["thresholds"] = time.perf_counter() - t0
    if not usable:
        raise DegenerateImageError("every thresholding method is degenerate on this image")

    t0 = time.perf_counter()
    fuzzifier = cfg.fuzzifier if cfg.fuzzifier is not None else float(gray.std()) / 2.0
    envelope = fuzzify_gaussian(gray, fuzzifier)
    envelope_mean = float(envelope.mean())

    mean, std = local_stats(gray, cfg.window)
    fused = fuse_decisions(roi_masks(gray, thresholds))
    targets = class_conditional_means(gray, fused.mask, cfg.window)
    timings["features"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    anchors: tuple[int, ...] | None = None
    if cfg.anchor_mode:
        anchors = tuple(sorted({res.t for res in usable}))
    parts, out_part = _build_partitions(cfg, anchors)

    stride = cfg.sample_stride
    planes = {"intensity": gray.astype(np.float64), "local_mean": mean, "local_std": std}
    sample = (slice(None, None, stride), slice(None, None, stride))
    X = np.stack([planes[v][sample].ravel() for v in cfg.variables], axis=1)
    y = targets[sample].ravel()
    rule_base = generate_rules(X, y, parts, out_part)
    timings["rules"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if is_color(noisy):
        channels = [noisy[..., i] for i in range(3)]
    else:
        channels = [noisy]
    out_planes = []
    fallback_pixels = 0
    for ch in channels:
        if ch is gray:
            ch_mean, ch_std = mean, std
        else:
            ch_mean, ch_std = local_stats(ch, cfg.window)
        ch_planes = {
            "intensity": ch.astype(np.float64),
            "local_mean": ch_mean,
            "local_std": ch_std,
        }
        values, fired = infer_many(rule_base, _plane_stack(ch_planes, cfg.variables))
        fallback = np.where(fused.mask.ravel(), round_half_up(ch_mean.ravel()), 0.0)
        merged = np.where(fired, round_half_up(values), fallback)
        fallback_pixels += int(np.count_nonzero(~fired))
        out_planes.append(np.clip(merged, 0, 255).astype(np.uint8).reshape(ch.shape))
    timings["inference"] = time.perf_counter() - t0

    output = np.stack(out_planes, axis=-1) if is_color(noisy) else out_planes[0]
    timings["total"] = time.perf_counter() - t_start
    return ExtractionRun(
        output=output,
        config=cfg,
        rule_base=rule_base,
        thresholds=thresholds,
        anchors=anchors,
        fuzzifier=fuzzifier,
        envelope_mean=envelope_mean,
        fallback_pixels=fallback_pixels,
        timings=timings,
    )


def run_baseline(noisy: np.ndarray, method: ThresholdMethod) -> np.ndarray:
    """The binary extraction a single thresholding method produces.

    Raises :class:`DegenerateHistogramError` when the method is degenerate
    on this image.
    """
    ensure_image(noisy)
    gray = luma_plane(noisy)
    res = compute_threshold(histogram(gray), method)
    return apply_threshold(gray, res.t)
