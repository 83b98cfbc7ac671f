"""Benchmark harness: image x sigma x (16 binary baselines + proposed).

For each (sigma, seed) cell one noisy realization is drawn and every method
scores its extraction against the clean original (color pairs compare
lumas).  Aggregation is mean +/- sample std over seeds.  Emission covers a
per-seed CSV, a method-by-sigma PSNR table, per-method plot series, and a
rendered comparison figure.  All CSV output is byte-deterministic for a
given plan, regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fuzzyextract.imaging import NoiseSpec, add_gaussian_noise, luma_plane
from fuzzyextract.metrics import QualityReport
from fuzzyextract.pipeline import (
    DegenerateImageError,
    PipelineConfig,
    run_extraction,
)
from fuzzyextract.thresholding import ThresholdMethod, apply_threshold, threshold_all

PROPOSED_LABEL = "Proposed"

DEFAULT_SIGMAS = (15.0, 30.0, 45.0, 60.0, 75.0, 90.0)
DEFAULT_SEEDS = 10

RESULTS_HEADER = "image,method,sigma,seed,mse,mae,snr_db,psnr_db"


@dataclass(frozen=True)
class BenchPlan:
    """The full grid to run: images, noise levels, seeds, and methods."""

    images: tuple[tuple[str, np.ndarray], ...]
    sigmas: tuple[float, ...] = DEFAULT_SIGMAS
    seeds: int = DEFAULT_SEEDS
    methods: tuple[ThresholdMethod, ...] = tuple(ThresholdMethod)
    include_proposed: bool = True
    config: PipelineConfig = PipelineConfig()

    def __post_init__(self) -> None:
        if not self.images:
            raise ValueError("plan needs at least one image")
        if not self.sigmas:
            raise ValueError("sigma grid must be non-empty")
        if any(s < 0 for s in self.sigmas):
            raise ValueError("sigmas must be >= 0")
        if any(b <= a for a, b in zip(self.sigmas, self.sigmas[1:])):
            raise ValueError("sigma grid must be strictly increasing")
        if self.seeds < 1:
            raise ValueError("need at least one seed per cell")

    @property
    def labels(self) -> tuple[str, ...]:
        rows = tuple(m.value for m in self.methods)
        return rows + (PROPOSED_LABEL,) if self.include_proposed else rows


@dataclass(frozen=True)
class BenchRecord:
    """One scored cell: a method on one noisy realization of one image."""

    image: str
    method: str
    sigma: float
    seed: int
    report: QualityReport | None
    error: str | None = None


@dataclass
class BenchResult:
    plan: BenchPlan
    records: list[BenchRecord]
    _cells: dict[tuple[str, str, float], list[BenchRecord]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._cells = {}
        for rec in self.records:
            self._cells.setdefault((rec.image, rec.method, rec.sigma), []).append(rec)

    def cell(self, image: str, method: str, sigma: float) -> list[BenchRecord]:
        return self._cells.get((image, method, sigma), [])

    def aggregate(self, image: str, method: str, sigma: float) -> tuple[float, float, int]:
        """Mean and sample std of PSNR over the cell's successful seeds.

        Returns ``(nan, nan, 0)`` when every seed failed.
        """
        values = [r.report.psnr_db for r in self.cell(image, method, sigma) if r.report]
        if not values:
            return math.nan, math.nan, 0
        mean = float(np.mean(values))
        std = float(np.std(values, ddof=1)) if len(values) >= 2 else 0.0
        return mean, std, len(values)


def _fmt_sigma(sigma: float) -> str:
    return f"{sigma:g}"


def _run_cell(args) -> list[BenchRecord]:
    image_name, clean, sigma, seed, methods, include_proposed, config = args
    noisy = add_gaussian_noise(clean, NoiseSpec(sigma=sigma, seed=seed))
    gray_ref = luma_plane(clean)
    gray_noisy = luma_plane(noisy)
    thresholds = threshold_all(gray_noisy)

    records = []
    for method in methods:
        res = thresholds[method]
        if res.ok:
            binary = apply_threshold(gray_noisy, res.t)
            report = QualityReport.compare(gray_ref, binary)
            records.append(BenchRecord(image_name, method.value, sigma, seed, report))
        else:
            records.append(
                BenchRecord(image_name, method.value, sigma, seed, None, error=res.error)
            )
    if include_proposed:
        try:
            run = run_extraction(noisy, config)
            report = QualityReport.compare(clean, run.output)
            records.append(BenchRecord(image_name, PROPOSED_LABEL, sigma, seed, report))
        except DegenerateImageError as exc:
            records.append(
                BenchRecord(image_name, PROPOSED_LABEL, sigma, seed, None, error=str(exc))
            )
    return records


def run_bench(plan: BenchPlan, jobs: int = 1) -> BenchResult:
    """Execute every cell of the plan; deterministic for any ``jobs`` count.

    Per-cell failures (degenerate methods) are recorded, never fatal.
    """
    tasks = [
        (name, image, sigma, seed, plan.methods, plan.include_proposed, plan.config)
        for name, image in plan.images
        for sigma in plan.sigmas
        for seed in range(plan.seeds)
    ]
    if jobs <= 1:
        chunks = [_run_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_cell, tasks, chunksize=1))

    order = {label: i for i, label in enumerate(plan.labels)}
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=lambda r: (r.image, r.sigma, r.seed, order[r.method]))
    return BenchResult(plan=plan, records=records)


# ---------------------------------------------------------------------------
# Emission.
# ---------------------------------------------------------------------------


def results_csv(result: BenchResult) -> str:
    """Per-seed rows; failed cells carry ``nan`` metrics."""
    lines = [RESULTS_HEADER]
    for rec in result.records:
        if rec.report is not None:
            fields = rec.report.csv_fields()
        else:
            fields = ("nan", "nan", "nan", "nan")
        lines.append(
            f"{rec.image},{rec.method},{_fmt_sigma(rec.sigma)},{rec.seed},"
            + ",".join(fields)
        )
    return "\n".join(lines) + "\n"


def emit_table(result: BenchResult, image: str | None = None) -> str:
    """Method-by-sigma table of mean PSNR, 4 decimals, methods in row order."""
    image = _single_image(result, image)
    sigmas = result.plan.sigmas
    lines = ["method," + ",".join(_fmt_sigma(s) for s in sigmas)]
    for label in result.plan.labels:
        cells = []
        for sigma in sigmas:
            mean, _, n = result.aggregate(image, label, sigma)
            cells.append("nan" if n == 0 else f"{mean:.4f}")
        lines.append(f"{label}," + ",".join(cells))
    return "\n".join(lines) + "\n"


def emit_plotdata(result: BenchResult, image: str | None = None) -> dict[str, str]:
    """One (sigma, psnr) series per method, values identical to the table."""
    image = _single_image(result, image)
    series: dict[str, str] = {}
    for label in result.plan.labels:
        lines = ["sigma,psnr_db"]
        for sigma in result.plan.sigmas:
            mean, _, n = result.aggregate(image, label, sigma)
            value = "nan" if n == 0 else f"{mean:.4f}"
            lines.append(f"{_fmt_sigma(sigma)},{value}")
        series[label] = "\n".join(lines) + "\n"
    return series


def render_figure(result: BenchResult, path: str, image: str | None = None) -> None:
    """Line chart of mean PSNR vs sigma, one series per method."""
    from matplotlib.figure import Figure

    image = _single_image(result, image)
    sigmas = list(result.plan.sigmas)
    fig = Figure(figsize=(9.0, 5.5), dpi=140)
    ax = fig.add_subplot(111)
    for label in result.plan.labels:
        means = [result.aggregate(image, label, s)[0] for s in sigmas]
        if label == PROPOSED_LABEL:
            ax.plot(sigmas, means, color="black", lw=2.5, marker="o", label=label, zorder=5)
        else:
            ax.plot(sigmas, means, lw=1.0, alpha=0.8, label=label)
    ax.set_xlabel("noise sigma (intensity units)")
    ax.set_ylabel("mean PSNR (dB)")
    ax.set_title(f"PSNR vs Gaussian noise level: {image}")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7, ncol=2, loc="upper right")
    fig.tight_layout()
    fig.savefig(path)


def write_outputs(result: BenchResult, out_dir: str, figure: bool = True) -> list[str]:
    """Write results.csv, per-image tables, plot series, and the figure.

    Returns the written paths.  CSV bytes depend only on the plan.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "results.csv"
    path.write_text(results_csv(result), encoding="ascii")
    written.append(str(path))

    single = len(result.plan.images) == 1
    for name, _ in result.plan.images:
        table_path = out / ("table.csv" if single else f"table_{name}.csv")
        table_path.write_text(emit_table(result, name), encoding="ascii")
        written.append(str(table_path))

        series_dir = out / ("series" if single else f"series_{name}")
        series_dir.mkdir(exist_ok=True)
        for label, text in emit_plotdata(result, name).items():
            series_path = series_dir / f"{label}.csv"
            series_path.write_text(text, encoding="ascii")
            written.append(str(series_path))

        if figure:
            fig_path = out / ("psnr_comparison.png" if single else f"psnr_comparison_{name}.png")
            render_figure(result, str(fig_path), name)
            written.append(str(fig_path))
    return written


def _single_image(result: BenchResult, image: str | None) -> str:
    names = [name for name, _ in result.plan.images]
    if image is None:
        if len(names) != 1:
            raise ValueError(f"plan has {len(names)} images; pass one of {names}")
        return names[0]
    if image not in names:
        raise ValueError(f"unknown image {image!r}; plan has {names}")
    return image
