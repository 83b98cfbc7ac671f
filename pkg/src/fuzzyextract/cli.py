"""Command line front end.

Subcommands: ``bench run``, ``extract``, ``threshold``, ``metrics``,
``testimage``.  Every failure exits nonzero after printing a single
machine-readable JSON line ``{"error": "..."}`` to stderr.  The only
environment variable honored is ``FUZZYEXTRACT_OUT`` (default output
directory for ``bench run``).

``--image synthetic`` anywhere a path is expected substitutes the shipped
procedural 256x256 color test texture.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from fuzzyextract import bench as bench_mod
from fuzzyextract.features import extract_features, write_features_csv
from fuzzyextract.fuzzy import serialize_rule_base
from fuzzyextract.imaging import is_color, read_image, write_image
from fuzzyextract.metrics import QualityReport
from fuzzyextract.pipeline import ExtractionRun, PipelineConfig, run_extraction
from fuzzyextract.testimage import synthetic_baboon
from fuzzyextract.thresholding import (
    ThresholdMethod,
    ThresholdResult,
    compute_threshold,
    histogram,
    thresholds_to_csv,
)

OUT_ENV = "FUZZYEXTRACT_OUT"

SYNTHETIC_NAME = "synthetic"


class CliError(Exception):
    pass


def _load_image(spec: str) -> tuple[str, np.ndarray]:
    if spec == SYNTHETIC_NAME:
        return SYNTHETIC_NAME, synthetic_baboon()
    name = os.path.splitext(os.path.basename(spec))[0]
    return name, read_image(spec)


def _parse_sigmas(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(s) for s in text.split(","))
    except ValueError:
        raise CliError(f"cannot parse sigma list {text!r}") from None


def _load_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return PipelineConfig.from_file(path)


def _cmd_bench_run(args) -> int:
    out_dir = args.out or os.environ.get(OUT_ENV)
    if not out_dir:
        raise CliError(f"--out is required (or set {OUT_ENV})")
    name, image = _load_image(args.image)
    plan = bench_mod.BenchPlan(
        images=((name, image),),
        sigmas=_parse_sigmas(args.sigmas),
        seeds=args.seeds,
        config=_load_config(args.config),
    )
    result = bench_mod.run_bench(plan, jobs=args.jobs)
    written = bench_mod.write_outputs(result, out_dir, figure=not args.no_figure)
    for path in written:
        print(path)
    return 0


def _cmd_extract(args) -> int:
    _, image = _load_image(args.image)
    cfg = _load_config(args.config)
    run: ExtractionRun = run_extraction(image, cfg)
    write_image(run.output, args.out)
    if args.save_rules:
        with open(args.save_rules, "w", encoding="ascii") as fh:
            fh.write(serialize_rule_base(run.rule_base))
    if args.dump_features:
        planes = extract_features(image, run.thresholds, cfg.window)
        write_features_csv(planes, args.dump_features)
    print(ExtractionRun.SUMMARY_HEADER)
    print(run.summary_csv_row())
    return 0


def _cmd_threshold(args) -> int:
    _, image = _load_image(args.image)
    gray = image if not is_color(image) else None
    if gray is None:
        from fuzzyextract.imaging import to_luma

        gray = to_luma(image)
    hist = histogram(gray)
    if args.method == "all":
        from fuzzyextract.thresholding import threshold_all

        print(thresholds_to_csv(threshold_all(gray)), end="")
        return 0
    method = ThresholdMethod.from_name(args.method)
    res: ThresholdResult = compute_threshold(hist, method)
    print("method,t,converged")
    print(f"{method.value},{res.t},{'true' if res.converged else 'false'}")
    return 0


def _cmd_metrics(args) -> int:
    _, ref = _load_image(args.ref)
    _, test = _load_image(args.test)
    report = QualityReport.compare(ref, test)
    print("mse,mae,snr_db,psnr_db")
    print(",".join(report.csv_fields()))
    return 0


def _cmd_testimage(args) -> int:
    image = synthetic_baboon(size=args.size)
    write_image(image, args.out)
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzyextract",
        description="Fuzzy rule based image extraction and threshold benchmarking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="benchmark grid commands")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)
    run = bench_sub.add_parser("run", help="run the image x sigma x method grid")
    run.add_argument("--image", required=True, help=f"input image path or '{SYNTHETIC_NAME}'")
    run.add_argument("--sigmas", default="15,30,45,60,75,90", help="comma-separated noise levels")
    run.add_argument("--seeds", type=int, default=10, help="noise realizations per cell")
    run.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV})")
    run.add_argument("--config", default=None, help="pipeline config file (key = value lines)")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run.add_argument("--no-figure", action="store_true", help="skip the rendered PNG chart")
    run.set_defaults(func=_cmd_bench_run)

    extract = sub.add_parser("extract", help="reconstruct a clean image from a noisy one")
    extract.add_argument("--image", required=True)
    extract.add_argument("--config", default=None)
    extract.add_argument("--out", required=True, help="output image path (.pgm or .ppm)")
    extract.add_argument("--save-rules", default=None, help="write the learned rule base here")
    extract.add_argument("--dump-features", default=None, help="write the per-pixel feature CSV here")
    extract.set_defaults(func=_cmd_extract)

    threshold = sub.add_parser("threshold", help="compute automatic thresholds")
    threshold.add_argument("--image", required=True)
    threshold.add_argument(
        "--method",
        required=True,
        help="a method name (exact spelling, e.g. Otsu) or 'all'",
    )
    threshold.set_defaults(func=_cmd_threshold)

    metrics = sub.add_parser("metrics", help="score a test image against a reference")
    metrics.add_argument("--ref", required=True)
    metrics.add_argument("--test", required=True)
    metrics.set_defaults(func=_cmd_metrics)

    testimage = sub.add_parser("testimage", help="write the procedural test texture")
    testimage.add_argument("--out", required=True, help="output path (.ppm)")
    testimage.add_argument("--size", type=int, default=256)
    testimage.set_defaults(func=_cmd_testimage)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
