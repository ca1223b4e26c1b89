"""Command-line interface: detect, eval, synth, and bench subcommands.

Exit codes: 0 on success, 2 for usage or I/O problems, 3 for numerical
failures. The SG_LOG environment variable (error | info | debug) controls
log verbosity.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import pipeline, synth
from .common import ConfigurationError, NumericalError
from .imgio import load_image, save_gray_png, write_ftns
from .report import evaluate_batch, write_report

log = logging.getLogger("gtsal.cli")

_OVERRIDE_FLOATS = ("sigma", "epsilon", "lambda1", "lambda2", "alpha", "beta", "rho1", "rho2")


def _configure_logging() -> None:
    level_name = os.environ.get("SG_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        raise ValueError(f"SG_LOG must be one of {sorted(levels)}, got {level_name!r}")
    logging.basicConfig(level=levels[level_name], format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gtsal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="compute saliency maps for images")
    detect.add_argument("images", nargs="+", help="input PNG or binary PPM images")
    detect.add_argument("--out", help="output PNG path (single image only)")
    detect.add_argument("--out-dir", help="output directory (any number of images)")
    detect.add_argument("--config", help="JSON config file")
    detect.add_argument("--features", help="FTNS feature tensor path")
    detect.add_argument("--proposals", help="object proposal manifest JSON")
    detect.add_argument("--scales", type=int, nargs="+", help="superpixel counts")
    detect.add_argument("--init", choices=("half", "bd", "pos", "obj", "prior"))
    detect.add_argument("--T", type=int, dest="T", help="refinement rounds")
    for name in _OVERRIDE_FLOATS:
        detect.add_argument(f"--{name}", type=float)
    detect.add_argument("--float-out", help="also write the float map as FTNS")
    detect.add_argument("--jobs", type=int, default=1, help="parallel workers over images")

    ev = sub.add_parser("eval", help="score saliency maps against ground truth")
    ev.add_argument("map_dir", help="directory of saliency PNGs")
    ev.add_argument("gt_dir", help="directory of ground-truth PNGs (same filenames)")
    ev.add_argument("--out-dir", required=True, help="report output directory")
    ev.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    sy = sub.add_parser("synth", help="generate deterministic synthetic scenes")
    sy.add_argument("--kind", choices=synth.KINDS + ("all",), default="all")
    sy.add_argument("--out", required=True, help="output directory")
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--size", type=int, default=64)

    bench = sub.add_parser("bench", help="time the full pipeline on one image")
    bench.add_argument("image")
    bench.add_argument("--config", help="JSON config file")
    bench.add_argument("--scales", type=int, nargs="+")
    bench.add_argument("--repeat", type=int, default=1)
    return parser


def _resolve_config(args: argparse.Namespace) -> pipeline.PipelineConfig:
    cfg = pipeline.load_config(args.config) if args.config else pipeline.PipelineConfig()
    overrides = {name: getattr(args, name, None) for name in _OVERRIDE_FLOATS}
    overrides["scales"] = getattr(args, "scales", None)
    overrides["init"] = getattr(args, "init", None)
    overrides["T"] = getattr(args, "T", None)
    overrides["feature_tensor"] = getattr(args, "features", None)
    overrides["proposals"] = getattr(args, "proposals", None)
    return pipeline.with_overrides(cfg, **overrides)


def _detect_one(image_path: str, out_path: Path, float_out: str | None, cfg) -> dict:
    img = load_image(image_path)
    timings: dict[str, float] = {}
    start = time.perf_counter()
    result = pipeline.run_multiscale(img, cfg, timings=timings)
    timings["total"] = time.perf_counter() - start
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_gray_png(out_path, result.values)
    if float_out:
        write_ftns(float_out, result.values[:, :, None].astype(np.float32))
    return timings


def _print_timings(name: str, timings: dict) -> None:
    stages = " ".join(
        f"{k}={v:.2f}s" for k, v in timings.items() if k != "total"
    )
    print(f"{name}: total={timings['total']:.2f}s {stages}")


def cmd_detect(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    if args.out and len(args.images) > 1:
        raise ValueError("--out accepts a single image; use --out-dir for several")
    if not args.out and not args.out_dir:
        raise ValueError("one of --out or --out-dir is required")
    if args.float_out and len(args.images) > 1:
        raise ValueError("--float-out accepts a single image")

    jobs = []
    for image in args.images:
        if args.out:
            out_path = Path(args.out)
        else:
            out_path = Path(args.out_dir) / (Path(image).stem + ".png")
        jobs.append((image, out_path))

    if args.jobs > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [
                pool.submit(_detect_one, image, out_path, None, cfg)
                for image, out_path in jobs
            ]
            for (image, _), fut in zip(jobs, futures):
                _print_timings(image, fut.result())
    else:
        for image, out_path in jobs:
            timings = _detect_one(image, out_path, args.float_out, cfg)
            _print_timings(image, timings)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    report = evaluate_batch(args.map_dir, args.gt_dir)
    written = write_report(report, args.out_dir, plots=not args.no_plots)
    for path in written:
        log.info("wrote %s", path)
    print(f"images: {len(report.results)}")
    print(f"mean F (adaptive): {report.mean_f_adaptive:.4f}")
    print(f"mean AUC: {report.mean_auc:.4f}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.kind == "all":
        paths = synth.write_corpus(args.out, size=args.size, seed=args.seed)
    else:
        paths = [synth.write_scene(args.kind, args.out, size=args.size, seed=args.seed)]
    for img_path, gt_path in paths:
        print(f"{img_path} {gt_path}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = pipeline.load_config(args.config) if args.config else pipeline.PipelineConfig()
    if args.scales:
        cfg = pipeline.with_overrides(cfg, scales=args.scales)
    img = load_image(args.image)
    for run in range(args.repeat):
        timings: dict[str, float] = {}
        start = time.perf_counter()
        pipeline.run_multiscale(img, cfg, timings=timings)
        timings["total"] = time.perf_counter() - start
        _print_timings(f"run {run + 1}/{args.repeat}", timings)
    return 0


_COMMANDS = {"detect": cmd_detect, "eval": cmd_eval, "synth": cmd_synth, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    try:
        _configure_logging()
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except (ConfigurationError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
