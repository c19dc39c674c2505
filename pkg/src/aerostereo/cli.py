"""Command-line interface.

Subcommands:
  run    match one stereo pair and write the disparity as PFM
  eval   compare an estimated disparity file against ground truth
  bench  sweep methods over a dataset manifest and emit reports
  synth  generate a synthetic scene (images + exact ground truth + manifest)

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback

import numpy as np
from PIL import Image

from .bench import (
    METHODS,
    ManifestError,
    RunConfig,
    eval_single,
    parse_manifest,
    run_benchmark,
)
from .costs import CostParams
from .image import (
    CorruptDataError,
    ImageFormatError,
    load_gray_image,
    write_disparity,
)
from .metrics import DEFAULT_BMP_THRESHOLDS
from .patchmatch import PatchMatchConfig
from .postproc import PostprocConfig
from .sgbm import SgbmConfig
from .synthetic import KINDS, generate_synthetic

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract wants 1
        raise _UsageError(message)


def _add_method_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--num-disparities", type=int, default=96, help="disparity search range")
    sub.add_argument("--window", type=int, default=2, help="cost window radius")
    sub.add_argument("--lambda-ad", type=float, default=10.0)
    sub.add_argument("--lambda-census", type=float, default=30.0)
    sub.add_argument("--p1", type=float, default=None, help="small-step penalty (default: per cost function)")
    sub.add_argument("--p2", type=float, default=None, help="jump penalty (default: per cost function)")
    sub.add_argument("--paths", type=int, choices=(4, 8), default=8, help="aggregation path count")
    sub.add_argument("--uniqueness", type=float, default=10.0, help="WTA uniqueness margin %% (0 disables)")
    sub.add_argument("--no-subpixel", action="store_true", help="disable parabola subpixel refinement")
    sub.add_argument("--iterations", type=int, default=1, help="PatchMatch iterations")
    sub.add_argument("--pm-window", type=int, default=10, help="PatchMatch support window radius")
    sub.add_argument("--census-radius", type=int, default=2, help="census window radius")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--lr-threshold", type=float, default=1.0)
    sub.add_argument("--speckle-size", type=int, default=100)
    sub.add_argument("--speckle-tolerance", type=float, default=1.0)
    sub.add_argument("--median-radius", type=int, default=1)
    sub.add_argument("--wm-gamma", type=float, default=10.0, help="weighted-median intensity scale")


def _run_config(method: str, args) -> RunConfig:
    cost = CostParams(
        num_disparities=args.num_disparities,
        window_radius=args.window,
        lambda_ad=args.lambda_ad,
        lambda_census=args.lambda_census,
    )
    sgbm = SgbmConfig(
        p1=args.p1,
        p2=args.p2,
        num_paths=args.paths,
        subpixel=not args.no_subpixel,
        uniqueness_ratio=args.uniqueness,
    )
    post = PostprocConfig(
        lr_threshold=args.lr_threshold,
        speckle_max_size=args.speckle_size,
        speckle_tolerance=args.speckle_tolerance,
        median_radius=args.median_radius,
        weighted_median_gamma=args.wm_gamma,
    )
    pm = PatchMatchConfig(
        d_max=float(args.num_disparities),
        window_radius=args.pm_window,
        iterations=args.iterations,
        seed=args.seed,
        census_radius=args.census_radius,
    )
    kwargs = {}
    if hasattr(args, "normalize"):
        kwargs["target_max"] = args.normalize
    if hasattr(args, "bmp_thresholds") and args.bmp_thresholds:
        kwargs["bmp_thresholds"] = tuple(args.bmp_thresholds)
    if hasattr(args, "ssim_window"):
        kwargs["ssim_window"] = args.ssim_window
    return RunConfig(method=method, cost=cost, sgbm=sgbm, post=post, patchmatch=pm, **kwargs)


def _parse_thresholds(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise _UsageError(f"--bmp-thresholds: cannot parse {text!r}") from exc
    if not values:
        raise _UsageError("--bmp-thresholds: empty list")
    return values


def build_parser() -> _Parser:
    parser = _Parser(prog="aerostereo", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = commands.add_parser("run", help="match one stereo pair")
    run.add_argument("--left", required=True)
    run.add_argument("--right", required=True)
    run.add_argument("--method", required=True, choices=METHODS)
    run.add_argument("-o", "--output", required=True, help="output PFM path")
    _add_method_options(run)

    ev = commands.add_parser("eval", help="evaluate an estimate against ground truth")
    ev.add_argument("--estimate", required=True)
    ev.add_argument("--gt", required=True)
    ev.add_argument("--normalize", type=float, default=None,
                    help="also report metrics after min-max normalization to this bound")
    ev.add_argument("--bmp-thresholds", type=_parse_thresholds,
                    default=list(DEFAULT_BMP_THRESHOLDS))
    ev.add_argument("--ssim-window", type=int, default=8)
    ev.add_argument("--estimate-divisor", type=float, default=None, help="divisor for 16-bit PNG estimates")
    ev.add_argument("--gt-divisor", type=float, default=None, help="divisor for 16-bit PNG ground truth")

    bench = commands.add_parser("bench", help="run a manifest sweep")
    bench.add_argument("--manifest", required=True)
    bench.add_argument("--methods", default="all", help="'all' or comma list of methods")
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--strict-timing", action="store_true",
                       help="run entries sequentially so timings are uncontended")
    bench.add_argument("-o", "--output", required=True, help="report directory")
    bench.add_argument("--normalize", type=float, default=75.0, help="normalization bound for the report")
    bench.add_argument("--bmp-thresholds", type=_parse_thresholds, default=list(DEFAULT_BMP_THRESHOLDS))
    bench.add_argument("--ssim-window", type=int, default=8)
    _add_method_options(bench)

    synth = commands.add_parser("synth", help="generate a synthetic scene")
    synth.add_argument("--kind", required=True, choices=KINDS)
    synth.add_argument("--size", required=True, help="WxH, e.g. 64x64")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("-o", "--output", required=True, help="output directory")
    synth.add_argument("--disparity", type=float, default=7.0, help="random-dot disparity")
    synth.add_argument("--levels", default="5,12", help="two-level disparities, e.g. 5,12")
    synth.add_argument("--ramp", default="2,0.1", help="slanted-ramp offset,slope")

    return parser


def _cmd_run(args) -> int:
    config = _run_config(args.method, args)
    left = load_gray_image(args.left)
    right = load_gray_image(args.right)
    disp = config.matcher()(left, right)
    write_disparity(disp, args.output)
    print(f"wrote {args.output}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    result = eval_single(
        args.estimate,
        args.gt,
        normalize_to=args.normalize,
        thresholds=tuple(args.bmp_thresholds),
        ssim_window=args.ssim_window,
        estimate_divisor=args.estimate_divisor,
        gt_divisor=args.gt_divisor,
    )
    json.dump(result, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def _cmd_bench(args) -> int:
    manifest = parse_manifest(args.manifest)
    for warning in manifest.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.methods.strip() == "all":
        methods = list(METHODS)
    else:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise _UsageError(f"unknown method(s): {', '.join(unknown)}")
    configs = [_run_config(m, args) for m in methods]
    report = run_benchmark(
        manifest,
        configs,
        args.output,
        workers=args.workers,
        strict_timing=args.strict_timing,
    )
    n_ok = len(report["entries"])
    n_bad = len(report["failures"])
    print(f"evaluated {n_ok} (entry, method) pairs into {args.output} ({n_bad} failures)")
    return EXIT_OK


def _cmd_synth(args) -> int:
    try:
        w_str, h_str = args.size.lower().split("x")
        width, height = int(w_str), int(h_str)
    except ValueError as exc:
        raise _UsageError(f"--size: expected WxH, got {args.size!r}") from exc
    if args.kind == "random-dot":
        params = {"disparity": args.disparity}
    elif args.kind == "two-level":
        d_left, d_right = (float(v) for v in args.levels.split(","))
        params = {"d_left": d_left, "d_right": d_right}
    else:
        offset, slope = (float(v) for v in args.ramp.split(","))
        params = {"offset": offset, "slope": slope}
    left, right, gt = generate_synthetic(args.kind, width, height, params, seed=args.seed)

    os.makedirs(args.output, exist_ok=True)
    for name, img in (("left.png", left), ("right.png", right)):
        Image.fromarray(img.astype(np.uint8)).save(os.path.join(args.output, name))
    write_disparity(gt, os.path.join(args.output, "gt.pfm"))
    manifest = {
        "dataset": f"synthetic-{args.kind}",
        "categories": [args.kind],
        "entries": [
            {
                "left": "left.png",
                "right": "right.png",
                "gt": "gt.pfm",
                "gt_format": "pfm",
                "category": args.kind,
            }
        ],
    }
    with open(os.path.join(args.output, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote left.png right.png gt.pfm manifest.json to {args.output}")
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "eval": _cmd_eval, "bench": _cmd_bench, "synth": _cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, ImageFormatError, CorruptDataError, ManifestError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:  # anything else is an internal failure
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
