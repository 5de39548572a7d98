"""Command line interface.

Subcommands: score, route, train, infer, bench, metrics, gen. Every
subcommand prints machine-parseable JSON on stdout and diagnostics on
stderr, and exits 0 only on full success. Non-finite floats are
serialized as strings ("inf", "-inf", "nan") since JSON has no literals
for them.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import statistics
import sys
import time

import numpy as np

from .image import load_png, save_png, split
from .metrics import compare
from .pipeline import demoire_dda, demoire_full, evaluate
from .prior import PriorConfig, score_grid
from .router import Thresholds, assign_groups, assignment_from_thresholds, dataset_thresholds
from .supernet import SupernetSpec, load_weights, save_weights, train_supernet
from .synthgen import gen_dataset, load_manifest

DEFAULT_PATCH = 512
DEFAULT_WIDTHS = "0.25,0.5,0.75"
DEFAULT_GROUPS = 3
DEFAULT_SIGMA = 5.0


def jsonable(value):
    """Recursively replace non-finite floats with JSON-safe strings."""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return value


def _emit(payload) -> None:
    print(json.dumps(jsonable(payload), indent=2))


def _parse_widths(text: str) -> tuple:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ValueError(f"could not parse width list: {text!r}") from None


def _parse_cutpoints(text: str) -> Thresholds:
    try:
        return Thresholds(tuple(float(part) for part in text.split(",")))
    except ValueError:
        raise ValueError(f"could not parse cutpoints: {text!r}") from None


def _resolve_threads(args) -> int:
    if args.threads is not None:
        value = args.threads
    else:
        value = int(os.environ.get("DDA_THREADS", "1"))
    if value < 1:
        raise ValueError("thread count must be at least 1")
    return value


def _add_patch_flags(parser) -> None:
    parser.add_argument("--patch-height", type=int, default=DEFAULT_PATCH, help="patch tile height")
    parser.add_argument("--patch-width", type=int, default=DEFAULT_PATCH, help="patch tile width")


def _add_routing_flags(parser) -> None:
    _add_patch_flags(parser)
    parser.add_argument("--widths", default=DEFAULT_WIDTHS, help="comma-separated subnet widths")
    parser.add_argument("--groups", type=int, default=None, help="group count (must equal width count)")
    parser.add_argument("--sigma", type=float, default=DEFAULT_SIGMA, help="prior Gaussian sigma")
    parser.add_argument(
        "--policy",
        choices=("per-image", "threshold"),
        default="per-image",
        help="per-image equal-count ranking or fixed dataset cutpoints",
    )
    parser.add_argument("--cutpoints", default=None, help="comma-separated score cutpoints for --policy threshold")
    parser.add_argument("--manifest", default=None, help="dataset manifest to derive cutpoints from")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default $DDA_THREADS or 1)")


def _routing_config(args):
    widths = _parse_widths(args.widths)
    groups = args.groups if args.groups is not None else len(widths)
    if groups != len(widths):
        raise ValueError(f"--groups {groups} does not match {len(widths)} widths")
    cfg = PriorConfig(gaussian_sigma=args.sigma)
    thresholds = None
    if args.policy == "threshold":
        if args.cutpoints is not None:
            thresholds = _parse_cutpoints(args.cutpoints)
        elif args.manifest is not None:
            scores = [e["score"] for e in load_manifest(args.manifest)]
            thresholds = dataset_thresholds(scores, groups)
        else:
            raise ValueError("--policy threshold needs --cutpoints or --manifest")
        if thresholds.num_groups != groups:
            raise ValueError(
                f"cutpoints define {thresholds.num_groups} groups, expected {groups}"
            )
    return widths, cfg, thresholds


def cmd_score(args) -> int:
    image = load_png(args.image)
    cfg = PriorConfig(gaussian_sigma=args.sigma)
    grid = split(image, args.patch_height, args.patch_width)
    scores = score_grid(image, grid, cfg)
    records = [
        {
            "index": i,
            "row": entry[0],
            "col": entry[1],
            "colorfulness": s.colorfulness,
            "frequency_mean": s.frequency_mean,
            "score": s.score,
        }
        for i, (entry, s) in enumerate(zip(grid.entries, scores))
    ]
    _emit(records)
    if args.heatmap:
        peak = max(s.score for s in scores)
        plane = np.zeros((grid.image_height, grid.image_width))
        for entry, s in zip(grid.entries, scores):
            r, c, th, tw = entry
            plane[r : r + th, c : c + tw] = s.score / peak if peak > 0 else 0.0
        save_png(np.repeat(plane[:, :, None], 3, axis=2), args.heatmap)
        print(f"wrote heatmap: {args.heatmap}", file=sys.stderr)
    return 0


def cmd_route(args) -> int:
    image = load_png(args.image)
    widths, cfg, thresholds = _routing_config(args)
    grid = split(image, args.patch_height, args.patch_width)
    scores = [s.score for s in score_grid(image, grid, cfg)]
    if args.policy == "per-image":
        assignment = assign_groups(scores, widths)
    else:
        assignment = assignment_from_thresholds(scores, thresholds, widths)
    records = [
        {
            "patch_index": i,
            "row": grid.entries[i][0],
            "col": grid.entries[i][1],
            "score": scores[i],
            "rank": assignment.rank_of[i],
            "group": assignment.group_of[i],
            "width": assignment.width_of(i),
        }
        for i in range(grid.n_patches)
    ]
    _emit(records)
    return 0


def cmd_train(args) -> int:
    widths, _, thresholds = _routing_config(args)
    spec = SupernetSpec(
        num_layers=args.layers,
        base_channels=args.channels,
        kernel_size=args.kernel_size,
        residual=not args.no_residual,
    )
    dtype = np.float64 if args.dtype == "float64" else np.float32
    log_path = args.log if args.log is not None else args.out + ".log"
    weights, history = train_supernet(
        args.manifest,
        spec,
        widths,
        thresholds=thresholds,
        epochs=args.epochs,
        seed=args.seed,
        lr=args.lr,
        batch_size=args.batch_size,
        dtype=dtype,
        log_path=log_path,
    )
    save_weights(weights, args.out)
    _emit(
        {
            "weights": args.out,
            "log": log_path,
            "epochs": args.epochs,
            "log_entries": len(history),
            "final_mean_loss": history[-1]["mean_loss"] if history else None,
        }
    )
    return 0


def cmd_infer(args) -> int:
    image = load_png(args.image)
    weights = load_weights(args.weights)
    widths, cfg, thresholds = _routing_config(args)
    threads = _resolve_threads(args)
    if args.full:
        restored, report = demoire_full(image, weights, args.patch_height, args.patch_width, threads)
    else:
        restored, report, _ = demoire_dda(
            image,
            weights,
            widths,
            args.patch_height,
            args.patch_width,
            cfg,
            args.policy,
            thresholds,
            threads,
        )
    save_png(restored, args.out)
    print(f"wrote restored image: {args.out}", file=sys.stderr)
    _emit(report.to_dict())
    return 0


def cmd_bench(args) -> int:
    if args.repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    image = load_png(args.image)
    weights = load_weights(args.weights)
    widths, cfg, thresholds = _routing_config(args)
    threads = _resolve_threads(args)

    def timed(run):
        samples = []
        result = None
        for _ in range(args.repetitions):
            start = time.perf_counter()
            result = run()
            samples.append(time.perf_counter() - start)
        return samples, result

    full_times, (_, full_report) = timed(
        lambda: demoire_full(image, weights, args.patch_height, args.patch_width, threads)
    )
    dda_times, (_, dda_report, _) = timed(
        lambda: demoire_dda(
            image,
            weights,
            widths,
            args.patch_height,
            args.patch_width,
            cfg,
            args.policy,
            thresholds,
            threads,
        )
    )
    _emit(
        {
            "repetitions": args.repetitions,
            "full": {
                "median_seconds": statistics.median(full_times),
                "min_seconds": min(full_times),
                "report": full_report.to_dict(),
            },
            "dda": {
                "median_seconds": statistics.median(dda_times),
                "min_seconds": min(dda_times),
                "report": dda_report.to_dict(),
            },
        }
    )
    return 0


def cmd_metrics(args) -> int:
    result = compare(load_png(args.image_a), load_png(args.image_b))
    _emit({"psnr_db": result.psnr_db, "ssim": result.ssim, "delta_e": result.delta_e})
    return 0


def cmd_gen(args) -> int:
    manifest = gen_dataset(
        args.n,
        args.seed,
        args.patch_height,
        args.patch_width,
        args.out_dir,
        moire_free_rate=args.moire_free_rate,
    )
    _emit({"manifest": manifest, "pairs": args.n})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dda",
        description="Adaptive demoireing: score patches, route them to width-sliced subnets, account FLOPs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score an image's patches with the moire prior")
    p.add_argument("image")
    _add_patch_flags(p)
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--heatmap", default=None, help="write a normalized score heatmap PNG here")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("route", help="assign patches to width groups")
    p.add_argument("image")
    _add_routing_flags(p)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("train", help="train a supernet on a generated dataset")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output weights file")
    p.add_argument("--log", default=None, help="JSON-lines training log (default: <out>.log)")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--layers", type=int, default=6)
    p.add_argument("--channels", type=int, default=32)
    p.add_argument("--kernel-size", type=int, default=3)
    p.add_argument("--no-residual", action="store_true")
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dtype", choices=("float32", "float64"), default="float32")
    _add_routing_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="demoire an image")
    p.add_argument("image")
    p.add_argument("weights")
    p.add_argument("--out", required=True, help="output PNG")
    p.add_argument("--full", action="store_true", help="run every patch at full width")
    _add_routing_flags(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("bench", help="time the full and adaptive paths")
    p.add_argument("image")
    p.add_argument("weights")
    p.add_argument("--repetitions", type=int, default=3)
    _add_routing_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("metrics", help="PSNR/SSIM/deltaE between two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("gen", help="generate a synthetic (clean, moire) dataset")
    p.add_argument("n", type=int)
    p.add_argument("seed", type=int)
    p.add_argument("out_dir")
    p.add_argument("--patch-height", type=int, default=64)
    p.add_argument("--patch-width", type=int, default=64)
    p.add_argument("--moire-free-rate", type=float, default=0.2)
    p.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # argparse handles its own errors; this is the I/O boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
