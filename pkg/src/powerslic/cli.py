"""Command line: segmentation runs, noise injection, dataset sweeps, upscaling.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 solver failure.
The ``eval`` sweep parallelizes over (method, k) cells; POWERSLIC_THREADS
caps the worker count (0 or unset = one per CPU). Results are byte-stable
across thread counts because every cell is pure and rows are emitted in a
fixed sort order.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import gbpd, image, metrics, pipeline
from .optimal import InfeasibleInstanceError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _worker_count():
    raw = os.environ.get("POWERSLIC_THREADS", "0").strip() or "0"
    try:
        v = int(raw)
    except ValueError:
        raise UsageError(f"POWERSLIC_THREADS must be an integer, got {raw!r}")
    return v if v > 0 else max(1, os.cpu_count() or 1)


def _build_parser():
    p = _Parser(prog="powerslic", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment one image")
    seg.add_argument("input", help="input RGB PNG")
    seg.add_argument("--method", required=True, choices=pipeline.METHODS)
    seg.add_argument("--k", type=int, required=True, help="target superpixel count")
    seg.add_argument("--m", type=float, default=10.0, help="compactness parameter")
    seg.add_argument("--sigma2", type=float, default=0.0, help="noise variance")
    seg.add_argument("--seed", type=int, default=0, help="noise seed")
    seg.add_argument("--max-iters", type=int, default=10)
    seg.add_argument(
        "--power-offset",
        action="store_true",
        help="subtract cell weights already in the main assignment pass",
    )
    seg.add_argument("--out", required=True, help="output 16-bit label PNG")
    seg.add_argument("--diagram", help="also write the diagram JSON (power/optimal)")
    seg.set_defaults(func=cmd_segment)

    noi = sub.add_parser("noise", help="write a noisy copy of an image")
    noi.add_argument("input")
    noi.add_argument("--sigma2", type=float, required=True)
    noi.add_argument("--seed", type=int, default=0)
    noi.add_argument("--out", required=True)
    noi.set_defaults(func=cmd_noise)

    ev = sub.add_parser("eval", help="sweep a dataset directory into a CSV")
    ev.add_argument("dataset", help="directory of input PNGs")
    ev.add_argument("--gt-dir", help="boundary maps foo.gt*.png (default: dataset)")
    ev.add_argument("--methods", default="slic,power,optimal", help="comma list")
    ev.add_argument("--k", required=True, help="comma list of superpixel counts")
    ev.add_argument("--sigma2", default="0", help="comma list of noise variances")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--m", type=float, default=10.0)
    ev.add_argument("--max-iters", type=int, default=10)
    ev.add_argument("--power-offset", action="store_true")
    ev.add_argument("--tol", type=int, default=2, help="boundary match tolerance")
    ev.add_argument("--csv", required=True, help="output CSV path")
    ev.set_defaults(func=cmd_eval)

    up = sub.add_parser("upscale", help="rasterize a stored diagram at a new scale")
    up.add_argument("diagram", help="diagram JSON file")
    up.add_argument("--factor", type=float, required=True)
    up.add_argument("--out", required=True, help="output 16-bit label PNG")
    up.set_defaults(func=cmd_upscale)
    return p


def cmd_segment(args):
    if args.diagram and args.method == "slic":
        raise UsageError("--diagram requires method power or optimal")
    rgb = image.read_rgb(args.input)
    if args.sigma2 > 0:
        rgb = image.add_gaussian_noise(rgb, image.NoiseSpec(args.sigma2, args.seed))
    t0 = time.perf_counter()
    seg = pipeline.segment(
        rgb,
        args.method,
        args.k,
        m=args.m,
        max_iters=args.max_iters,
        power_offset=args.power_offset,
    )
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    image.write_labels(args.out, seg.labels)
    if args.diagram:
        gbpd.save_diagram(seg.diagram, args.diagram)
    print(f"k_out={seg.k_out} time_ms={elapsed_ms:.3f}")
    return 0


def cmd_noise(args):
    rgb = image.read_rgb(args.input)
    noisy = image.add_gaussian_noise(rgb, image.NoiseSpec(args.sigma2, args.seed))
    image.write_rgb(args.out, noisy)
    return 0


def _parse_list(text, conv, flag):
    try:
        values = [conv(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"bad value in {flag}: {text!r}")
    if not values:
        raise UsageError(f"{flag} must list at least one value")
    return sorted(set(values))


def cmd_eval(args):
    dataset = Path(args.dataset)
    gt_dir = Path(args.gt_dir) if args.gt_dir else dataset
    methods = _parse_list(args.methods, str, "--methods")
    for mth in methods:
        if mth not in pipeline.METHODS:
            raise UsageError(f"unknown method {mth!r} in --methods")
    ks = _parse_list(args.k, int, "--k")
    sigmas = _parse_list(args.sigma2, float, "--sigma2")
    if not dataset.is_dir():
        raise IOError(f"dataset directory not found: {dataset}")
    images = sorted(
        p for p in dataset.glob("*.png") if ".gt" not in p.name.lower()
    )
    if not images:
        raise IOError(f"no input images (*.png) in {dataset}")

    workers = _worker_count()
    rows = []
    readable = 0
    for img_path in images:
        try:
            rgb = image.read_rgb(img_path)
        except (IOError, OSError) as exc:
            print(f"warning: skipping {img_path}: {exc}", file=sys.stderr)
            continue
        readable += 1
        gts = [
            image.read_boundary_map(p) for p in image.gt_paths_for(img_path, gt_dir)
        ]
        for sigma2 in sigmas:
            if sigma2 > 0:
                noisy = image.add_gaussian_noise(
                    rgb, image.NoiseSpec(sigma2, args.seed)
                )
            else:
                noisy = rgb

            def run_cell(cell):
                method, k = cell
                t0 = time.perf_counter()
                seg = pipeline.segment(
                    noisy,
                    method,
                    k,
                    m=args.m,
                    max_iters=args.max_iters,
                    power_offset=args.power_offset,
                )
                elapsed_ms = (time.perf_counter() - t0) * 1000.0
                br, bp, co, _ = metrics.score_segmentation(
                    seg.labels, gts, tol=args.tol
                )
                return (
                    img_path.stem,
                    method,
                    k,
                    seg.k_out,
                    sigma2,
                    args.seed,
                    br,
                    bp,
                    co,
                    elapsed_ms,
                )

            cells = [(mth, k) for mth in methods for k in ks]
            if workers == 1 or len(cells) == 1:
                rows.extend(run_cell(c) for c in cells)
            else:
                with ThreadPoolExecutor(max_workers=workers) as ex:
                    rows.extend(ex.map(run_cell, cells))

    if readable == 0:
        raise IOError("no readable input image in the dataset directory")
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[4]))
    with open(args.csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["image", "method", "k", "k_out", "sigma2", "seed", "br", "bp", "co",
             "runtime_ms"]
        )
        for r in rows:
            writer.writerow(
                [r[0], r[1], r[2], r[3], repr(float(r[4])), r[5],
                 repr(float(r[6])), repr(float(r[7])), repr(float(r[8])),
                 f"{r[9]:.3f}"]
            )
    return 0


def cmd_upscale(args):
    if args.factor <= 0:
        raise UsageError(f"--factor must be > 0, got {args.factor}")
    try:
        diagram = gbpd.load_diagram(args.diagram)
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise IOError(f"malformed diagram file {args.diagram}: {exc}")
    scaled = gbpd.rescale(diagram, args.factor)
    width = math.ceil(args.factor * diagram.ref_width)
    height = math.ceil(args.factor * diagram.ref_height)
    labels = gbpd.rasterize(scaled, width, height)
    image.write_labels(args.out, labels)
    return 0


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleInstanceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except (IOError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
