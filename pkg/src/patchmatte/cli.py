"""Batch command-line interface.

Subcommands: matte (single image), composite (paste a matted foreground
onto a new background), eval (dataset benchmark CSV), sweep (parameter
sweep CSV). Configuration comes from defaults, then an optional flat
key=value config file, then explicit flags, later layers winning.

Progress and diagnostics go to standard error; data outputs go to files.
Exit codes: 0 success, 1 internal failure, 2 bad input or arguments.
"""

from __future__ import annotations

import argparse
import logging
import pathlib
import sys

from . import imaging
from .compositing import composite as composite_layers
from .compositing import extract_foreground
from .evaluation import SWEEP_AXES, SweepSpec, run_benchmark, run_sweep
from .pipeline import (RunConfig, compute_matte, config_from_pairs,
                       read_config_pairs)

log = logging.getLogger("patchmatte")

METHOD_CHOICES = ("pca", "lle", "le", "isomap", "casiso")
EVAL_DEFAULT_RESIZE = "120x160"


def _add_config_flags(sub):
    sub.add_argument("--config", help="flat key=value configuration file")
    sub.add_argument("--method", choices=METHOD_CHOICES)
    sub.add_argument("--dims", help="dimension schedule, e.g. 2 or 3-3-3")
    sub.add_argument("--k", type=int, help="neighbor count")
    sub.add_argument("--window", type=int, help="odd patch window size")
    sub.add_argument("--stride", type=int, help="patch center spacing")
    sub.add_argument("--lambda", dest="lam", type=float,
                     help="trimap pull strength")
    sub.add_argument("--iters", type=int, help="solver iteration cap")
    sub.add_argument("--resize", help="working resolution HxW, or none")
    sub.add_argument("--workers", type=int, help="parallel worker cap")


def _flag_pairs(args):
    pairs = {}
    for key in ("method", "dims", "k", "window", "stride", "iters",
                "resize", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            pairs[key] = str(value)
    if getattr(args, "lam", None) is not None:
        pairs["lambda"] = str(args.lam)
    return pairs


def _build_config(args, resize_default=None):
    base = RunConfig()
    file_had_resize = False
    if args.config:
        if not pathlib.Path(args.config).is_file():
            raise _InputError("config not found")
        file_pairs = read_config_pairs(args.config)
        file_had_resize = "resize" in file_pairs
        base = config_from_pairs(file_pairs, base=base)
    pairs = _flag_pairs(args)
    if resize_default is not None and "resize" not in pairs and not file_had_resize:
        pairs["resize"] = resize_default
    return config_from_pairs(pairs, base=base)


class _InputError(Exception):
    """Bad input or arguments; maps to exit code 2."""


def _require(path, what):
    if not pathlib.Path(path).is_file():
        raise _InputError(f"{what} not found")
    return path


def cmd_matte(args):
    config = _build_config(args)
    image = imaging.load_image(_require(args.image, "image"))
    trimap = imaging.load_trimap(_require(args.trimap, "trimap"))
    result = compute_matte(image, trimap, config,
                           matrix_out=args.dump_matrix)
    out = args.out or "matte.png"
    imaging.save_alpha(result.matte, out)
    log.info("wrote %s (%s, %d iterations)", out,
             config.modeler_config().summary(), result.iterations)
    if args.trace_csv:
        result.trace.to_csv(args.trace_csv)
        log.info("wrote %s", args.trace_csv)
    return 0


def cmd_composite(args):
    image = imaging.load_image(_require(args.image, "image"))
    matte = imaging.load_alpha(_require(args.matte, "matte"))
    bg = imaging.load_image(_require(args.background, "background"))
    fg = extract_foreground(image, matte)
    out = args.out or "composite.png"
    imaging.save_image(composite_layers(fg, bg), out)
    log.info("wrote %s", out)
    if args.fg_out:
        imaging.save_rgba(fg.data, args.fg_out)
        log.info("wrote %s", args.fg_out)
    return 0


def cmd_eval(args):
    config = _build_config(args, resize_default=EVAL_DEFAULT_RESIZE)
    if not pathlib.Path(args.dataset).is_dir():
        raise _InputError("dataset not found")
    out = args.out or "metrics.csv"
    records, skipped, failures = run_benchmark(args.dataset, config, out_path=out)
    n_scored = sum(1 for r in records if r.image_id != "average")
    log.info("wrote %s (%d images scored, %d skipped, %d failed)",
             out, n_scored, len(skipped), failures)
    return 1 if failures else 0


def cmd_sweep(args):
    config = _build_config(args)
    if not pathlib.Path(args.dataset).is_dir():
        raise _InputError("dataset not found")
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if args.axis != "dims_schedule":
        values = [int(v) for v in values]
    spec = SweepSpec(axis=args.axis, values=values, base=config)
    out = args.out or "sweep.csv"
    run_sweep(spec, args.dataset, out_path=out)
    log.info("wrote %s (%d sweep points)", out, len(values))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="patchmatte",
        description="Manifold-based alpha matting: model image patches as "
                    "local subspaces, align them into a sparse quadratic, "
                    "solve for the matte under trimap constraints.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("matte", help="compute an alpha matte")
    p.add_argument("image")
    p.add_argument("trimap")
    _add_config_flags(p)
    p.add_argument("--out", help="output matte PNG (default matte.png)")
    p.add_argument("--trace-csv", help="write the solver objective trace")
    p.add_argument("--dump-matrix",
                   help="write the alignment matrix in Matrix Market format")
    p.set_defaults(func=cmd_matte)

    p = subs.add_parser("composite", help="paste a matted foreground onto a "
                                          "new background")
    p.add_argument("image")
    p.add_argument("matte")
    p.add_argument("background")
    p.add_argument("--out", help="output PNG (default composite.png)")
    p.add_argument("--fg-out", help="also write the premultiplied RGBA layer")
    p.set_defaults(func=cmd_composite)

    p = subs.add_parser("eval", help="benchmark a dataset, write metrics CSV")
    p.add_argument("dataset", help="root with input/, trimap/, gt/")
    _add_config_flags(p)
    p.add_argument("--out", help="output CSV (default metrics.csv)")
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("sweep", help="sweep one parameter axis, write CSV")
    p.add_argument("dataset", help="root with input/, trimap/, gt/")
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True,
                   help="comma-separated axis values, e.g. 50,150,250")
    _add_config_flags(p)
    p.add_argument("--out", help="output CSV (default sweep.csv)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
