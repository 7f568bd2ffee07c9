"""Metrics, dataset benchmarking, parameter sweeps, synthetic fixtures.

MSE and SAD are computed over every pixel of the image, not only the
unknown region. Benchmark CSVs list one row per image in lexicographic
image-id order plus a final average row; sweep CSVs list one
(axis_value, avg_mse, avg_sad) row per swept value. All numeric fields
use %.6g with LF line endings.
"""

from __future__ import annotations

import concurrent.futures
import logging
import pathlib
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage

from . import imaging
from .pipeline import RunConfig, compute_matte, parse_dims

log = logging.getLogger("patchmatte")

BENCH_HEADER = "image_id,method,mse,sad,iterations,wall_seconds"
SWEEP_HEADER = "axis_value,avg_mse,avg_sad"

SWEEP_AXES = ("iterations", "stride", "patch_size", "dims_schedule")


def mse(mask, gt):
    """Mean squared error over all pixels."""
    mask = np.asarray(mask, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if mask.shape != gt.shape:
        raise ValueError(f"shape mismatch {mask.shape} vs {gt.shape}")
    diff = mask - gt
    return float((diff * diff).mean())


def sad(mask, gt):
    """Sum of absolute differences over all pixels."""
    mask = np.asarray(mask, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if mask.shape != gt.shape:
        raise ValueError(f"shape mismatch {mask.shape} vs {gt.shape}")
    return float(np.abs(mask - gt).sum())


@dataclass
class MetricRecord:
    image_id: str
    method: str
    mse: float
    sad: float
    iterations: int
    wall_seconds: float

    def row(self):
        return (f"{self.image_id},{self.method},{self.mse:.6g},{self.sad:.6g},"
                f"{self.iterations:.6g},{self.wall_seconds:.6g}")


@dataclass
class SweepSpec:
    """One swept parameter axis over a base configuration."""

    axis: str
    values: list
    base: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if not self.values:
            raise ValueError("sweep values must be nonempty")

    def configs(self):
        """The run configuration for each axis value, in order."""
        out = []
        for v in self.values:
            if self.axis == "iterations":
                out.append(self.base.with_overrides(iters=int(v)))
            elif self.axis == "stride":
                out.append(self.base.with_overrides(stride=int(v)))
            elif self.axis == "patch_size":
                out.append(self.base.with_overrides(window=int(v)))
            else:
                dims = parse_dims(v, self.base.method)
                out.append(self.base.with_overrides(dims=dims))
        return out


# ---------------------------------------------------------------------------
# synthetic fixture

def make_synthetic_case(seed, h, w, return_fields=False):
    """Reproducible matting test case: textured disk over a textured ground.

    Ground truth is a feathered disk (radius 0.3 * min(h, w), two-pixel
    linear edge ramp); the image is composited from two textured color
    fields, and the trimap keeps a three-pixel safety margin on both sides
    of the edge. The fields are blended to a common color inside the ramp
    band so the matting equation holds exactly for the premultiplied
    foreground approximation there.

    Returns (image, trimap, gt); with return_fields=True appends the
    foreground and background color fields used in the composite.
    """
    if h < 16 or w < 16:
        raise ValueError("fixture needs h, w >= 16")
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    radius = 0.3 * min(h, w)
    r = np.hypot(yy - cy, xx - cx)

    # alpha: 1 inside, 0 outside, linear over the 2-pixel band |r - radius| < 1
    alpha = np.clip((radius + 1.0 - r) / 2.0, 0.0, 1.0)

    fg = _texture_field(xx, yy, rng, base=(0.72, 0.30, 0.20))
    bg = _texture_field(xx, yy, rng, base=(0.16, 0.34, 0.76))
    # pull the fields toward their midpoint inside the ramp band, where
    # alpha*(1-alpha) is nonzero, so the premultiplied approximation
    # alpha*F ~ alpha*I stays within per-pixel 0.02 on the composite;
    # outside the band contrast returns to full within half a pixel
    mid = 0.5 * (fg + bg)
    contrast = np.clip((np.abs(r - radius) - 0.99) / 0.25, 0.065, 1.0)[:, :, None]
    fg = mid + contrast * (fg - mid)
    bg = mid + contrast * (bg - mid)

    image = alpha[:, :, None] * fg + (1.0 - alpha[:, :, None]) * bg
    image = np.clip(image, 0.0, 1.0)

    erode = lambda m: scipy.ndimage.binary_erosion(m, iterations=3)
    trimap = np.full((h, w), imaging.UNKNOWN, dtype=np.uint8)
    trimap[erode(alpha >= 1.0)] = imaging.FOREGROUND
    trimap[erode(alpha <= 0.0)] = imaging.BACKGROUND

    if return_fields:
        return image, trimap, alpha, fg, bg
    return image, trimap, alpha


def _texture_field(xx, yy, rng, base):
    """Smooth low-amplitude color waves around a base color."""
    phases = rng.uniform(0.0, 2.0 * np.pi, size=6)
    chans = []
    for c, b in enumerate(base):
        wave = (0.10 * np.sin(2.0 * np.pi * xx / (7.0 + 2.0 * c) + phases[2 * c % 6])
                + 0.06 * np.cos(2.0 * np.pi * yy / (9.0 + c) + phases[(2 * c + 1) % 6]))
        chans.append(b + wave)
    return np.clip(np.stack(chans, axis=-1), 0.0, 1.0)


def write_synthetic_dataset(root, seeds=(0,), h=64, w=64):
    """Materialize fixture cases in the input/trimap/gt dataset layout."""
    root = pathlib.Path(root)
    for sub in ("input", "trimap", "gt"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    names = []
    for seed in seeds:
        image, trimap, alpha = make_synthetic_case(seed, h, w)
        name = f"synthetic{seed:03d}.png"
        imaging.save_image(image, root / "input" / name)
        label = np.zeros(trimap.shape, dtype=np.float64)
        label[trimap == imaging.UNKNOWN] = 128.0 / 255.0
        label[trimap == imaging.FOREGROUND] = 1.0
        imaging.save_alpha(label, root / "trimap" / name)
        imaging.save_alpha(alpha, root / "gt" / name)
        names.append(name)
    return names


# ---------------------------------------------------------------------------
# dataset benchmarking

def _dataset_images(dataset_root):
    root = pathlib.Path(dataset_root)
    input_dir = root / "input"
    if not input_dir.is_dir():
        raise FileNotFoundError(f"dataset has no input directory: {input_dir}")
    return sorted(p.name for p in input_dir.iterdir() if p.is_file())


def _score_one(dataset_root, name, config):
    """(record, failed) for one image; NaN metrics when the solve fails."""
    root = pathlib.Path(dataset_root)
    method = config.modeler_config().summary()
    image = imaging.load_image(root / "input" / name)
    trimap = imaging.load_trimap(root / "trimap" / name)
    gt = imaging.load_alpha(root / "gt" / name)
    if config.resize is not None:
        gt = imaging.resize_image(gt, config.resize)
    start = time.perf_counter()
    try:
        result = compute_matte(image, trimap, config)
    except Exception:
        log.exception("matte failed for %s", name)
        wall = time.perf_counter() - start
        return MetricRecord(name, method, np.nan, np.nan, 0, wall), True
    wall = time.perf_counter() - start
    return MetricRecord(name, method, mse(result.matte, gt),
                        sad(result.matte, gt), result.iterations, wall), False


def run_benchmark(dataset_root, config=None, out_path=None):
    """Score every dataset image; returns (records, skipped, failures).

    Images without ground truth are skipped with a warning and appear in
    the skipped list. Solver failures yield NaN-metric records and count as
    failures. Records are ordered by image id with a final average row over
    the successful runs. out_path, when given, receives the CSV.
    """
    if config is None:
        config = RunConfig()
    root = pathlib.Path(dataset_root)
    names = _dataset_images(root)
    todo, skipped = [], []
    for name in names:
        if not (root / "gt" / name).is_file():
            log.warning("no ground truth for %s, skipping", name)
            skipped.append(name)
        else:
            todo.append(name)

    records = []
    failures = 0
    if config.workers > 1 and len(todo) > 1:
        with concurrent.futures.ProcessPoolExecutor(config.workers) as pool:
            scored = list(pool.map(_score_one, [root] * len(todo), todo,
                                   [config] * len(todo)))
    else:
        scored = [_score_one(root, name, config) for name in todo]
    for record, failed in scored:
        records.append(record)
        failures += int(failed)

    good = [r for r in records if np.isfinite(r.mse)]
    if records:
        method = config.modeler_config().summary()
        if good:
            avg = MetricRecord(
                "average", method,
                float(np.mean([r.mse for r in good])),
                float(np.mean([r.sad for r in good])),
                int(round(np.mean([r.iterations for r in good]))),
                float(np.mean([r.wall_seconds for r in good])))
        else:
            avg = MetricRecord("average", method, np.nan, np.nan, 0, 0.0)
        records.append(avg)

    if out_path is not None:
        write_benchmark_csv(records, out_path)
    return records, skipped, failures


def write_benchmark_csv(records, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(BENCH_HEADER + "\n")
        for rec in records:
            fh.write(rec.row() + "\n")


def run_sweep(spec, dataset_root, out_path=None):
    """One benchmark per axis value; returns the (value, mse, sad) rows."""
    rows = []
    for value, config in zip(spec.values, spec.configs()):
        records, _, failures = run_benchmark(dataset_root, config)
        if failures:
            log.warning("sweep point %s had %d failures", value, failures)
        good = [r for r in records if r.image_id != "average" and np.isfinite(r.mse)]
        if good:
            avg_mse = float(np.mean([r.mse for r in good]))
            avg_sad = float(np.mean([r.sad for r in good]))
        else:
            avg_mse = avg_sad = np.nan
        label = value if isinstance(value, str) else f"{value:.6g}"
        rows.append((label, avg_mse, avg_sad))
    if out_path is not None:
        with open(out_path, "w", newline="\n") as fh:
            fh.write(SWEEP_HEADER + "\n")
            for label, m, s in rows:
                fh.write(f"{label},{m:.6g},{s:.6g}\n")
    return rows
