"""Benchmark the compiled kernels against the pure-Python fallback.

Times build_local_energies for each subspace method over the patch set of a
random RGB image, plus the LLE weight kernel and one end-to-end matte, and
reports the speedup and the worst backend disagreement. Run from the repo
root after an editable install:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --side 96 --repeats 5
"""

import argparse
import time

import numpy as np

from patchmatte._backend import HAVE_COMPILED, get_kernels
from patchmatte.alignment import _center_local_indices
from patchmatte.patching import extract_patches
from patchmatte.evaluation import make_synthetic_case
from patchmatte.pipeline import RunConfig, compute_matte

CASES = [
    ("pca", dict(method="pca", d1=2, d2=0, k=4, sigma=None)),
    ("le", dict(method="le", d1=2, d2=0, k=4, sigma=None)),
    ("isomap", dict(method="isomap", d1=2, d2=0, k=4, sigma=None)),
    ("casiso", dict(method="casiso", d1=3, d2=3, k=4, sigma=None)),
]


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def bench_energies(patches, repeats):
    colors = patches.colors
    py = get_kernels("python")
    cy = get_kernels("compiled")
    print(f"{'kernel':<10} {'patches':>7} {'python':>10} {'compiled':>10} "
          f"{'speedup':>8} {'max diff':>10}")
    for name, kw in CASES:
        code = py.METHOD_CODES[kw["method"]]
        args = (colors, code, kw["d1"], kw["d2"], kw["k"], kw["sigma"])
        t_py, (e_py, s_py) = time_call(lambda: py.build_local_energies(*args),
                                       repeats)
        t_cy, (e_cy, s_cy) = time_call(lambda: cy.build_local_energies(*args),
                                       repeats)
        diff = np.abs(e_py - e_cy).max()
        assert np.array_equal(s_py, s_cy), f"{name}: stats disagree"
        print(f"{name:<10} {colors.shape[0]:>7} {t_py:>9.3f}s {t_cy:>9.3f}s "
              f"{t_py / t_cy:>7.1f}x {diff:>10.2e}")

    center_local = _center_local_indices(patches)
    t_py, (n_py, w_py) = time_call(
        lambda: py.build_lle_rows(colors, center_local, 4, 1e-3), repeats)
    t_cy, (n_cy, w_cy) = time_call(
        lambda: cy.build_lle_rows(colors, center_local, 4, 1e-3), repeats)
    assert np.array_equal(n_py, n_cy)
    diff = np.abs(w_py - w_cy).max()
    print(f"{'lle rows':<10} {colors.shape[0]:>7} {t_py:>9.3f}s {t_cy:>9.3f}s "
          f"{t_py / t_cy:>7.1f}x {diff:>10.2e}")


def bench_pipeline(side, repeats):
    image, trimap, _ = make_synthetic_case(0, side, side)
    config = RunConfig(method="casiso", dims=(3, 3), iters=100)
    t_py, r_py = time_call(
        lambda: compute_matte(image, trimap, config, backend="python"), repeats)
    t_cy, r_cy = time_call(
        lambda: compute_matte(image, trimap, config, backend="compiled"),
        repeats)
    diff = np.abs(r_py.matte - r_cy.matte).max()
    print(f"\nend-to-end casiso matte, {side}x{side}: "
          f"python {t_py:.3f}s, compiled {t_cy:.3f}s, "
          f"{t_py / t_cy:.1f}x, max matte diff {diff:.2e}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--side", type=int, default=64,
                        help="square image side length (default 64)")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats, best-of (default 3)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not HAVE_COMPILED:
        raise SystemExit("compiled backend is not built; nothing to compare "
                         "(reinstall with a C compiler available)")

    rng = np.random.default_rng(args.seed)
    image = rng.random((args.side, args.side, 3))
    patches = extract_patches(image, window=3, stride=1)
    print(f"image {args.side}x{args.side}, window 3, stride 1\n")
    bench_energies(patches, args.repeats)
    bench_pipeline(args.side, args.repeats)


if __name__ == "__main__":
    main()
