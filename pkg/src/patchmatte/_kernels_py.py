"""Pure-Python batch kernels.

Same call surface as the compiled extension (``patchmatte._kernels``): the
hot per-patch work, batched over all patches of an image, returning dense
local energy blocks ready for sparse scatter-assembly. Kept free of any
compiled dependency so the package works from a plain checkout.

Both implementations must agree to round-off on identical input; the shared
determinism rules live in :mod:`patchmatte.modelers`.
"""

from __future__ import annotations

import numpy as np

from . import modelers

METHOD_PCA = 0
METHOD_LE = 2
METHOD_ISOMAP = 3
METHOD_CASISO = 4

METHOD_CODES = {
    "pca": METHOD_PCA,
    "le": METHOD_LE,
    "isomap": METHOD_ISOMAP,
    "casiso": METHOD_CASISO,
}


def build_local_energies(colors, method, d1, d2, k, sigma):
    """Per-patch energy blocks L_i = W_i W_i^T for a subspace method.

    colors: (P, 3, p) float64 patch color matrices.
    method: one of the METHOD_* codes.
    d1, d2: dimension schedule (d2 only read for the cascade).
    sigma: heat-kernel width for the Laplacian method; <= 0 selects the
        per-patch mean neighbor distance.
    Returns (locals, stats) where locals is (P, p, p) and stats counts
    [degenerate patches, zero-padded rows, repaired graph edges].
    """
    colors = np.ascontiguousarray(colors, dtype=np.float64)
    n_patches, _, p = colors.shape
    out = np.empty((n_patches, p, p))
    degenerate = padded = repaired = 0
    sigma_arg = None if sigma is None or sigma <= 0.0 else float(sigma)
    for i in range(n_patches):
        patch = colors[i]
        if method == METHOD_PCA:
            sc = modelers.pca_coords(patch, d1)
        elif method == METHOD_LE:
            sc = modelers.le_coords(patch, d1, k, sigma=sigma_arg)
        elif method == METHOD_ISOMAP:
            sc = modelers.isomap_coords(patch, d1, k)
        elif method == METHOD_CASISO:
            sc = modelers.cascade_isomap_coords(patch, (d1, d2), k)
        else:
            raise ValueError(f"unknown method code {method}")
        if not sc.coords.any():
            degenerate += 1
        padded += sc.padded_rows
        repaired += sc.repaired_edges
        out[i] = modelers.patch_energy(sc)
    return out, np.array([degenerate, padded, repaired], dtype=np.int64)


def build_lle_rows(colors, center_local, k, reg):
    """Center-pixel reconstruction rows for the locally-linear method.

    colors: (P, 3, p) float64; center_local: (P,) local index of each
    patch's center pixel within its member list.
    Returns (neighbors, weights), both (P, k); neighbors index into the
    patch member list.
    """
    colors = np.ascontiguousarray(colors, dtype=np.float64)
    center_local = np.asarray(center_local, dtype=np.int64)
    n_patches = colors.shape[0]
    neighbors = np.empty((n_patches, k), dtype=np.int32)
    weights = np.empty((n_patches, k))
    for i in range(n_patches):
        neigh, w = modelers.lle_center_row(colors[i], int(center_local[i]), k, reg)
        neighbors[i] = neigh
        weights[i] = w
    return neighbors, weights
