"""Global alignment-matrix assembly and the trimap data term.

The per-patch energy blocks L_i (from the active kernel backend) are
scattered into one sparse N x N matrix

    M = sum_i S_i L_i S_i^T

where S_i selects the patch members from the flattened image. M is
symmetric positive semidefinite and annihilates the constant vector, so
a^T M a penalizes mattes whose patch restrictions leave the local subspace
structure. The locally-linear method instead accumulates center-row
reconstruction residuals, M = (E - W)^T (E - W), one row per patch center.

The trimap enters as a soft quadratic pull on the labeled pixels:

    f(a) = a^T M a + lam * sum_known (a_i - g_i)^2

with g_i = 1 on foreground and 0 on background, folded into the expanded
quadratic (matrix, linear, constant) kept in :class:`QuadraticProblem`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse

from . import imaging
from ._backend import get_kernels
from .patching import Accumulator


@dataclass
class AssemblyDiagnostics:
    """Counters describing one assembly pass."""

    n_patches: int = 0
    degenerate: int = 0     # patches whose coordinates collapsed to zero
    padded_rows: int = 0    # embedding rows zero-filled for lack of spectrum
    repaired_edges: int = 0  # neighbor-graph edges added to restore connectivity

    def summary(self):
        return (f"patches={self.n_patches} degenerate={self.degenerate} "
                f"padded={self.padded_rows} repaired={self.repaired_edges}")


def assemble_alignment(patches, config, backend=None):
    """Sparse global alignment matrix for a patch set.

    patches: :class:`~patchmatte.patching.PatchSet`.
    config: :class:`~patchmatte.modelers.ModelerConfig`.
    backend: kernel backend name override (None uses the active one).
    Returns (matrix, diagnostics); the matrix is CSR, explicitly
    symmetrized as (M + M^T) / 2 to keep round-off from breaking the
    symmetry contract.
    """
    config.validate(patches.p)
    kernels = get_kernels(backend)
    n = patches.n_pixels
    acc = Accumulator(n)
    diag = AssemblyDiagnostics(n_patches=len(patches))

    if config.method == "lle":
        _accumulate_lle(acc, patches, config, kernels)
    else:
        d1 = config.dims[0]
        d2 = config.dims[1] if len(config.dims) > 1 else 0
        sigma = config.le_sigma if config.le_sigma is not None else -1.0
        locals_, stats = kernels.build_local_energies(
            patches.colors, kernels.METHOD_CODES[config.method],
            d1, d2, config.k, sigma)
        for i in range(len(patches)):
            acc.add(patches.members[i], locals_[i])
        diag.degenerate = int(stats[0])
        diag.padded_rows = int(stats[1])
        diag.repaired_edges = int(stats[2])

    m = acc.tocsr()
    m = (m + m.T) * 0.5
    m = m.tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m, diag


def _accumulate_lle(acc, patches, config, kernels):
    # each patch contributes the outer product of its center's
    # reconstruction-residual row r = e_c - sum_j w_j e_{n_j}
    center_local = _center_local_indices(patches)
    neigh, weights = kernels.build_lle_rows(
        patches.colors, center_local, config.k, config.lle_reg)
    k = neigh.shape[1]
    for i in range(len(patches)):
        idx = np.empty(k + 1, dtype=np.int64)
        val = np.empty(k + 1)
        idx[0] = patches.centers[i]
        val[0] = 1.0
        idx[1:] = patches.members[i][neigh[i]]
        val[1:] = -weights[i]
        acc.add(idx, np.outer(val, val))


def _center_local_indices(patches):
    """Position of each patch's center pixel within its member list."""
    hits = patches.members == patches.centers[:, None]
    if not hits.any(axis=1).all():
        raise ValueError("patch member list missing its own center")
    return np.argmax(hits, axis=1).astype(np.int64)


@dataclass
class QuadraticProblem:
    """Box-constrained quadratic f(x) = x^T A x + b^T x + c over [0, 1]^N.

    A is symmetric CSR; known_mask / known_values carry the trimap labels
    forward for the post-solve overwrite of labeled pixels.
    """

    matrix: scipy.sparse.csr_matrix
    linear: np.ndarray
    constant: float
    known_mask: np.ndarray = None
    known_values: np.ndarray = None

    @property
    def n(self):
        return self.linear.shape[0]

    def objective(self, x):
        return float(x @ (self.matrix @ x) + self.linear @ x + self.constant)

    def gradient(self, x):
        return 2.0 * (self.matrix @ x) + self.linear


def apply_trimap_prior(matrix, trimap, lam=100.0):
    """Fold trimap labels into the quadratic as a soft data term.

    matrix: N x N alignment matrix (sparse).
    trimap: label image or flat label vector with N entries.
    lam: pull strength on labeled pixels.
    Returns a :class:`QuadraticProblem` whose objective is
    a^T M a + lam * sum_known (a_i - g_i)^2.
    """
    labels = np.asarray(trimap).ravel()
    n = matrix.shape[0]
    if labels.shape[0] != n:
        raise ValueError(f"trimap has {labels.shape[0]} pixels, matrix is {n} x {n}")
    if lam < 0:
        raise ValueError("prior strength must be >= 0")
    known = labels != imaging.UNKNOWN
    goal = (labels == imaging.FOREGROUND).astype(np.float64)
    penalty = scipy.sparse.diags(lam * known.astype(np.float64), format="csr")
    a = (matrix + penalty).tocsr()
    a.sum_duplicates()
    a.sort_indices()
    b = -2.0 * lam * (goal * known)
    c = float(lam * goal[known].sum())   # goal is 0/1 so sum of squares = sum
    return QuadraticProblem(matrix=a, linear=b, constant=c,
                            known_mask=known, known_values=goal)


def dump_matrix(matrix, path):
    """Write a sparse matrix in Matrix Market coordinate format."""
    scipy.io.mmwrite(str(path), scipy.sparse.coo_matrix(matrix))


__all__ = [
    "AssemblyDiagnostics", "QuadraticProblem",
    "assemble_alignment", "apply_trimap_prior", "dump_matrix",
]
