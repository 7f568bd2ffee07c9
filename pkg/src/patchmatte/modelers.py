"""Per-patch subspace modeling.

Each method maps a patch's 3 x p color matrix to low-dimensional coordinates
sharing the patch's manifold structure, from which the patch energy matrix
W = (E - ee^T/p)(E - Y^+ Y) is formed. The reconstruction energy contributed
by a patch is L = W W^T; summing S_i L_i S_i^T over patches yields the global
alignment matrix (see :mod:`patchmatte.alignment`).

All eigenproblems here are tiny (at most p x p) and solved densely.
Determinism rules shared with the compiled kernels: stable neighbor
tie-breaks by index, eigenvalues below ``EIG_REL_TOL`` times the largest
treated as zero, greedy shortest-edge connectivity repair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# relative cutoff below which eigenvalues / squared singular values count as zero
EIG_REL_TOL = 1e-12

METHODS = ("pca", "lle", "le", "isomap", "casiso")
GRAPH_METHODS = ("lle", "le", "isomap", "casiso")


@dataclass
class ModelerConfig:
    """Method selection plus the per-patch parameters.

    dims is a single-entry tuple for pca/le/isomap (the subspace dimension)
    and a two-entry schedule (stage-1, stage-2) for casiso. ``None`` picks
    the method default: 2, or (3, 3) for casiso. lle ignores dims.
    le_sigma ``None`` means the per-patch mean neighbor distance rule.
    """

    method: str = "casiso"
    dims: tuple = None
    k: int = 4
    lle_reg: float = 1e-3
    le_sigma: float = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.dims is None:
            self.dims = (3, 3) if self.method == "casiso" else (2,)
        else:
            self.dims = tuple(int(d) for d in self.dims)
        want = 2 if self.method == "casiso" else 1
        if len(self.dims) != want:
            raise ValueError(
                f"method {self.method} takes {want} dimension(s), got {self.dims}")

    def validate(self, p):
        """Check parameter ranges against the patch size p."""
        for d in self.dims:
            if not 1 <= d <= p - 1:
                raise ValueError(f"dimension {d} outside [1, {p - 1}]")
        if self.method == "pca" and self.dims[0] > 3:
            raise ValueError("pca dimension cannot exceed the 3 color channels")
        if self.method == "le" and self.dims[0] > p - 2:
            raise ValueError(f"le dimension {self.dims[0]} outside [1, {p - 2}]")
        if not 1 <= self.k <= p - 1:
            raise ValueError(f"neighbor count {self.k} outside [1, {p - 1}]")

    def summary(self):
        dims = "-".join(str(d) for d in self.dims)
        return f"{self.method}(d={dims},k={self.k})"


@dataclass
class SubspaceCoords:
    """d x p low-dimensional patch coordinates, rows mean-centered."""

    coords: np.ndarray
    padded_rows: int = 0      # rows zero-filled because the spectrum ran out
    repaired_edges: int = 0   # edges inserted to reconnect the neighbor graph

    @property
    def d(self):
        return self.coords.shape[0]


@dataclass
class PatchStats:
    """Per-assembly diagnostics counters."""

    degenerate: int = 0
    padded: int = 0
    repaired: int = 0

    def asarray(self):
        return np.array([self.degenerate, self.padded, self.repaired])


def center_colors(colors):
    """Split a 3 x p color matrix into its mean vector and centered residual."""
    colors = np.asarray(colors, dtype=np.float64)
    mean = colors.mean(axis=1)
    centered = colors - mean[:, None]
    return mean, centered


def pca_coords(colors, d):
    """Principal-axis coordinates of the patch colors.

    Projects the centered colors onto the top-d eigenvectors of their 3 x 3
    covariance. A constant-color patch yields all-zero coordinates.
    """
    _, centered = center_colors(colors)
    p = centered.shape[1]
    cov = centered @ centered.T / p
    lam, vec = np.linalg.eigh(cov)          # ascending
    order = np.argsort(-lam, kind="stable")
    lam, vec = lam[order], vec[:, order]
    if lam[0] <= 0.0:
        return SubspaceCoords(np.zeros((d, p)))
    tol = EIG_REL_TOL * lam[0]
    q = vec[:, :d]
    coords = q.T @ centered
    coords[lam[:d] <= tol] = 0.0
    coords -= coords.mean(axis=1, keepdims=True)
    return SubspaceCoords(_fix_signs(coords))


def isomap_coords(colors, d, k):
    """Geodesic embedding of the patch colors.

    Builds a symmetric k-nearest-neighbor graph, measures all-pairs
    shortest-path distances (disconnected graphs are repaired by greedily
    inserting the shortest inter-component edge), then embeds with classical
    multidimensional scaling. Rows beyond the count of positive eigenvalues
    are zero-padded.
    """
    colors = np.asarray(colors, dtype=np.float64)
    dist = _pairwise_distances(colors)
    adj = _knn_adjacency(dist, k)
    repaired = _repair_connectivity(adj, dist)
    geo = _graph_distances(adj, dist)
    coords, padded = _classical_mds(geo, d)
    return SubspaceCoords(_fix_signs(coords), padded_rows=padded,
                          repaired_edges=repaired)


def cascade_isomap_coords(colors, schedule, k):
    """Two-stage geodesic embedding with a (d1, d2) dimension schedule.

    Stage 1 embeds the raw colors into d1 dimensions; stage 2 re-embeds the
    stage-1 coordinates into d2 dimensions with the same procedure.
    """
    d1, d2 = schedule
    stage1 = isomap_coords(colors, d1, k)
    stage2 = isomap_coords(stage1.coords, d2, k)
    stage2.padded_rows += stage1.padded_rows
    stage2.repaired_edges += stage1.repaired_edges
    return stage2


def le_coords(colors, d, k, sigma=None):
    """Graph-Laplacian embedding of the patch colors.

    Heat-kernel weights on the symmetric k-nearest-neighbor graph; the
    coordinates are generalized eigenvectors of (L, D) skipping the constant
    one, mean-centered and scaled to unit row norm. Degenerate patches
    (no positive neighbor distance) yield zero coordinates.
    """
    colors = np.asarray(colors, dtype=np.float64)
    p = colors.shape[1]
    dist = _pairwise_distances(colors)
    adj = _knn_adjacency(dist, k)
    _repair_connectivity(adj, dist)

    if sigma is None:
        edges = adj & (dist > 0.0)
        sigma = dist[edges].mean() if edges.any() else 0.0
    if sigma <= 0.0:
        return SubspaceCoords(np.zeros((d, p)))

    weights = np.where(adj, np.exp(-(dist / sigma) ** 2), 0.0)
    degree = weights.sum(axis=1)
    if degree.min() <= 1e-300:
        return SubspaceCoords(np.zeros((d, p)))

    # normalized form: D^-1/2 L D^-1/2 z = mu z, y = D^-1/2 z
    dinv_sqrt = 1.0 / np.sqrt(degree)
    lap = np.diag(degree) - weights
    sym = dinv_sqrt[:, None] * lap * dinv_sqrt[None, :]
    sym = 0.5 * (sym + sym.T)
    mu, z = np.linalg.eigh(sym)             # ascending, mu[0] ~ 0 constant mode
    coords = (z[:, 1:d + 1] * dinv_sqrt[:, None]).T.copy()
    coords -= coords.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(coords, axis=1)
    nonzero = norms > 1e-300
    coords[nonzero] /= norms[nonzero, None]
    return SubspaceCoords(_fix_signs(coords))


def lle_weights(colors, k, reg=1e-3):
    """Reconstruction weights of every member from its k color-space neighbors.

    Row r solves the regularized local Gram system for the k members nearest
    to member r (excluding itself) and is normalized to sum to one; a
    singular system falls back to uniform weights.
    """
    colors = np.asarray(colors, dtype=np.float64)
    p = colors.shape[1]
    dist = _pairwise_distances(colors)
    rows = np.zeros((p, p))
    for r in range(p):
        neigh = _nearest_others(dist, r, k)
        rows[r, neigh] = _reconstruction_weights(colors, r, neigh, reg)
    return rows


def lle_center_row(colors, center_idx, k, reg=1e-3):
    """Neighbor indices and weights reconstructing the patch center."""
    colors = np.asarray(colors, dtype=np.float64)
    dist = _pairwise_distances(colors)
    neigh = _nearest_others(dist, center_idx, k)
    return neigh, _reconstruction_weights(colors, center_idx, neigh, reg)


def lle_patch_matrix(p, r, neigh, weights):
    """Dense row r of (E - W): +1 at r, -w_j at each neighbor."""
    row = np.zeros(p)
    row[r] = 1.0
    row[neigh] -= weights
    return row


def patch_alignment_W(coords):
    """Patch energy factor W = (E - ee^T/p)(E - Y^+ Y).

    Y^+ Y is the orthogonal projector onto the coordinate row space, computed
    through the d x d Gram matrix; zero coordinates turn W into the pure
    centering projector. Columns of W sum to zero. The patch energy
    contribution is L = W W^T.
    """
    y = coords.coords if isinstance(coords, SubspaceCoords) else np.asarray(coords)
    y = np.asarray(y, dtype=np.float64)
    p = y.shape[1]
    proj = np.eye(p) - _rowspace_projector(y)
    return proj - np.full((p, p), 1.0 / p) @ proj


def patch_energy(coords):
    """L = W W^T for the given coordinates."""
    w = patch_alignment_W(coords)
    return w @ w.T


def _rowspace_projector(y):
    """Projector onto the row space of y via its Gram matrix."""
    gram = y @ y.T
    lam, vec = np.linalg.eigh(gram)
    lam_max = lam[-1] if lam.size else 0.0
    if lam_max <= 0.0:
        return np.zeros((y.shape[1], y.shape[1]))
    keep = lam > EIG_REL_TOL * lam_max
    basis = vec[:, keep].T @ y              # rows span the row space
    basis /= np.sqrt(lam[keep])[:, None]
    return basis.T @ basis


def _pairwise_distances(colors):
    diff = colors[:, :, None] - colors[:, None, :]
    return np.sqrt((diff * diff).sum(axis=0))


def _nearest_others(dist, r, k):
    """Indices of the k nearest members to r, self excluded, ties by index."""
    order = np.argsort(dist[r], kind="stable")
    order = order[order != r]
    return order[:k]


def _knn_adjacency(dist, k):
    p = dist.shape[0]
    adj = np.zeros((p, p), dtype=bool)
    for r in range(p):
        neigh = _nearest_others(dist, r, k)
        adj[r, neigh] = True
    adj |= adj.T
    return adj


def _components(adj):
    p = adj.shape[0]
    comp = np.full(p, -1, dtype=np.int64)
    n = 0
    for start in range(p):
        if comp[start] >= 0:
            continue
        stack = [start]
        comp[start] = n
        while stack:
            u = stack.pop()
            for v in range(p):
                if adj[u, v] and comp[v] < 0:
                    comp[v] = n
                    stack.append(v)
        n += 1
    return comp, n


def _repair_connectivity(adj, dist):
    """Insert shortest inter-component edges until the graph is connected."""
    repaired = 0
    while True:
        comp, n = _components(adj)
        if n <= 1:
            return repaired
        best = (np.inf, -1, -1)
        p = adj.shape[0]
        for r in range(p):
            for c in range(r + 1, p):
                if comp[r] != comp[c] and dist[r, c] < best[0]:
                    best = (dist[r, c], r, c)
        _, r, c = best
        adj[r, c] = adj[c, r] = True
        repaired += 1


def _graph_distances(adj, dist):
    """All-pairs shortest paths on the weighted adjacency (Floyd-Warshall)."""
    p = adj.shape[0]
    geo = np.where(adj, dist, np.inf)
    np.fill_diagonal(geo, 0.0)
    for mid in range(p):
        np.minimum(geo, geo[:, mid, None] + geo[None, mid, :], out=geo)
    return geo


def _classical_mds(geo, d):
    """Top-d embedding of a distance matrix; returns (coords, padded rows)."""
    p = geo.shape[0]
    sq = geo * geo
    b = sq - sq.mean(axis=0)[None, :] - sq.mean(axis=1)[:, None] + sq.mean()
    b *= -0.5
    b = 0.5 * (b + b.T)
    lam, vec = np.linalg.eigh(b)
    order = np.argsort(-lam, kind="stable")
    lam, vec = lam[order], vec[:, order]
    coords = np.zeros((d, p))
    if lam[0] <= 0.0:
        return coords, d
    tol = EIG_REL_TOL * lam[0]
    padded = 0
    for j in range(d):
        if j < p and lam[j] > tol:
            coords[j] = np.sqrt(lam[j]) * vec[:, j]
        else:
            padded += 1
    coords -= coords.mean(axis=1, keepdims=True)
    return coords, padded


def _reconstruction_weights(colors, r, neigh, reg):
    k = len(neigh)
    z = colors[:, neigh] - colors[:, [r]]
    gram = z.T @ z
    trace = np.trace(gram)
    if trace <= 0.0:
        return np.full(k, 1.0 / k)
    try:
        w = np.linalg.solve(gram + (reg * trace / k) * np.eye(k), np.ones(k))
    except np.linalg.LinAlgError:
        return np.full(k, 1.0 / k)
    total = w.sum()
    if not np.isfinite(total) or abs(total) < 1e-12:
        return np.full(k, 1.0 / k)
    return w / total


def _fix_signs(coords):
    """Flip each row so its largest-magnitude entry is positive."""
    for row in coords:
        j = np.argmax(np.abs(row))
        if row[j] < 0:
            row *= -1.0
    return coords
