# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, language_level=3
"""Compiled batch kernels.

Same call surface as :mod:`patchmatte._kernels_py`: per-patch local energy
blocks and locally-linear center rows, batched over all patches. All linear
algebra is done in plain C loops (cyclic Jacobi eigensolver, Floyd-Warshall,
Gaussian elimination) so the extension depends on nothing but libm.

Determinism rules are shared with the pure-python twin: stable neighbor
tie-breaks by index, eigenvalues below EIG_REL_TOL times the largest treated
as zero, greedy shortest-edge connectivity repair.
"""

import numpy as np

from libc.math cimport INFINITY, exp, fabs, sqrt

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

cdef double EIG_REL_TOL = 1e-12


# ---------------------------------------------------------------------------
# dense symmetric eigensolver (cyclic Jacobi, ascending selection sort)

cdef void _jacobi(double[:, :] a, double[:, :] v, double[:] lam, int n):
    """Eigendecomposition of symmetric a (destroyed); columns of v are the
    eigenvectors, lam the eigenvalues, sorted ascending."""
    cdef int i, j, p, q, sweep, m
    cdef double app, aqq, apq, theta, t, c, s, tau
    cdef double aip, aiq, vip, viq, off, scale, tmp
    for i in range(n):
        for j in range(n):
            v[i, j] = 1.0 if i == j else 0.0
    for sweep in range(100):
        off = 0.0
        scale = 1e-300
        for i in range(n):
            scale += fabs(a[i, i])
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if off <= 1e-30 * scale * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if fabs(apq) < 1e-300:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = 0.5 * (aqq - app) / apq
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    if i != p and i != q:
                        aip = a[i, p]
                        aiq = a[i, q]
                        a[i, p] = aip - s * (aiq + tau * aip)
                        a[p, i] = a[i, p]
                        a[i, q] = aiq + s * (aip - tau * aiq)
                        a[q, i] = a[i, q]
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = vip - s * (viq + tau * vip)
                    v[i, q] = viq + s * (vip - tau * viq)
    for i in range(n):
        lam[i] = a[i, i]
    # ascending selection sort; ties are spectral-rotation invariant
    for i in range(n - 1):
        m = i
        for j in range(i + 1, n):
            if lam[j] < lam[m]:
                m = j
        if m != i:
            tmp = lam[i]
            lam[i] = lam[m]
            lam[m] = tmp
            for j in range(n):
                tmp = v[j, i]
                v[j, i] = v[j, m]
                v[j, m] = tmp


# ---------------------------------------------------------------------------
# neighbor graph machinery

cdef void _pairwise(double[:, :] pts, int dim, int p, double[:, :] dist):
    cdef int a, b, c
    cdef double acc, diff
    for a in range(p):
        dist[a, a] = 0.0
        for b in range(a + 1, p):
            acc = 0.0
            for c in range(dim):
                diff = pts[c, a] - pts[c, b]
                acc += diff * diff
            acc = sqrt(acc)
            dist[a, b] = acc
            dist[b, a] = acc


cdef void _nearest(double[:, :] dist, int p, int r, int k,
                   unsigned char[:] used, long long[:] out):
    """k nearest members to r, self excluded, ties to the lower index."""
    cdef int picked, j, best
    cdef double best_d
    for j in range(p):
        used[j] = 0
    for picked in range(k):
        best = -1
        best_d = INFINITY
        for j in range(p):
            if j == r or used[j]:
                continue
            if dist[r, j] < best_d:
                best_d = dist[r, j]
                best = j
        used[best] = 1
        out[picked] = best


cdef void _knn(double[:, :] dist, int p, int k, unsigned char[:, :] adj,
               unsigned char[:] used, long long[:] pick):
    cdef int r, j
    for r in range(p):
        for j in range(p):
            adj[r, j] = 0
    for r in range(p):
        _nearest(dist, p, r, k, used, pick)
        for j in range(k):
            adj[r, pick[j]] = 1
    for r in range(p):
        for j in range(r + 1, p):
            if adj[r, j] or adj[j, r]:
                adj[r, j] = 1
                adj[j, r] = 1


cdef int _components(unsigned char[:, :] adj, int p, long long[:] comp,
                     long long[:] stack):
    cdef int n = 0, start, top, u, v
    for start in range(p):
        comp[start] = -1
    for start in range(p):
        if comp[start] >= 0:
            continue
        top = 0
        stack[top] = start
        top += 1
        comp[start] = n
        while top > 0:
            top -= 1
            u = <int>stack[top]
            for v in range(p):
                if adj[u, v] and comp[v] < 0:
                    comp[v] = n
                    stack[top] = v
                    top += 1
        n += 1
    return n


cdef int _repair(unsigned char[:, :] adj, double[:, :] dist, int p,
                 long long[:] comp, long long[:] stack):
    """Insert shortest inter-component edges until connected."""
    cdef int repaired = 0, n, r, c, br, bc
    cdef double best
    while True:
        n = _components(adj, p, comp, stack)
        if n <= 1:
            return repaired
        best = INFINITY
        br = -1
        bc = -1
        for r in range(p):
            for c in range(r + 1, p):
                if comp[r] != comp[c] and dist[r, c] < best:
                    best = dist[r, c]
                    br = r
                    bc = c
        adj[br, bc] = 1
        adj[bc, br] = 1
        repaired += 1


cdef void _floyd(unsigned char[:, :] adj, double[:, :] dist, int p,
                 double[:, :] geo):
    cdef int mid, a, b
    cdef double cand
    for a in range(p):
        for b in range(p):
            geo[a, b] = dist[a, b] if adj[a, b] else INFINITY
        geo[a, a] = 0.0
    for mid in range(p):
        for a in range(p):
            for b in range(p):
                cand = geo[a, mid] + geo[mid, b]
                if cand < geo[a, b]:
                    geo[a, b] = cand


# ---------------------------------------------------------------------------
# embeddings

cdef void _center_rows(double[:, :] coords, int d, int p):
    cdef int r, c
    cdef double mean
    for r in range(d):
        mean = 0.0
        for c in range(p):
            mean += coords[r, c]
        mean /= p
        for c in range(p):
            coords[r, c] -= mean


cdef void _fix_signs(double[:, :] coords, int d, int p):
    """Flip each row so its largest-magnitude entry is positive."""
    cdef int r, c, j
    cdef double best
    for r in range(d):
        j = 0
        best = fabs(coords[r, 0])
        for c in range(1, p):
            if fabs(coords[r, c]) > best:
                best = fabs(coords[r, c])
                j = c
        if coords[r, j] < 0.0:
            for c in range(p):
                coords[r, c] = -coords[r, c]


cdef int _mds(double[:, :] geo, int p, int d, double[:, :] coords,
              double[:, :] bmat, double[:, :] vec, double[:] lam,
              double[:] rowmean):
    """Classical MDS into coords (d x p); returns the zero-padded row count."""
    cdef int i, j, r, c, idx, padded
    cdef double total, lam_top, tol, scale
    # double-centered -squared-distance/2 matrix
    total = 0.0
    for i in range(p):
        rowmean[i] = 0.0
    for i in range(p):
        for j in range(p):
            bmat[i, j] = geo[i, j] * geo[i, j]
            rowmean[i] += bmat[i, j]
            total += bmat[i, j]
    for i in range(p):
        rowmean[i] /= p
    total /= <double>p * p
    for i in range(p):
        for j in range(p):
            bmat[i, j] = -0.5 * (bmat[i, j] - rowmean[i] - rowmean[j] + total)
    for i in range(p):
        for j in range(i + 1, p):
            scale = 0.5 * (bmat[i, j] + bmat[j, i])
            bmat[i, j] = scale
            bmat[j, i] = scale

    _jacobi(bmat, vec, lam, p)      # ascending
    for r in range(d):
        for c in range(p):
            coords[r, c] = 0.0
    lam_top = lam[p - 1]
    if lam_top <= 0.0:
        return d
    tol = EIG_REL_TOL * lam_top
    padded = 0
    for r in range(d):
        idx = p - 1 - r
        if r < p and lam[idx] > tol:
            scale = sqrt(lam[idx])
            for c in range(p):
                coords[r, c] = scale * vec[c, idx]
        else:
            padded += 1
    _center_rows(coords, d, p)
    return padded


cdef (int, int) _isomap_stage(double[:, :] pts, int dim, int p, int d, int k,
                              double[:, :] coords, double[:, :] dist,
                              unsigned char[:, :] adj, double[:, :] geo,
                              double[:, :] bmat, double[:, :] vec,
                              double[:] lam, double[:] rowmean,
                              long long[:] comp, long long[:] stack,
                              unsigned char[:] used, long long[:] pick):
    cdef int repaired, padded
    _pairwise(pts, dim, p, dist)
    _knn(dist, p, k, adj, used, pick)
    repaired = _repair(adj, dist, p, comp, stack)
    _floyd(adj, dist, p, geo)
    padded = _mds(geo, p, d, coords, bmat, vec, lam, rowmean)
    _fix_signs(coords, d, p)
    return padded, repaired


cdef void _pca(double[:, :] patch, int p, int d, double[:, :] coords,
               double[:, :] cov, double[:, :] vec, double[:] lam,
               double[:] mean):
    """Principal-axis coordinates; cov/vec are 3 x 3 scratch."""
    cdef int i, j, c, idx, r
    cdef double acc, tol
    for i in range(3):
        acc = 0.0
        for c in range(p):
            acc += patch[i, c]
        mean[i] = acc / p
    for i in range(3):
        for j in range(i, 3):
            acc = 0.0
            for c in range(p):
                acc += (patch[i, c] - mean[i]) * (patch[j, c] - mean[j])
            acc /= p
            cov[i, j] = acc
            cov[j, i] = acc
    _jacobi(cov, vec, lam, 3)       # ascending
    for r in range(d):
        for c in range(p):
            coords[r, c] = 0.0
    if lam[2] <= 0.0:
        return
    tol = EIG_REL_TOL * lam[2]
    for r in range(d):
        idx = 2 - r                 # descending eigenvalue order
        if lam[idx] <= tol:
            continue
        for c in range(p):
            coords[r, c] = 0.0
            for j in range(3):
                coords[r, c] += vec[j, idx] * (patch[j, c] - mean[j])
    _center_rows(coords, d, p)
    _fix_signs(coords, d, p)


cdef void _le(double[:, :] patch, int p, int d, int k, double sigma,
              double[:, :] coords, double[:, :] dist, unsigned char[:, :] adj,
              double[:, :] wmat, double[:, :] sym, double[:, :] vec,
              double[:] lam, double[:] degree, double[:] dinvs,
              long long[:] comp, long long[:] stack, unsigned char[:] used,
              long long[:] pick):
    cdef int i, j, r, c, edges
    cdef double acc, norm
    for r in range(d):
        for c in range(p):
            coords[r, c] = 0.0
    _pairwise(patch, 3, p, dist)
    _knn(dist, p, k, adj, used, pick)
    _repair(adj, dist, p, comp, stack)

    if sigma <= 0.0:
        acc = 0.0
        edges = 0
        for i in range(p):
            for j in range(p):
                if adj[i, j] and dist[i, j] > 0.0:
                    acc += dist[i, j]
                    edges += 1
        if edges == 0:
            return
        sigma = acc / edges
    if sigma <= 0.0:
        return

    for i in range(p):
        for j in range(p):
            wmat[i, j] = exp(-(dist[i, j] / sigma) ** 2) if adj[i, j] else 0.0
    for i in range(p):
        acc = 0.0
        for j in range(p):
            acc += wmat[i, j]
        degree[i] = acc
        if acc <= 1e-300:
            return
    for i in range(p):
        dinvs[i] = 1.0 / sqrt(degree[i])
    # normalized laplacian D^-1/2 (D - W) D^-1/2, symmetrized
    for i in range(p):
        for j in range(p):
            acc = (degree[i] if i == j else 0.0) - wmat[i, j]
            sym[i, j] = dinvs[i] * acc * dinvs[j]
    for i in range(p):
        for j in range(i + 1, p):
            acc = 0.5 * (sym[i, j] + sym[j, i])
            sym[i, j] = acc
            sym[j, i] = acc
    _jacobi(sym, vec, lam, p)       # ascending; column 0 is the constant mode
    for r in range(d):
        if r + 1 >= p:
            break
        for c in range(p):
            coords[r, c] = vec[c, r + 1] * dinvs[c]
    _center_rows(coords, d, p)
    for r in range(d):
        norm = 0.0
        for c in range(p):
            norm += coords[r, c] * coords[r, c]
        norm = sqrt(norm)
        if norm > 1e-300:
            for c in range(p):
                coords[r, c] /= norm
    _fix_signs(coords, d, p)


# ---------------------------------------------------------------------------
# patch energy

cdef void _energy(double[:, :] coords, int d, int p, double[:, :] gram,
                  double[:, :] vec, double[:] lam, double[:] basis_row,
                  double[:, :] proj, double[:, :] wmat, double[:] colsum,
                  double[:, :] out):
    """out = W W^T with W = (E - ee^T/p)(E - Y^+ Y)."""
    cdef int i, j, c, r, idx
    cdef double acc, lam_max, tol, scale
    for i in range(p):
        for j in range(p):
            proj[i, j] = 0.0
    # row-space projector through the d x d Gram matrix
    for i in range(d):
        for j in range(i, d):
            acc = 0.0
            for c in range(p):
                acc += coords[i, c] * coords[j, c]
            gram[i, j] = acc
            gram[j, i] = acc
    _jacobi(gram[:d, :d], vec[:d, :d], lam[:d], d)
    lam_max = lam[d - 1]
    if lam_max > 0.0:
        tol = EIG_REL_TOL * lam_max
        for idx in range(d):
            if lam[idx] <= tol:
                continue
            scale = 1.0 / sqrt(lam[idx])
            for c in range(p):
                acc = 0.0
                for r in range(d):
                    acc += vec[r, idx] * coords[r, c]
                basis_row[c] = acc * scale
            for i in range(p):
                for j in range(p):
                    proj[i, j] += basis_row[i] * basis_row[j]
    # W = P - (1/p) ones P  with  P = I - proj
    for j in range(p):
        acc = 0.0
        for i in range(p):
            acc += (1.0 if i == j else 0.0) - proj[i, j]
        colsum[j] = acc / p
    for i in range(p):
        for j in range(p):
            wmat[i, j] = (1.0 if i == j else 0.0) - proj[i, j] - colsum[j]
    for i in range(p):
        for j in range(i, p):
            acc = 0.0
            for c in range(p):
                acc += wmat[i, c] * wmat[j, c]
            out[i, j] = acc
            out[j, i] = acc


cdef bint _any_nonzero(double[:, :] coords, int d, int p):
    cdef int r, c
    for r in range(d):
        for c in range(p):
            if coords[r, c] != 0.0:
                return True
    return False


# ---------------------------------------------------------------------------
# public surface (mirrors patchmatte._kernels_py)

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
    cdef double[:, :, ::1] cview = np.ascontiguousarray(colors, dtype=np.float64)
    cdef int n_patches = cview.shape[0]
    cdef int p = cview.shape[2]
    cdef int code = int(method)
    cdef int dim1 = int(d1)
    cdef int dim2 = int(d2) if code == METHOD_CASISO else 0
    cdef int kk = int(k)
    cdef double sig = -1.0 if sigma is None else float(sigma)
    if code not in (METHOD_PCA, METHOD_LE, METHOD_ISOMAP, METHOD_CASISO):
        raise ValueError(f"unknown method code {method}")
    if code == METHOD_PCA and dim1 > 3:
        raise ValueError("pca dimension cannot exceed the 3 color channels")

    out_arr = np.empty((n_patches, p, p))
    cdef double[:, :, ::1] out = out_arr
    cdef int d_final = dim2 if code == METHOD_CASISO else dim1

    # shared per-call scratch, reused across patches
    cdef double[:, ::1] dist = np.empty((p, p))
    cdef double[:, ::1] geo = np.empty((p, p))
    cdef double[:, ::1] bmat = np.empty((p, p))
    cdef double[:, ::1] vec = np.empty((p, p))
    cdef double[:, ::1] wmat = np.empty((p, p))
    cdef double[:, ::1] proj = np.empty((p, p))
    cdef double[:, ::1] gram = np.empty((p, p))
    cdef double[:, ::1] cov = np.empty((3, 3))
    cdef double[:, ::1] cvec = np.empty((3, 3))
    cdef double[:, ::1] coords1 = np.empty((dim1, p))
    cdef double[:, ::1] coords2 = np.empty((max(dim2, 1), p))
    cdef double[:] lam = np.empty(p)
    cdef double[:] rowmean = np.empty(p)
    cdef double[:] colsum = np.empty(p)
    cdef double[:] basis_row = np.empty(p)
    cdef double[:] mean3 = np.empty(3)
    cdef double[:] degree = np.empty(p)
    cdef double[:] dinvs = np.empty(p)
    cdef unsigned char[:, ::1] adj = np.empty((p, p), dtype=np.uint8)
    cdef unsigned char[:] used = np.empty(p, dtype=np.uint8)
    cdef long long[:] comp = np.empty(p, dtype=np.int64)
    cdef long long[:] stack = np.empty(p, dtype=np.int64)
    cdef long long[:] pick = np.empty(max(kk, 1), dtype=np.int64)

    cdef long long degenerate = 0, padded = 0, repaired = 0
    cdef int i, pad, rep
    cdef double[:, :] final_coords
    for i in range(n_patches):
        if code == METHOD_PCA:
            _pca(cview[i], p, dim1, coords1, cov, cvec, lam, mean3)
            final_coords = coords1
        elif code == METHOD_LE:
            _le(cview[i], p, dim1, kk, sig, coords1, dist, adj, wmat, bmat,
                vec, lam, degree, dinvs, comp, stack, used, pick)
            final_coords = coords1
        elif code == METHOD_ISOMAP:
            pad, rep = _isomap_stage(cview[i], 3, p, dim1, kk, coords1, dist,
                                     adj, geo, bmat, vec, lam, rowmean, comp,
                                     stack, used, pick)
            padded += pad
            repaired += rep
            final_coords = coords1
        else:
            pad, rep = _isomap_stage(cview[i], 3, p, dim1, kk, coords1, dist,
                                     adj, geo, bmat, vec, lam, rowmean, comp,
                                     stack, used, pick)
            padded += pad
            repaired += rep
            pad, rep = _isomap_stage(coords1, dim1, p, dim2, kk, coords2,
                                     dist, adj, geo, bmat, vec, lam, rowmean,
                                     comp, stack, used, pick)
            padded += pad
            repaired += rep
            final_coords = coords2
        if not _any_nonzero(final_coords, d_final, p):
            degenerate += 1
        _energy(final_coords, d_final, p, gram, vec, lam, basis_row, proj,
                wmat, colsum, out[i])
    return out_arr, np.array([degenerate, padded, repaired], dtype=np.int64)


def build_lle_rows(colors, center_local, k, reg):
    """Center-pixel reconstruction rows for the locally-linear method.

    colors: (P, 3, p) float64; center_local: (P,) local index of each
    patch's center pixel within its member list.
    Returns (neighbors, weights), both (P, k); neighbors index into the
    patch member list.
    """
    cdef double[:, :, ::1] cview = np.ascontiguousarray(colors, dtype=np.float64)
    cdef long long[:] centers = np.ascontiguousarray(center_local, dtype=np.int64)
    cdef int n_patches = cview.shape[0]
    cdef int p = cview.shape[2]
    cdef int kk = int(k)
    cdef double regc = float(reg)

    neigh_arr = np.empty((n_patches, kk), dtype=np.int32)
    weight_arr = np.empty((n_patches, kk))
    cdef int[:, ::1] neigh = neigh_arr
    cdef double[:, ::1] weights = weight_arr

    cdef double[:, ::1] dist = np.empty((p, p))
    cdef double[:, ::1] gram = np.empty((kk, kk))
    cdef double[:] rhs = np.empty(kk)
    cdef unsigned char[:] used = np.empty(p, dtype=np.uint8)
    cdef long long[:] pick = np.empty(kk, dtype=np.int64)

    cdef int i, r, a, b, c, center
    cdef double acc, trace, total
    cdef bint ok
    for i in range(n_patches):
        center = <int>centers[i]
        _pairwise(cview[i], 3, p, dist)
        _nearest(dist, p, center, kk, used, pick)
        for a in range(kk):
            neigh[i, a] = <int>pick[a]
        # gram of the neighbor offsets z_j = x_{n_j} - x_center
        trace = 0.0
        for a in range(kk):
            for b in range(a, kk):
                acc = 0.0
                for c in range(3):
                    acc += ((cview[i, c, pick[a]] - cview[i, c, center])
                            * (cview[i, c, pick[b]] - cview[i, c, center]))
                gram[a, b] = acc
                gram[b, a] = acc
            trace += gram[a, a]
        if trace <= 0.0:
            for a in range(kk):
                weights[i, a] = 1.0 / kk
            continue
        for a in range(kk):
            gram[a, a] += regc * trace / kk
            rhs[a] = 1.0
        ok = _solve_inplace(gram, rhs, kk)
        total = 0.0
        if ok:
            for a in range(kk):
                total += rhs[a]
        if (not ok) or total != total or fabs(total) < 1e-12 \
                or total == INFINITY or total == -INFINITY:
            for a in range(kk):
                weights[i, a] = 1.0 / kk
        else:
            for a in range(kk):
                weights[i, a] = rhs[a] / total
    return neigh_arr, weight_arr


cdef bint _solve_inplace(double[:, :] a, double[:] b, int n):
    """Gaussian elimination with partial pivoting; destroys a and b."""
    cdef int col, row, piv, j
    cdef double best, factor, tmp
    for col in range(n):
        piv = col
        best = fabs(a[col, col])
        for row in range(col + 1, n):
            if fabs(a[row, col]) > best:
                best = fabs(a[row, col])
                piv = row
        if best <= 0.0:
            return False
        if piv != col:
            for j in range(n):
                tmp = a[col, j]
                a[col, j] = a[piv, j]
                a[piv, j] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        for row in range(col + 1, n):
            factor = a[row, col] / a[col, col]
            if factor != 0.0:
                for j in range(col, n):
                    a[row, j] -= factor * a[col, j]
                b[row] -= factor * b[col]
    for col in range(n - 1, -1, -1):
        tmp = b[col]
        for j in range(col + 1, n):
            tmp -= a[col, j] * b[j]
        b[col] = tmp / a[col, col]
    return True
