"""Sliding-window patch extraction and pixel/patch index bookkeeping.

Every patch holds exactly p = window**2 pixels: at image borders the window
is shifted (clamped) to lie fully inside the image, so the per-patch matrix
dimensions stay constant. Member order is row-major within the shifted
window. The member index arrays realize the 0/1 selection matrices of the
global energy implicitly; ``scatter_add`` is the S_i L_i S_i^T accumulation
without ever materializing a selection matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Patch:
    """One local window: center pixel, ordered member indices, 3 x p colors."""

    center: int
    members: np.ndarray  # (p,) int32 linear pixel indices
    colors: np.ndarray   # (3, p) float64, column j = RGB of members[j]


class PatchSet:
    """All patches of an image for a given window/stride.

    Array-of-struct views are available through indexing; the bulk arrays
    (``members``, ``centers``, ``colors``) are what the assembly kernels
    consume.
    """

    def __init__(self, members, centers, colors, image_shape, window, stride):
        self.members = members          # (P, p) int32
        self.centers = centers          # (P,) int32
        self.colors = colors            # (P, 3, p) float64, C-contiguous
        self.image_shape = image_shape  # (h, w)
        self.window = window
        self.stride = stride

    @property
    def n_pixels(self):
        return self.image_shape[0] * self.image_shape[1]

    @property
    def p(self):
        return self.window * self.window

    def __len__(self):
        return self.members.shape[0]

    def __getitem__(self, i):
        return Patch(int(self.centers[i]), self.members[i], self.colors[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def patches(self):
        return [self[i] for i in range(len(self))]

    @property
    def covered(self):
        """Boolean (n_pixels,) mask of pixels that belong to some patch."""
        mask = np.zeros(self.n_pixels, dtype=bool)
        mask[self.members.ravel()] = True
        return mask


def extract_patches(img, window=3, stride=1):
    """Enumerate clamped windows on the stride grid of `img`.

    Centers live on ``range(0, h, stride) x range(0, w, stride)``; with
    stride 1 every pixel is the center of exactly one patch.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and >= 3")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if h < window or w < window:
        raise ValueError(f"image {h}x{w} smaller than window {window}")

    half = window // 2
    rows = np.arange(0, h, stride)
    cols = np.arange(0, w, stride)
    top = np.clip(rows - half, 0, h - window)
    left = np.clip(cols - half, 0, w - window)

    # row-major offsets within a window
    dr, dc = np.divmod(np.arange(window * window), window)
    member_rows = top[:, None, None] + dr[None, None, :]    # (nr, 1, p)
    member_cols = left[None, :, None] + dc[None, None, :]   # (1, nc, p)
    members = (member_rows * w + member_cols).reshape(-1, window * window)
    members = np.ascontiguousarray(members, dtype=np.int32)

    centers = (rows[:, None] * w + cols[None, :]).reshape(-1).astype(np.int32)

    flat = img.reshape(h * w, 3)
    colors = np.ascontiguousarray(
        flat[members].transpose(0, 2, 1))  # (P, 3, p)

    return PatchSet(members, centers, colors, (h, w), window, stride)


class Accumulator:
    """Sparse symmetric-matrix accumulator built from patch contributions."""

    def __init__(self, n):
        self.n = n
        self._rows = []
        self._cols = []
        self._data = []

    def add(self, members, local):
        scatter_add(self, members, local)

    def tocsr(self):
        from scipy import sparse

        if not self._data:
            return sparse.csr_matrix((self.n, self.n))
        rows = np.concatenate(self._rows)
        cols = np.concatenate(self._cols)
        data = np.concatenate(self._data)
        mat = sparse.coo_matrix((data, (rows, cols)), shape=(self.n, self.n))
        out = mat.tocsr()
        out.sum_duplicates()
        out.sort_indices()
        return out


def scatter_add(acc, members, local):
    """Accumulate ``M[members[r], members[c]] += local[r, c]`` for all r, c.

    `members` may be a Patch or a flat index array; `local` must be p x p.
    Accumulation order is the call order, so results are deterministic for a
    fixed patch ordering.
    """
    if isinstance(members, Patch):
        members = members.members
    members = np.asarray(members)
    local = np.asarray(local, dtype=np.float64)
    p = members.shape[0]
    if local.shape != (p, p):
        raise ValueError(f"local matrix {local.shape} does not match p={p}")
    if members.min() < 0 or members.max() >= acc.n:
        raise IndexError("member index out of range")
    acc._rows.append(np.repeat(members, p))
    acc._cols.append(np.tile(members, p))
    acc._data.append(local.ravel().copy())
