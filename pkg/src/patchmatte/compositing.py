"""Foreground extraction and compositing per the matting equation.

The foreground layer is kept premultiplied: color = alpha * F, so pasting
onto a new background is a single fused multiply-add (the "over" operator).
Estimating the true foreground colors from alpha alone is underdetermined;
we use the approximation alpha * F ~ alpha * I, which is exact wherever
alpha is 0 or 1 and differs by alpha * (1 - alpha) * (B - F) elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RgbaImage:
    """Premultiplied RGBA layer, all channels in [0, 1]."""

    data: np.ndarray   # (h, w, 4): premultiplied r, g, b then alpha

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 3 or d.shape[2] != 4:
            raise ValueError(f"expected (h, w, 4) data, got {d.shape}")
        if d.min() < 0.0 or d.max() > 1.0:
            raise ValueError("channels outside [0, 1]")
        if (d[:, :, :3] > d[:, :, 3:4] + 1e-9).any():
            raise ValueError("color exceeds alpha; layer is not premultiplied")
        self.data = d

    @property
    def color(self):
        return self.data[:, :, :3]

    @property
    def alpha(self):
        return self.data[:, :, 3]


def extract_foreground(image, matte):
    """Premultiplied foreground layer of an image under a matte."""
    image = np.asarray(image, dtype=np.float64)
    matte = np.asarray(matte, dtype=np.float64)
    if image.shape[:2] != matte.shape:
        raise ValueError(f"shape mismatch {image.shape[:2]} vs {matte.shape}")
    data = np.empty(image.shape[:2] + (4,))
    data[:, :, :3] = matte[:, :, None] * image
    data[:, :, 3] = matte
    return RgbaImage(np.clip(data, 0.0, 1.0))


def composite(fg, bg):
    """Foreground layer over a background image, clamped to [0, 1]."""
    bg = np.asarray(bg, dtype=np.float64)
    if bg.shape[:2] != fg.data.shape[:2]:
        raise ValueError(f"shape mismatch {fg.data.shape[:2]} vs {bg.shape[:2]}")
    out = fg.color + (1.0 - fg.alpha)[:, :, None] * bg
    return np.clip(out, 0.0, 1.0)
