"""Image, trimap and matte I/O plus deterministic resampling.

Conventions used throughout the package:

* an RGB image is a float64 array of shape (H, W, 3) with channels in [0, 1],
* a trimap is a uint8 array of shape (H, W) with values in
  {BACKGROUND, FOREGROUND, UNKNOWN},
* an alpha matte is a float64 array of shape (H, W) with values in [0, 1].

Dataset layout on disk: ``<root>/input/<name>.png``, ``<root>/trimap/<name>.png``
and ``<root>/gt/<name>.png``.
"""

from __future__ import annotations

import os

import cv2
import numpy as np

# Trimap labels.
BACKGROUND = 0
FOREGROUND = 1
UNKNOWN = 2

# Raw trimap files carry compression noise: values in [0, 10] count as
# background, [245, 255] as foreground, everything else as unknown.
_BG_MAX = 10
_FG_MIN = 245


def _read_raster(path):
    if not os.path.exists(path):
        raise FileNotFoundError(f"file not found: {path}")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ValueError(f"unreadable raster file: {path}")
    if raw.size == 0:
        raise ValueError(f"zero-area image: {path}")
    if raw.dtype == np.uint8:
        maxval = 255.0
    elif raw.dtype == np.uint16:
        maxval = 65535.0
    else:
        raise ValueError(f"unsupported bit depth {raw.dtype} in {path}")
    return raw, maxval


def load_image(path):
    """Load an 8- or 16-bit RGB raster (PNG or binary PPM) as float in [0, 1].

    Grayscale inputs are replicated to three channels. OpenCV returns BGR,
    so color images are flipped back to RGB order.
    """
    raw, maxval = _read_raster(path)
    if raw.ndim == 2:
        img = np.repeat(raw[:, :, None], 3, axis=2)
    elif raw.ndim == 3 and raw.shape[2] >= 3:
        img = raw[:, :, 2::-1]  # BGR(A) -> RGB, alpha dropped
    else:
        raise ValueError(f"unsupported channel layout {raw.shape} in {path}")
    return np.ascontiguousarray(img, dtype=np.float64) / maxval


def load_trimap(path):
    """Load a single-channel trimap into the 3-valued label alphabet."""
    raw, maxval = _read_raster(path)
    if raw.ndim == 3:
        raw = raw[:, :, 0]
    # Scale 16-bit files down to the 8-bit convention before thresholding.
    vals = np.rint(raw.astype(np.float64) * (255.0 / maxval))
    labels = np.full(vals.shape, UNKNOWN, dtype=np.uint8)
    labels[vals <= _BG_MAX] = BACKGROUND
    labels[vals >= _FG_MIN] = FOREGROUND
    return labels


def load_alpha(path):
    """Load an 8/16-bit grayscale matte (or ground truth) as float in [0, 1]."""
    raw, maxval = _read_raster(path)
    if raw.ndim == 3:
        raw = raw[:, :, 0]
    return raw.astype(np.float64) / maxval


def save_alpha(matte, path):
    """Write a matte as 8-bit single-channel PNG, value = round(alpha * 255)."""
    matte = np.asarray(matte, dtype=np.float64)
    if matte.min() < 0.0 or matte.max() > 1.0:
        raise ValueError("matte values outside [0, 1]")
    # round-half-up, so 0.5 -> 128
    data = np.floor(matte * 255.0 + 0.5).astype(np.uint8)
    if not cv2.imwrite(str(path), data):
        raise ValueError(f"cannot write {path}")


def save_image(img, path):
    """Write an RGB image in [0, 1] as 8-bit PNG."""
    data = np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    if not cv2.imwrite(str(path), data[:, :, ::-1]):
        raise ValueError(f"cannot write {path}")


def save_rgba(rgba, path):
    """Write an RGBA image in [0, 1] as 8-bit PNG with alpha."""
    data = np.floor(np.clip(rgba, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    bgra = data[:, :, [2, 1, 0, 3]]
    if not cv2.imwrite(str(path), bgra):
        raise ValueError(f"cannot write {path}")


def resize_image(img, shape):
    """Bilinear resampling to an (out_h, out_w) shape with half-pixel centers.

    Works on (H, W) and (H, W, C) arrays; output is clamped to [0, 1].
    Resizing to the input dimensions is the identity.
    """
    img = np.asarray(img, dtype=np.float64)
    out_h, out_w = shape
    if out_h < 1 or out_w < 1:
        raise ValueError("target dimensions must be >= 1")
    h, w = img.shape[:2]
    if (out_h, out_w) == (h, w):
        return img.copy()

    src_r = _source_coords(out_h, h)
    src_c = _source_coords(out_w, w)
    r0 = np.floor(src_r).astype(np.intp)
    c0 = np.floor(src_c).astype(np.intp)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = (src_r - r0)[:, None]
    fc = (src_c - c0)[None, :]
    if img.ndim == 3:
        fr = fr[:, :, None]
        fc = fc[:, :, None]

    top = img[r0][:, c0] * (1.0 - fc) + img[r0][:, c1] * fc
    bot = img[r1][:, c0] * (1.0 - fc) + img[r1][:, c1] * fc
    out = top * (1.0 - fr) + bot * fr
    return np.clip(out, 0.0, 1.0)


def resize_trimap(trimap, shape):
    """Nearest-neighbor resampling; preserves the 3-label alphabet."""
    trimap = np.asarray(trimap)
    out_h, out_w = shape
    if out_h < 1 or out_w < 1:
        raise ValueError("target dimensions must be >= 1")
    h, w = trimap.shape
    if (out_h, out_w) == (h, w):
        return trimap.copy()
    rows = np.minimum(np.floor((np.arange(out_h) + 0.5) * h / out_h), h - 1).astype(np.intp)
    cols = np.minimum(np.floor((np.arange(out_w) + 0.5) * w / out_w), w - 1).astype(np.intp)
    return trimap[rows][:, cols].copy()


def _source_coords(n_out, n_in):
    # half-pixel-center convention, clamped to the valid sample range
    coords = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    return np.clip(coords, 0.0, n_in - 1)


def validate_image(img):
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got {img.shape}")
    if img.size and (img.min() < 0.0 or img.max() > 1.0):
        raise ValueError("image channels outside [0, 1]")
    return img


def validate_trimap(trimap, shape=None):
    trimap = np.asarray(trimap)
    if trimap.ndim != 2:
        raise ValueError(f"expected (H, W) trimap, got {trimap.shape}")
    if not np.isin(trimap, (BACKGROUND, FOREGROUND, UNKNOWN)).all():
        raise ValueError("trimap labels outside the 3-valued alphabet")
    if shape is not None and trimap.shape != tuple(shape):
        raise ValueError(
            f"trimap dimensions {trimap.shape} do not match image {tuple(shape)}")
    return trimap
