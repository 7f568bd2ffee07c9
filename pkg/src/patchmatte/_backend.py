"""Kernel backend selection.

The compiled extension and the pure-Python module expose the same
functions; whichever is active is bound here at import time as ``kernels``.
Set PATCHMATTE_BACKEND=python or PATCHMATTE_BACKEND=compiled to force a
choice (forcing the compiled backend raises if the extension is absent).
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
    HAVE_COMPILED = True
except ImportError:
    _compiled = None
    HAVE_COMPILED = False

_forced = os.environ.get("PATCHMATTE_BACKEND", "").strip().lower()
if _forced not in ("", "compiled", "python"):
    raise RuntimeError(f"PATCHMATTE_BACKEND must be 'compiled' or 'python', got {_forced!r}")
if _forced == "compiled" and not HAVE_COMPILED:
    raise RuntimeError("PATCHMATTE_BACKEND=compiled but the extension is not built")

if _forced == "python" or not HAVE_COMPILED:
    kernels = _kernels_py
    BACKEND = "python"
else:
    kernels = _compiled
    BACKEND = "compiled"


def get_kernels(backend=None):
    """Kernel module for an explicit backend name, default the active one."""
    if backend in (None, ""):
        return kernels
    if backend == "python":
        return _kernels_py
    if backend == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled backend is not built")
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")
