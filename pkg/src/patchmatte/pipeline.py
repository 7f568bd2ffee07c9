"""End-to-end matting pipeline and its run configuration.

One matte computation runs: optional resize to the working resolution,
sliding-window patch extraction, per-patch subspace modeling, sparse
alignment assembly, trimap data term, accelerated projected-gradient solve,
and a final overwrite of the labeled pixels with their trimap values.

RunConfig carries every knob end to end and round-trips through a flat
``key=value`` text format (one pair per line, ``#`` comments allowed) so
batch runs are reproducible from a single file.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields, replace

import numpy as np

from . import imaging
from .alignment import apply_trimap_prior, assemble_alignment, dump_matrix
from .modelers import ModelerConfig
from .patching import extract_patches
from .solver import SolverConfig, nesterov_solve

log = logging.getLogger("patchmatte")


@dataclass
class RunConfig:
    """Full pipeline configuration with the method defaults."""

    method: str = "casiso"
    dims: tuple = None        # None = method default (2, or (3, 3) cascade)
    k: int = 4
    lle_reg: float = 1e-3
    le_sigma: float = None
    window: int = 3
    stride: int = 1
    lam: float = 100.0        # trimap pull strength
    iters: int = 250
    c0: float = 1.0
    c_growth: float = 2.0
    tol: float = 1e-8
    monotone: bool = True
    init: str = "trimap_fill"
    resize: tuple = None      # (h, w) working resolution, None = native
    workers: int = 1
    out: str = None

    def __post_init__(self):
        self.dims = self.modeler_config().dims   # validate + resolve defaults
        self.solver_config()
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.resize is not None:
            h, w = self.resize
            if h < 1 or w < 1:
                raise ValueError("resize dimensions must be positive")
            self.resize = (int(h), int(w))

    def modeler_config(self):
        return ModelerConfig(method=self.method, dims=self.dims, k=self.k,
                             lle_reg=self.lle_reg, le_sigma=self.le_sigma)

    def solver_config(self):
        return SolverConfig(max_iters=self.iters, c0=self.c0,
                            c_growth=self.c_growth, tol=self.tol,
                            monotone=self.monotone, init=self.init)

    def with_overrides(self, **kv):
        return replace(self, **kv)


@dataclass
class MatteResult:
    """Solved matte plus the run's traces and counters."""

    matte: np.ndarray             # (h, w) in [0, 1]
    trace: object                 # SolverTrace
    diagnostics: object           # AssemblyDiagnostics

    @property
    def iterations(self):
        return self.trace.iterations_run


def compute_matte(image, trimap, config=None, backend=None, matrix_out=None):
    """Run the full pipeline on an image / trimap pair.

    image: (h, w, 3) floats in [0, 1]; trimap: (h, w) label image.
    Labeled pixels are soft constraints during the solve and are overwritten
    with their trimap values afterwards, so the output honors the trimap
    exactly wherever it is definite. matrix_out, when given, receives the
    assembled alignment matrix in Matrix Market format.
    """
    if config is None:
        config = RunConfig()
    imaging.validate_image(image)
    imaging.validate_trimap(trimap, image.shape[:2])

    if config.resize is not None:
        image = imaging.resize_image(image, config.resize)
        trimap = imaging.resize_trimap(trimap, config.resize)
    h, w = trimap.shape

    if (trimap == imaging.UNKNOWN).all():
        log.warning("trimap labels every pixel unknown; the solution is "
                    "unconstrained up to the alignment null space")

    patches = extract_patches(image, window=config.window, stride=config.stride)

    matrix, diag = assemble_alignment(patches, config.modeler_config(),
                                      backend=backend)
    log.info("alignment: %s", diag.summary())
    if matrix_out is not None:
        dump_matrix(matrix, matrix_out)
    problem = apply_trimap_prior(matrix, trimap, lam=config.lam)
    solution, trace = nesterov_solve(problem, config.solver_config())

    if not patches.covered.all():
        _fill_uncovered(solution, patches, (h, w))
    solution[problem.known_mask] = problem.known_values[problem.known_mask]
    matte = solution.reshape(h, w)
    return MatteResult(matte=matte, trace=trace, diagnostics=diag)


def _fill_uncovered(solution, patches, shape):
    """Give pixels outside every patch the nearest patch center's value.

    Only reachable when stride exceeds the window. Distances are squared
    integer grid distances; ties go to the first center in scan order.
    """
    h, w = shape
    missing = np.flatnonzero(~patches.covered)
    log.info("stride %d leaves %d pixels uncovered; filling from nearest "
             "patch centers", patches.stride, missing.size)
    centers = patches.centers.astype(np.int64)
    crow, ccol = centers // w, centers % w
    mrow, mcol = missing // w, missing % w
    d2 = ((mrow[:, None] - crow[None, :]) ** 2
          + (mcol[:, None] - ccol[None, :]) ** 2)
    solution[missing] = solution[centers[np.argmin(d2, axis=1)]]


# ---------------------------------------------------------------------------
# flat key=value configuration files

_INT_KEYS = ("k", "window", "stride", "iters", "workers")
_FLOAT_KEYS = ("lle_reg", "le_sigma", "lam", "c0", "c_growth", "tol")


def parse_dims(text, method):
    """Dimension schedule from its dash-joined string form.

    Plain methods take a single number ("2"). The cascade takes "d1-d2" or
    the full source-inclusive form "3-d1-d2" whose leading 3 names the color
    space dimension and is dropped.
    """
    parts = [p for p in str(text).strip().split("-") if p]
    if not parts:
        raise ValueError("empty dims")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise ValueError(f"bad dims {text!r}") from None
    if method == "casiso":
        if len(nums) == 3:
            if nums[0] != 3:
                raise ValueError(f"cascade schedule {text!r} must start from "
                                 "the 3 color channels")
            nums = nums[1:]
        if len(nums) != 2:
            raise ValueError(f"cascade dims need two stages, got {text!r}")
        return tuple(nums)
    if len(nums) != 1:
        raise ValueError(f"method {method} takes one dimension, got {text!r}")
    return (nums[0],)


def format_dims(dims, method):
    if method == "casiso":
        return "3-%d-%d" % tuple(dims)
    return "%d" % dims[0]


def parse_resize(text):
    s = str(text).strip().lower()
    if s in ("", "none"):
        return None
    try:
        h, w = s.split("x")
        return (int(h), int(w))
    except ValueError:
        raise ValueError(f"bad resize {text!r}, expected HxW") from None


def format_resize(resize):
    return "none" if resize is None else "%dx%d" % resize


def _parse_bool(text):
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"bad boolean {text!r}")


def config_from_pairs(pairs, base=None):
    """RunConfig from {key: string} pairs layered over a base config."""
    cfg = base if base is not None else RunConfig()
    kv = dict(cfg.__dict__)
    pairs = dict(pairs)
    if "method" in pairs:
        kv["method"] = pairs.pop("method").strip()
        if "dims" not in pairs:
            kv["dims"] = None   # method change resets the schedule default
    for key, raw in pairs.items():
        name = "lam" if key == "lambda" else key
        if name not in kv:
            raise ValueError(f"unknown configuration key {key!r}")
        kv[name] = _parse_value(name, raw, kv["method"])
    return RunConfig(**kv)


def _parse_value(name, raw, method):
    raw = str(raw).strip()
    if name == "dims":
        return parse_dims(raw, method)
    if name == "resize":
        return parse_resize(raw)
    if name == "monotone":
        return _parse_bool(raw)
    if name in ("le_sigma", "out") and raw.lower() in ("", "none"):
        return None
    if name in _INT_KEYS:
        return int(raw)
    if name in _FLOAT_KEYS:
        return float(raw)
    return raw


def read_config_pairs(path):
    """Raw {key: string} pairs of a flat key=value configuration file."""
    pairs = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {text!r}")
            key, _, value = text.partition("=")
            pairs[key.strip()] = value.strip()
    return pairs


def parse_config_file(path, base=None):
    """Read a flat key=value configuration file."""
    return config_from_pairs(read_config_pairs(path), base=base)


def serialize_config(cfg):
    """Flat key=value text for a RunConfig; parses back to an equal config."""
    lines = []
    for f in fields(RunConfig):
        name = f.name
        value = getattr(cfg, name)
        key = "lambda" if name == "lam" else name
        if name == "dims":
            text = format_dims(value, cfg.method)
        elif name == "resize":
            text = format_resize(value)
        elif name == "monotone":
            text = "true" if value else "false"
        elif value is None:
            text = "none"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key}={text}")
    return "\n".join(lines) + "\n"


def write_config_file(cfg, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(serialize_config(cfg))
