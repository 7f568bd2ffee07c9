"""Alpha matting through patch-wise manifold alignment.

The pipeline models every image patch as a low-dimensional subspace of
color space (principal axes, geodesic embeddings, graph Laplacians, or
locally-linear weights), assembles the per-patch reconstruction energies
into one sparse PSD quadratic over the matte, adds the trimap as a soft
data term, and minimizes over [0, 1]^N with an accelerated projected
gradient method.
"""

from ._backend import BACKEND, HAVE_COMPILED, get_kernels
from .alignment import (AssemblyDiagnostics, QuadraticProblem,
                        apply_trimap_prior, assemble_alignment, dump_matrix)
from .compositing import RgbaImage, composite, extract_foreground
from .evaluation import (MetricRecord, SweepSpec, make_synthetic_case, mse,
                         run_benchmark, run_sweep, sad, write_synthetic_dataset)
from .imaging import (load_alpha, load_image, load_trimap, resize_image,
                      resize_trimap, save_alpha, save_image, save_rgba)
from .modelers import ModelerConfig, SubspaceCoords
from .patching import Patch, PatchSet, extract_patches
from .pipeline import (MatteResult, RunConfig, compute_matte,
                       parse_config_file, serialize_config)
from .solver import (SolverConfig, SolverTrace, gradient, initialize,
                     nesterov_solve, objective, project_box)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "HAVE_COMPILED", "get_kernels",
    "AssemblyDiagnostics", "QuadraticProblem", "apply_trimap_prior",
    "assemble_alignment", "dump_matrix",
    "RgbaImage", "composite", "extract_foreground",
    "MetricRecord", "SweepSpec", "make_synthetic_case", "mse",
    "run_benchmark", "run_sweep", "sad", "write_synthetic_dataset",
    "load_alpha", "load_image", "load_trimap", "resize_image",
    "resize_trimap", "save_alpha", "save_image", "save_rgba",
    "ModelerConfig", "SubspaceCoords",
    "Patch", "PatchSet", "extract_patches",
    "MatteResult", "RunConfig", "compute_matte",
    "parse_config_file", "serialize_config",
    "SolverConfig", "SolverTrace", "gradient", "initialize",
    "nesterov_solve", "objective", "project_box",
    "__version__",
]
