"""Box-constrained accelerated projected-gradient solver.

Minimizes f(a) = a^T A a + b^T a over [0, 1]^N for the symmetric PSD
quadratics produced by the alignment module. The iteration extrapolates a
search point from the last two iterates, takes a projected gradient step
whose curvature constant comes from a backtracking line search, and (by
default) accepts the step only when the objective does not increase,
restarting the momentum otherwise. This keeps the objective trace
non-increasing while retaining the accelerated rate on the accepted steps.

The momentum weights follow the standard sequence
t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2, beta_k = (t_{k-1} - 1) / t_k.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

INIT_MODES = ("trimap_fill", "half")

# line-search model slack and growth cap; round-off protection only
_LS_SLACK = 1e-12
_LS_MAX_GROWTHS = 200


@dataclass
class SolverConfig:
    max_iters: int = 250
    c0: float = 1.0          # initial curvature estimate
    c_growth: float = 2.0    # backtracking multiplier
    tol: float = 1e-8        # relative objective-change stopping threshold
    monotone: bool = True
    init: str = "trimap_fill"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.c0 <= 0:
            raise ValueError("c0 must be > 0")
        if self.c_growth <= 1:
            raise ValueError("c_growth must be > 1")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}, got {self.init!r}")


@dataclass
class SolverTrace:
    """Objective and step-size history of one solve.

    objective[k] and step_c[k] describe iteration k+1 (the value after the
    step and the curvature constant the line search accepted for it);
    initial_objective is f at the starting point.
    """

    objective: np.ndarray = field(default_factory=lambda: np.empty(0))
    step_c: np.ndarray = field(default_factory=lambda: np.empty(0))
    iterations_run: int = 0
    converged: bool = False
    initial_objective: float = np.nan

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "objective", "step_c"])
            for k in range(self.iterations_run):
                writer.writerow([k + 1, f"{self.objective[k]:.12g}",
                                 f"{self.step_c[k]:.12g}"])


def objective(problem, a):
    """f(a) = a^T A a + b^T a (+ the problem's constant)."""
    return problem.objective(np.asarray(a, dtype=np.float64))


def gradient(problem, a):
    """grad f(a) = 2 A a + b for symmetric A."""
    return problem.gradient(np.asarray(a, dtype=np.float64))


def project_box(v):
    """Componentwise clamp to [0, 1]."""
    return np.clip(v, 0.0, 1.0)


def initialize(problem, mode="trimap_fill"):
    """Starting vector: labeled pixels at their target, the rest at 0.5."""
    n = problem.n
    a0 = np.full(n, 0.5)
    if mode == "half":
        return a0
    if mode != "trimap_fill":
        raise ValueError(f"unknown init mode {mode!r}")
    if problem.known_mask is not None:
        a0[problem.known_mask] = problem.known_values[problem.known_mask]
    return a0


def nesterov_solve(problem, config=None, callback=None):
    """Minimize the problem over the unit box; returns (solution, trace).

    callback, when given, is invoked as callback(k, a) with the iterate
    after every iteration (k starts at 1).

    The line search warm-starts each iteration from the previously accepted
    curvature constant shrunk by one growth factor, then grows it until the
    quadratic model at the search point upper-bounds f at the candidate.
    A candidate that would increase the objective is rejected under
    monotone acceptance: the iterate is kept and the momentum sequence
    restarts from t = 1, which makes the following step plain projected
    gradient and therefore acceptable.
    """
    if config is None:
        config = SolverConfig()
    a = initialize(problem, config.init)
    a_prev = a.copy()
    f_curr = problem.objective(a)
    if not np.isfinite(f_curr):
        raise RuntimeError("non-finite objective at the starting point")

    trace = SolverTrace(initial_objective=f_curr)
    obj_hist = []
    c_hist = []
    t = 1.0
    c = config.c0
    converged = False
    iters = 0

    for k in range(1, config.max_iters + 1):
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_next
        s = a + beta * (a - a_prev)

        f_s = problem.objective(s)
        g_s = problem.gradient(s)
        if not np.isfinite(f_s):
            raise RuntimeError(f"non-finite objective at iteration {k}")

        c = max(c / config.c_growth, np.finfo(np.float64).tiny)
        slack = _LS_SLACK * (1.0 + abs(f_s))
        for _ in range(_LS_MAX_GROWTHS):
            cand = project_box(s - g_s / c)
            step = cand - s
            model = f_s + g_s @ step + 0.5 * c * (step @ step)
            f_cand = problem.objective(cand)
            if f_cand <= model + slack:
                break
            c *= config.c_growth
        else:
            raise RuntimeError(f"line search failed to bound f at iteration {k}")
        if not np.isfinite(f_cand):
            raise RuntimeError(f"non-finite objective at iteration {k}")

        iters = k
        c_hist.append(c)
        if config.monotone and f_cand > f_curr:
            # rejected: keep the iterate, restart momentum; the restarted
            # step is plain projected gradient and cannot be rejected again
            obj_hist.append(f_curr)
            a_prev = a.copy()
            t = 1.0
            if callback is not None:
                callback(k, a)
            continue

        # An extrapolated step that projects back onto the unchanged iterate
        # is a momentum overshoot, not convergence: f is unchanged but the
        # point need not be stationary. Skip the stopping test there; the
        # next iteration has a == a_prev and proceeds as plain projected
        # gradient, so a true fixed point still stops (with s == a).
        overshoot = np.array_equal(cand, a) and not np.array_equal(s, a)
        a_prev = a
        a = cand
        t = t_next
        delta = abs(f_curr - f_cand)
        f_curr = f_cand
        obj_hist.append(f_curr)
        if callback is not None:
            callback(k, a)
        if delta <= config.tol * max(1.0, abs(f_curr)) and not overshoot:
            converged = True
            break

    trace.objective = np.array(obj_hist)
    trace.step_c = np.array(c_hist)
    trace.iterations_run = iters
    trace.converged = converged
    return a, trace
