"""Simplex-constrained convex minimization.

Everything here works on the unit simplex ``{x >= 0, sum(x) = 1}``. The main
solver is exponentiated gradient (entropic mirror descent) with an Armijo
backtracking step; iterates stay strictly feasible by construction.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ValueAndGrad = Callable[[np.ndarray], "tuple[float, np.ndarray]"]

ARMIJO_C = 1e-4
MIN_STEP = 1e-30
MAX_STEP = 1e12


class SolverFailure(RuntimeError):
    """Raised when a solve cannot produce a trustworthy minimizer."""

    def __init__(self, message: str, last_iterate=None, residual: float = float("nan")):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


@dataclass
class SolveReport:
    minimizer: np.ndarray
    objective: float
    iterations: int
    converged: bool
    residual: float
    trace: list[float] = field(default_factory=list, repr=False)


def fw_gap(x: np.ndarray, grad: np.ndarray) -> float:
    """Frank-Wolfe duality gap ``<g, x> - min(g)``.

    Zero exactly at first-order stationary points of the simplex problem, and an
    upper bound on ``f(x) - f*`` for convex ``f``.
    """
    return float(max(grad @ x - grad.min(), 0.0))


def minimize_on_simplex(
    objective: ValueAndGrad,
    init,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    record_trace: bool = False,
) -> SolveReport:
    """Minimize a convex function over the simplex by exponentiated gradient.

    ``objective(x)`` must return ``(value, gradient)``. Each iteration tries
    twice the previously accepted step (1.0 on the first iteration) and halves
    it until the Armijo condition holds, so the objective sequence is
    non-increasing. Stops once the Frank-Wolfe gap is ``<= tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    x = np.asarray(init, dtype=float).copy()
    if x.ndim != 1 or np.any(x < 0) or abs(x.sum() - 1.0) > 1e-9:
        raise ValueError("init must be a probability vector")
    f0, g0 = objective(x)
    if not np.isfinite(f0):
        raise SolverFailure("objective is not finite at the initial point", x, float("nan"))
    if np.all(np.isfinite(g0)) and fw_gap(x, g0) <= tol:
        return SolveReport(x, f0, 0, True, fw_gap(x, g0), [f0] if record_trace else [])
    start = x.copy()
    # mirror descent cannot leave a face it starts on; nudge off the boundary
    if np.any(x <= 0):
        x = 0.999 * x + 0.001 / x.size
    x /= x.sum()

    f, g = objective(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise SolverFailure("objective is not finite at the initial point", x, float("nan"))
    trace = [f] if record_trace else []
    res = fw_gap(x, g)
    it = 0
    step = 0.5
    while res > tol and it < max_iter:
        it += 1
        shifted = g - g.min()
        step = min(2.0 * step, MAX_STEP)
        while True:
            y = x * np.exp(-step * shifted)
            y /= y.sum()
            f_new, g_new = objective(y)
            if np.isfinite(f_new) and f_new <= f + ARMIJO_C * (g @ (y - x)):
                break
            step *= 0.5
            if step < MIN_STEP:
                break
        if step < MIN_STEP:
            # no representable descent step left; x is as good as we can do
            break
        if not np.all(np.isfinite(g_new)):
            raise SolverFailure("non-finite gradient during descent", y, res)
        x, f, g = y, f_new, g_new
        res = fw_gap(x, g)
        if record_trace:
            trace.append(f)
    if f0 < f:
        return SolveReport(start, f0, it, res <= tol, res, trace)
    return SolveReport(x, f, it, res <= tol, res, trace)


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("v must be a nonempty vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    rho = np.nonzero(u + (1.0 - css) / ks > 0)[0][-1]
    theta = (1.0 - css[rho]) / (rho + 1)
    w = np.maximum(v + theta, 0.0)
    return w / w.sum()


@functools.lru_cache(maxsize=32)
def simplex_lattice(k: int, m: int) -> np.ndarray:
    """Integer compositions of ``m`` into ``k`` parts (lattice points times ``m``)."""
    if k == 1:
        return np.array([[m]], dtype=np.int64)
    if k == 2:
        first = np.arange(m + 1, dtype=np.int64)
        return np.column_stack([first, m - first])
    blocks = []
    for first in range(m + 1):
        rest = simplex_lattice(k - 1, m - first)
        blocks.append(np.column_stack([np.full(len(rest), first), rest]))
    return np.vstack(blocks)


def brute_force_simplex_min(
    objective: Callable[[np.ndarray], np.ndarray],
    k: int,
    resolution: float = 0.01,
) -> SolveReport:
    """Exhaustive lattice search, used as an oracle for the iterative solver.

    ``objective`` is evaluated on a ``(M, k)`` array of lattice points and must
    return ``M`` values.
    """
    if k > 4:
        raise ValueError(f"support size {k} too large for exhaustive search (max 4)")
    if not 0 < resolution <= 0.1:
        raise ValueError("resolution must be in (0, 0.1]")
    m = int(round(1.0 / resolution))
    pts = simplex_lattice(k, m) / m
    vals = np.asarray(objective(pts), dtype=float)
    vals = np.where(np.isnan(vals), np.inf, vals)
    best = int(np.argmin(vals))
    return SolveReport(pts[best], float(vals[best]), len(pts), True, float(resolution))
