"""The sender: target choice, manipulation tests and signal design in two frames.

In the partial frame Alice transmits only a vector of per-choice mean rewards,
chosen so that Bob's blended means match her own as closely as feasibility
allows (squared loss). In the complete frame she transmits a full belief and
minimizes KL(p || alpha * pi + (1 - alpha) * q) over each marginal simplex.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .optim import SolveReport, SolverFailure, fw_gap, minimize_on_simplex, project_to_simplex
from .receiver import DecisionRule, ReceiverState, blended_means
from .simplex import R_MAX, R_MIN, BeliefMode, BeliefSet, kl_divergence

MANIPULATION_TOL = 1e-9
TIE_ATOL = 1e-12


class Frame(str, enum.Enum):
    PARTIAL = "partial"
    COMPLETE = "complete"


@dataclass(frozen=True, eq=False)
class Signal:
    frame: Frame
    means: np.ndarray | None = None
    distribution: BeliefSet | None = None

    def __post_init__(self):
        frame = Frame(self.frame)
        object.__setattr__(self, "frame", frame)
        if frame is Frame.PARTIAL:
            if self.means is None:
                raise ValueError("a partial signal carries a mean vector")
            m = np.array(self.means, dtype=float)
            m.setflags(write=False)
            object.__setattr__(self, "means", m)
        elif self.distribution is None:
            raise ValueError("a complete signal carries a distribution")

    @classmethod
    def partial(cls, means, bounds: tuple[float, float] = (R_MIN, R_MAX)) -> Signal:
        m = np.asarray(means, dtype=float)
        lo, hi = bounds
        if np.any(m < lo - 1e-9) or np.any(m > hi + 1e-9):
            raise ValueError(f"transmitted means must lie in [{lo}, {hi}]")
        return cls(Frame.PARTIAL, means=m)

    @classmethod
    def complete(cls, distribution: BeliefSet) -> Signal:
        return cls(Frame.COMPLETE, distribution=distribution)

    def expected_rewards(self) -> np.ndarray:
        if self.frame is Frame.PARTIAL:
            return self.means
        return self.distribution.means()


@dataclass(frozen=True)
class SenderResult:
    signal: Signal
    target_choice: int
    manipulated: bool
    objective_value: float
    solver_iterations: int = 0
    degenerate: bool = False
    # True when box clamping / simplex projection / an infeasible KL problem kept
    # Bob's posterior away from Alice's belief
    constrained: bool = False


def target_choice(p: BeliefSet) -> int:
    """Alice's preferred choice: lowest-index argmax of her expected rewards."""
    return int(np.argmax(p.means()))


def persuasion_condition_holds(
    signal, state: ReceiverState, n_star: int, strict: bool = False
) -> bool:
    """Whether Bob's blended means put ``n_star`` on top.

    Non-strict comparisons allow ``TIE_ATOL`` of rounding slack.
    """
    y = blended_means(signal, state)
    if not 0 <= n_star < y.size:
        raise IndexError(f"target choice {n_star} out of range")
    others = np.delete(y, n_star)
    if strict:
        return bool(np.all(y[n_star] > others))
    return bool(np.all(y[n_star] >= others - TIE_ATOL))


def needs_manipulation(p: BeliefSet, state: ReceiverState) -> bool:
    """Whether a truthful signal would fail to steer Bob to Alice's target."""
    if not p.same_shape(state.prior):
        raise ValueError("Alice's and Bob's beliefs have mismatched shapes")
    if state.alpha == 0.0:
        return False
    n_star = target_choice(p)
    a = state.alpha
    y = a * p.means() + (1.0 - a) * state.prior_means()
    return bool(np.any(y > y[n_star]))


def expected_utility_alice(psi, p: BeliefSet) -> float:
    psi = psi.psi if isinstance(psi, DecisionRule) else np.asarray(psi, dtype=float)
    ep = p.means()
    if psi.shape != ep.shape:
        raise ValueError(f"decision rule {psi.shape} and beliefs {ep.shape} disagree")
    return float(psi @ ep)


def _is_manipulated(means: np.ndarray, truth: np.ndarray) -> bool:
    return bool(np.max(np.abs(means - truth)) > MANIPULATION_TOL)


def _squared_loss(alpha, m, eq, ep) -> float:
    return float(np.sum((alpha * m + (1.0 - alpha) * eq - ep) ** 2))


def design_partial(p: BeliefSet, state: ReceiverState) -> SenderResult:
    """Mean vector minimizing the squared mismatch of Bob's posterior means.

    Grid beliefs: box-constrained closed form, clamped per coordinate.
    Categorical beliefs: the implied weights are projected onto the simplex.
    """
    if not p.same_shape(state.prior):
        raise ValueError("Alice's and Bob's beliefs have mismatched shapes")
    ep, eq, a = p.means(), state.prior_means(), state.alpha
    n_star = target_choice(p)
    if a == 0.0:
        # Bob ignores the signal entirely; send the truth
        return SenderResult(Signal.partial(ep, _bounds(p)), n_star, False, _squared_loss(a, ep, eq, ep), degenerate=True)

    if p.mode is BeliefMode.GRID:
        lo, hi = _bounds(p)
        raw = (ep - (1.0 - a) * eq) / a
        m = np.clip(raw, lo, hi)
        constrained = bool(np.any(m != raw))
    else:
        raw = (p.weights - (1.0 - a) * state.prior.weights) / a
        constrained = bool(np.any(raw < 0))
        w = project_to_simplex(raw) if constrained else raw / raw.sum()
        m = w * p.scale
    loss = _squared_loss(a, m, eq, ep)
    return SenderResult(
        Signal.partial(m, _bounds(p)),
        n_star,
        _is_manipulated(m, ep),
        loss,
        constrained=constrained,
    )


def _bounds(b: BeliefSet) -> tuple[float, float]:
    if b.mode is BeliefMode.GRID:
        return b.grid.r_min, b.grid.r_max
    return 0.0, b.scale


def kl_blend_objective(p_row: np.ndarray, q_row: np.ndarray, alpha: float):
    """Value-and-gradient of ``pi -> KL(p || alpha * pi + (1 - alpha) * q)``."""
    support = p_row > 0
    ps = p_row[support]
    c = (1.0 - alpha) * q_row

    def f(pi):
        phi = alpha * pi + c
        phis = phi[support]
        if np.any(phis <= 0):
            return np.inf, np.full_like(pi, -np.inf)
        grad = np.zeros_like(pi)
        grad[support] = -alpha * ps / phis
        return float(np.sum(ps * np.log(ps / phis))), grad

    return f


def water_fill(p_row: np.ndarray, floor_row: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact minimizer of KL(p || phi) over ``{phi >= floor_row, sum(phi) = 1}``.

    The optimum has the form ``phi = max(p / nu, floor_row)``; coordinates are
    released from their floor in decreasing order of ``p / floor_row`` until the
    implied ``nu`` is consistent. Requires ``sum(floor_row) < 1``.
    Returns ``(phi, nu)``.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(floor_row > 0, p_row / floor_row, np.inf)
    ratio = np.where(p_row > 0, ratio, 0.0)
    order = np.argsort(-ratio, kind="stable")
    p_sorted = p_row[order]
    c_sorted = floor_row[order]
    p_free = np.cumsum(p_sorted)
    c_held = floor_row.sum() - np.cumsum(c_sorted)
    nu = p_free / (1.0 - c_held)
    r_next = np.append(ratio[order][1:], 0.0)
    # first prefix whose threshold separates released from held coordinates
    ok = (ratio[order] >= nu) & (r_next <= nu)
    j = int(np.flatnonzero(ok)[0]) if ok.any() else len(p_row) - 1
    nu_j = float(nu[j])
    phi = np.maximum(p_row / nu_j, floor_row)
    return phi / phi.sum(), nu_j


def solve_marginal(
    p_row,
    q_row,
    alpha: float,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    method: str = "exact",
    record_trace: bool = False,
):
    """Minimize KL(p || alpha * pi + (1 - alpha) * q) over one simplex.

    ``method="exact"`` uses :func:`water_fill`; ``method="mirror"`` runs
    exponentiated gradient from ``pi = p``. Returns a :class:`SolveReport` whose
    ``iterations`` is 0 when no iterative solve was needed.
    """
    p_row = np.asarray(p_row, dtype=float)
    q_row = np.asarray(q_row, dtype=float)
    c = (1.0 - alpha) * q_row
    raw = (p_row - c) / alpha
    if np.all(raw >= 0):
        pi = raw / raw.sum()
        kl = kl_divergence(p_row, alpha * pi + c)
        return SolveReport(pi, kl, 0, True, 0.0, [kl] if record_trace else [])
    if method == "exact":
        phi, _ = water_fill(p_row, c)
        pi = np.maximum(phi - c, 0.0) / alpha
        pi /= pi.sum()
        f = kl_blend_objective(p_row, q_row, alpha)
        kl, grad = f(pi)
        return SolveReport(pi, kl, 0, True, fw_gap(pi, grad), [kl] if record_trace else [])
    if method != "mirror":
        raise ValueError(f"unknown method {method!r}")
    rep = minimize_on_simplex(
        kl_blend_objective(p_row, q_row, alpha), p_row, tol, max_iter, record_trace
    )
    if not rep.converged:
        raise SolverFailure(
            f"KL signal design did not converge in {rep.iterations} iterations "
            f"(residual {rep.residual:.3g})",
            rep.minimizer,
            rep.residual,
        )
    return rep


def design_complete(
    p: BeliefSet,
    state: ReceiverState,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    method: str = "exact",
) -> SenderResult:
    """Full belief signal minimizing the KL divergence from Alice's belief to Bob's posterior.

    Marginals are independent subproblems; the reported objective is their sum,
    which equals the KL of the product distributions. When every marginal admits
    ``pi = (p - (1 - alpha) q) / alpha`` the posterior equals ``p`` exactly and no
    solver runs.
    """
    if not p.same_shape(state.prior):
        raise ValueError("Alice's and Bob's beliefs have mismatched shapes")
    a = state.alpha
    n_star = target_choice(p)
    if a == 0.0:
        obj = sum(kl_divergence(pr, qr) for pr, qr in zip(p.marginals(), state.prior.marginals()))
        return SenderResult(Signal.complete(p), n_star, False, obj, degenerate=True)
    if a == 1.0:
        return SenderResult(Signal.complete(p), n_star, False, 0.0)

    rows, total, iters, constrained = [], 0.0, 0, False
    for p_row, q_row in zip(p.marginals(), state.prior.marginals()):
        rep = solve_marginal(p_row, q_row, a, tol, max_iter, method)
        rows.append(rep.minimizer)
        total += rep.objective
        iters += rep.iterations
        constrained |= bool(np.any(p_row < (1.0 - a) * q_row))
    dist = p.with_marginals(np.array(rows))
    return SenderResult(
        Signal.complete(dist),
        n_star,
        _is_manipulated(dist.means(), p.means()),
        total,
        iters,
        constrained=constrained,
    )
