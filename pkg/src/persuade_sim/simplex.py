"""Finite probability vectors, belief sets and the trust-weighted blend."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

R_MIN = 0.0
R_MAX = 10.0
SUM_TOL = 1e-9
DEFAULT_FLOOR = 1e-6


class BeliefMode(str, enum.Enum):
    GRID = "grid"
    CATEGORICAL = "categorical"


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def check_prob_vector(w, name: str = "weights") -> np.ndarray:
    """Validate ``w`` as a probability vector and return it as a float array."""
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be finite and nonnegative")
    if abs(arr.sum() - 1.0) > SUM_TOL:
        raise ValueError(f"{name} must sum to 1 (got {arr.sum():.12g})")
    return arr


@dataclass(frozen=True)
class RewardGrid:
    values: np.ndarray
    r_min: float = R_MIN
    r_max: float = R_MAX

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("reward grid needs at least 2 points")
        if np.any(np.diff(v) <= 0):
            raise ValueError("reward grid must be strictly increasing")
        if v[0] < self.r_min or v[-1] > self.r_max:
            raise ValueError(f"reward grid must lie within [{self.r_min}, {self.r_max}]")
        object.__setattr__(self, "values", v)

    @classmethod
    def uniform(cls, bins: int = 101, r_min: float = R_MIN, r_max: float = R_MAX) -> RewardGrid:
        return cls(np.linspace(r_min, r_max, bins), r_min, r_max)

    @property
    def size(self) -> int:
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, RewardGrid):
            return NotImplemented
        return (
            self.r_min == other.r_min
            and self.r_max == other.r_max
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BeliefSet:
    """Per-choice beliefs about rewards.

    In grid mode ``weights`` has shape ``(N, B)``: row ``n`` is the marginal
    reward distribution of choice ``n`` over ``grid``. In categorical mode it is
    a single length-``N`` distribution over choices, and the expected reward of
    choice ``n`` is taken as ``weights[n] * scale``.
    """

    mode: BeliefMode
    weights: np.ndarray
    grid: RewardGrid | None = None
    scale: float = R_MAX
    _means: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mode = BeliefMode(self.mode)
        object.__setattr__(self, "mode", mode)
        w = _frozen(self.weights)
        if mode is BeliefMode.GRID:
            if self.grid is None:
                raise ValueError("grid mode requires a RewardGrid")
            if w.ndim != 2 or w.shape[0] < 2 or w.shape[1] != self.grid.size:
                raise ValueError(
                    f"grid beliefs need shape (N>=2, {self.grid.size}), got {w.shape}"
                )
            for n, row in enumerate(w):
                check_prob_vector(row, f"marginal {n}")
            means = w @ self.grid.values
        else:
            if w.ndim != 1 or w.size < 2:
                raise ValueError("categorical beliefs need a weight vector of length >= 2")
            check_prob_vector(w)
            if not self.scale > 0:
                raise ValueError("scale must be positive")
            means = w * self.scale
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_means", _frozen(means))

    @classmethod
    def from_marginals(cls, grid: RewardGrid, marginals) -> BeliefSet:
        return cls(BeliefMode.GRID, marginals, grid=grid)

    @classmethod
    def categorical(cls, weights, scale: float = R_MAX) -> BeliefSet:
        return cls(BeliefMode.CATEGORICAL, weights, scale=scale)

    @property
    def n_choices(self) -> int:
        return self.weights.shape[0]

    def means(self) -> np.ndarray:
        """Expected reward of every choice."""
        return self._means

    def marginals(self) -> np.ndarray:
        """Distributions solved over independently: one row per choice (grid) or one row total."""
        return self.weights if self.mode is BeliefMode.GRID else self.weights[None, :]

    def with_marginals(self, rows) -> BeliefSet:
        rows = np.asarray(rows, dtype=float)
        if self.mode is BeliefMode.GRID:
            return BeliefSet(BeliefMode.GRID, rows, grid=self.grid)
        return BeliefSet(BeliefMode.CATEGORICAL, rows.reshape(-1), scale=self.scale)

    def same_shape(self, other: BeliefSet) -> bool:
        if self.mode is not other.mode or self.weights.shape != other.weights.shape:
            return False
        if self.mode is BeliefMode.GRID:
            return self.grid == other.grid
        return self.scale == other.scale

    def __eq__(self, other):
        if not isinstance(other, BeliefSet):
            return NotImplemented
        return self.same_shape(other) and np.array_equal(self.weights, other.weights)

    __hash__ = None


def expectation(b: BeliefSet, n: int) -> float:
    """Expected reward of choice ``n`` (0-based) under ``b``."""
    if not 0 <= n < b.n_choices:
        raise IndexError(f"choice index {n} out of range for {b.n_choices} choices")
    return float(b.means()[n])


def blend(pi: BeliefSet, q: BeliefSet, alpha: float) -> BeliefSet:
    """Receiver posterior ``alpha * pi + (1 - alpha) * q``, per marginal."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if not pi.same_shape(q):
        raise ValueError("signal and prior beliefs have mismatched shapes")
    if alpha == 1.0:
        return pi
    if alpha == 0.0:
        return q
    w = alpha * pi.weights + (1.0 - alpha) * q.weights
    # renormalize away rounding so the result stays a valid distribution
    w = w / w.sum(axis=-1, keepdims=True)
    return BeliefSet(pi.mode, w, grid=pi.grid, scale=pi.scale)


def kl_divergence(a, b) -> float:
    """KL(a || b) with 0 log 0 = 0; ``inf`` when ``a`` has mass where ``b`` has none."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    support = a > 0
    if np.any(b[support] <= 0):
        return float("inf")
    a_s, b_s = a[support], b[support]
    return float(max(np.sum(a_s * np.log(a_s / b_s)), 0.0))


def normalize(raw, floor: float = DEFAULT_FLOOR) -> np.ndarray:
    """Clamp entries below at ``floor`` and rescale to sum to one."""
    v = np.asarray(raw, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("cannot normalize an empty vector")
    v = np.maximum(v, floor)
    total = v.sum()
    if not total > 0:
        raise ValueError("cannot normalize: entries sum to zero")
    return v / total
