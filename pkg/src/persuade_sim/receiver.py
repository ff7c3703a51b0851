"""The receiver: posterior means, best response, regret and trust update.

Choice indices are 0-based throughout.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .simplex import BeliefSet


class TieBreak(str, enum.Enum):
    LOWEST_INDEX = "lowest"
    UNIFORM_RANDOM = "uniform"


@dataclass(frozen=True)
class ReceiverState:
    alpha: float
    prior: BeliefSet
    tie_break: TieBreak = TieBreak.LOWEST_INDEX

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"trust alpha must be in [0, 1], got {self.alpha}")
        object.__setattr__(self, "tie_break", TieBreak(self.tie_break))

    @property
    def n_choices(self) -> int:
        return self.prior.n_choices

    def prior_means(self) -> np.ndarray:
        return self.prior.means()


@dataclass(frozen=True)
class DecisionRule:
    psi: np.ndarray

    @property
    def choice(self) -> int:
        """Index carrying the most probability (the pick, for a one-hot rule)."""
        return int(np.argmax(self.psi))


@dataclass(frozen=True)
class RegretRecord:
    r_b: float
    prior_choice: int
    signal_choice: int


def blended_means(signal, state: ReceiverState) -> np.ndarray:
    """Per-choice posterior expected reward ``y``.

    ``signal`` is anything with an ``expected_rewards()`` method (a sender
    ``Signal``), a ``BeliefSet``, or a plain vector of transmitted means.
    """
    if hasattr(signal, "expected_rewards"):
        m = signal.expected_rewards()
    elif isinstance(signal, BeliefSet):
        m = signal.means()
    else:
        m = np.asarray(signal, dtype=float)
    eq = state.prior_means()
    if m.shape != eq.shape:
        raise ValueError(f"signal has {m.shape} means but prior has {eq.shape}")
    a = state.alpha
    return a * m + (1.0 - a) * eq


def _argmax_ties(y: np.ndarray, tie_break: TieBreak, rng) -> int:
    if tie_break is TieBreak.LOWEST_INDEX:
        return int(np.argmax(y))
    if rng is None:
        raise ValueError("uniform tie-breaking needs an rng")
    winners = np.flatnonzero(y == y.max())
    return int(winners[rng.integers(len(winners))])


def best_response(y, tie_break: TieBreak = TieBreak.LOWEST_INDEX, rng=None) -> DecisionRule:
    """One-hot rule on the largest posterior mean."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("best response needs a nonempty vector")
    k = _argmax_ties(y, TieBreak(tie_break), rng)
    psi = np.zeros_like(y)
    psi[k] = 1.0
    return DecisionRule(psi)


def _weighted_sum(psi, means) -> float:
    psi = psi.psi if isinstance(psi, DecisionRule) else np.asarray(psi, dtype=float)
    means = means.means() if isinstance(means, BeliefSet) else np.asarray(means, dtype=float)
    if psi.shape != means.shape:
        raise ValueError(f"decision rule {psi.shape} and beliefs {means.shape} disagree")
    return float(psi @ means)


def expected_utility_bob(psi, posterior) -> float:
    """Bob's expected utility; ``posterior`` is a BeliefSet or its vector of means."""
    return _weighted_sum(psi, posterior)


def regret(true_rewards, state: ReceiverState, signal_choice: int) -> RegretRecord:
    """Realized regret of following the signal instead of the prior alone."""
    x = np.asarray(true_rewards, dtype=float)
    if x.shape != (state.n_choices,):
        raise ValueError("true rewards do not match the number of choices")
    if not 0 <= signal_choice < x.size:
        raise IndexError(f"signal choice {signal_choice} out of range")
    prior_choice = int(np.argmax(state.prior_means()))
    return RegretRecord(float(x[prior_choice] - x[signal_choice]), prior_choice, signal_choice)


def trust_update(alpha: float, r_b: float, epsilon: float) -> float:
    """Move trust one ``epsilon`` step against the sign of the regret, clipped to [0, 1]."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    step = alpha - epsilon * float(np.sign(r_b))
    if r_b <= 0:
        return min(1.0, step)
    return max(step, 0.0)
