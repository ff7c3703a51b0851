"""Scenario generation and Monte Carlo sweeps.

Every iteration draws from its own RNG stream seeded by ``(seed, iteration)``
(``(seed, n_choices, iteration)`` for the choice-count sweep), and one
scenario is shared by every cell of that iteration: all alphas, epsilons and
both frames see the same rewards and beliefs. Per-iteration values are stored
by index and reduced in a fixed order, so results do not depend on how many
workers computed them.
"""

from __future__ import annotations

import functools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .receiver import (
    ReceiverState,
    TieBreak,
    best_response,
    blended_means,
    expected_utility_bob,
    regret,
    trust_update,
)
from .sender import Frame, design_complete, design_partial, expected_utility_alice
from .simplex import (
    DEFAULT_FLOOR,
    BeliefMode,
    BeliefSet,
    RewardGrid,
    kl_divergence,
    normalize,
)

DEFAULT_ALPHAS = tuple(round(0.1 * k, 1) for k in range(1, 10))
DEFAULT_EPSILONS = (0.1, 0.3, 0.5)
DEFAULT_CHOICE_COUNTS = tuple(range(2, 21))
FRAMES = (Frame.PARTIAL, Frame.COMPLETE)
CHOICE_RANGE = (2, 20)
THREADS_ENV = "PERSUADE_SIM_THREADS"


@dataclass(frozen=True)
class ScenarioSpec:
    """How to draw one random scenario.

    ``n_choices=None`` draws the count uniformly from 2..20 each time.
    ``noise_sigma_bob=None`` gives Bob the same noise level as Alice.
    """

    n_choices: int | None = 10
    reward_bounds: tuple[float, float] = (0.0, 10.0)
    noise_sigma: float = 1.0
    noise_sigma_bob: float | None = None
    belief_mode: BeliefMode = BeliefMode.CATEGORICAL
    grid_bins: int = 101
    floor: float = DEFAULT_FLOOR
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "belief_mode", BeliefMode(self.belief_mode))
        object.__setattr__(self, "reward_bounds", tuple(float(b) for b in self.reward_bounds))
        if self.n_choices is not None and self.n_choices < 2:
            raise ValueError("need at least 2 choices")
        if self.noise_sigma < 0 or (self.noise_sigma_bob is not None and self.noise_sigma_bob < 0):
            raise ValueError("noise sigma must be nonnegative")
        if self.grid_bins < 2:
            raise ValueError("grid needs at least 2 bins")
        lo, hi = self.reward_bounds
        if not hi > lo:
            raise ValueError("reward bounds must be increasing")

    @property
    def sigma_bob(self) -> float:
        return self.noise_sigma if self.noise_sigma_bob is None else self.noise_sigma_bob


@dataclass(frozen=True)
class Scenario:
    true_rewards: np.ndarray
    alice_belief: BeliefSet
    bob_belief: BeliefSet

    @property
    def n_choices(self) -> int:
        return self.true_rewards.size


@dataclass(frozen=True)
class InteractionOutcome:
    signal_choice: int
    alice_expected_utility: float
    bob_expected_utility: float
    realized_utility_bob: float
    regret: float
    alpha_prime: float
    manipulation_kl: float
    prior_choice: int = 0
    manipulated: bool = False
    degenerate: bool = False
    solver_iterations: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SweepResult:
    """Aggregated sweep table; ``rows`` follow ``columns`` exactly."""

    name: str
    columns: tuple[str, ...]
    rows: list[dict]
    iterations: int
    params: dict = field(default_factory=dict)

    def column(self, key: str, **where) -> list:
        return [r[key] for r in self.select(**where)]

    def select(self, **where) -> list[dict]:
        return [r for r in self.rows if all(r[k] == v for k, v in where.items())]

    def value(self, key: str, **where):
        (row,) = self.select(**where)
        return row[key]


def grid_marginal(center: float, sigma: float, grid: RewardGrid, floor: float) -> np.ndarray:
    """Gaussian around ``center`` discretized on ``grid``, truncated and renormalized."""
    g = grid.values
    if sigma == 0:
        w = np.zeros_like(g)
        w[np.argmin(np.abs(g - center))] = 1.0
    else:
        logw = -0.5 * ((g - center) / sigma) ** 2
        w = np.exp(logw - logw.max())
    return normalize(w / w.sum(), floor)


def _beliefs(perceived, sigma, spec: ScenarioSpec, grid) -> BeliefSet:
    if spec.belief_mode is BeliefMode.CATEGORICAL:
        return BeliefSet.categorical(normalize(perceived, spec.floor), scale=spec.reward_bounds[1])
    rows = [grid_marginal(c, sigma, grid, spec.floor) for c in perceived]
    return BeliefSet.from_marginals(grid, rows)


def gen_scenario(spec: ScenarioSpec, rng: np.random.Generator) -> Scenario:
    lo, hi = spec.reward_bounds
    n = spec.n_choices
    if n is None:
        n = int(rng.integers(CHOICE_RANGE[0], CHOICE_RANGE[1] + 1))
    x = rng.uniform(lo, hi, n)
    xa = x + rng.normal(0.0, spec.noise_sigma, n)
    xb = x + rng.normal(0.0, spec.sigma_bob, n)
    grid = RewardGrid.uniform(spec.grid_bins, lo, hi) if spec.belief_mode is BeliefMode.GRID else None
    return Scenario(
        x,
        _beliefs(xa, spec.noise_sigma, spec, grid),
        _beliefs(xb, spec.sigma_bob, spec, grid),
    )


def mean_matching_distribution(p_row, grid: RewardGrid, target_mean: float) -> np.ndarray:
    """Closest distribution to ``p_row`` in KL(. || p) whose mean is ``target_mean``.

    The minimizer is an exponential tilt ``p * exp(lam * x)``; ``lam`` is found by
    a bracketed root search on the (increasing) tilted mean. Targets at or
    beyond the ends of the support give the point mass at that end.
    """
    p_row = np.asarray(p_row, dtype=float)
    support = p_row > 0
    g = grid.values[support]
    logp = np.log(p_row[support])
    span = grid.r_max - grid.r_min
    z = (g - g.mean()) / span
    out = np.zeros_like(p_row)
    idx = np.flatnonzero(support)
    if target_mean >= g[-1] - 1e-12:
        out[idx[-1]] = 1.0
        return out
    if target_mean <= g[0] + 1e-12:
        out[idx[0]] = 1.0
        return out

    def tilted(lam):
        logw = logp + lam * z
        w = np.exp(logw - logw.max())
        return w / w.sum()

    def gap(lam):
        return tilted(lam) @ g - target_mean

    lo, hi = -1.0, 1.0
    while gap(lo) > 0:
        lo *= 2.0
    while gap(hi) < 0:
        hi *= 2.0
    lam = brentq(gap, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    out[support] = tilted(lam)
    return out


def manipulation_kl(signal, p: BeliefSet) -> float:
    """KL from the transmitted belief to Alice's belief, summed over marginals.

    A mean-only signal is first turned into the distribution closest to Alice's
    that has those means.
    """
    if signal.frame is Frame.COMPLETE:
        return sum(kl_divergence(a, b) for a, b in zip(signal.distribution.marginals(), p.marginals()))
    if p.mode is BeliefMode.CATEGORICAL:
        return kl_divergence(signal.means / p.scale, p.weights)
    total = 0.0
    for m, e, row in zip(signal.means, p.means(), p.weights):
        if abs(m - e) <= 1e-9:
            continue
        total += kl_divergence(mean_matching_distribution(row, p.grid, m), row)
    return total


def run_interaction(
    scenario: Scenario,
    alpha: float,
    frame: Frame,
    epsilon: float = 0.1,
    tie_break: TieBreak = TieBreak.LOWEST_INDEX,
    rng: np.random.Generator | None = None,
    tol: float = 1e-8,
) -> InteractionOutcome:
    """One full round: design, blend, respond, score, update trust."""
    p, q = scenario.alice_belief, scenario.bob_belief
    state = ReceiverState(alpha, q, tie_break)
    frame = Frame(frame)
    if frame is Frame.PARTIAL:
        res = design_partial(p, state)
    else:
        res = design_complete(p, state, tol=tol)
    y = blended_means(res.signal, state)
    psi = best_response(y, state.tie_break, rng)
    k = psi.choice
    rec = regret(scenario.true_rewards, state, k)
    kl = 0.0 if not res.manipulated and frame is Frame.PARTIAL else manipulation_kl(res.signal, p)
    return InteractionOutcome(
        signal_choice=k,
        alice_expected_utility=expected_utility_alice(psi, p),
        bob_expected_utility=expected_utility_bob(psi, y),
        realized_utility_bob=float(scenario.true_rewards[k]),
        regret=rec.r_b,
        alpha_prime=trust_update(alpha, rec.r_b, epsilon),
        manipulation_kl=kl,
        prior_choice=rec.prior_choice,
        manipulated=res.manipulated,
        degenerate=res.degenerate,
        solver_iterations=res.solver_iterations,
    )


# ---------------------------------------------------------------------------
# sweeps


def worker_count(workers: int | None = None) -> int:
    """Resolve a worker count; ``None`` reads the environment, 0 means all CPUs."""
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def _iteration_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([seed, *key])


def _collect(fn, keys, workers: int | None) -> np.ndarray:
    """Evaluate ``fn`` on every key; row ``i`` of the result belongs to ``keys[i]``."""
    workers = worker_count(workers)
    if workers == 1 or len(keys) < 2:
        return np.array([fn(k) for k in keys])
    chunk = max(1, len(keys) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(fn, keys, chunksize=chunk)))


def _stats(values: np.ndarray) -> tuple[float, float, float]:
    count = values.size
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if count > 1 else 0.0
    return mean, sd, 1.96 * sd / np.sqrt(count)


def _fig2_iteration(i, *, spec, alphas, frames, tie_break, tol):
    rng = _iteration_rng(spec.seed, i)
    sc = gen_scenario(spec, rng)
    return [
        run_interaction(sc, a, f, tie_break=tie_break, rng=rng, tol=tol).manipulation_kl
        for a in alphas
        for f in frames
    ]


def sweep_fig2(
    iterations: int = 1000,
    alpha_grid=DEFAULT_ALPHAS,
    spec: ScenarioSpec | None = None,
    frames=FRAMES,
    workers: int | None = None,
    tie_break: TieBreak = TieBreak.LOWEST_INDEX,
    tol: float = 1e-8,
) -> SweepResult:
    """Mean manipulation KL against trust, with the choice count redrawn every iteration."""
    spec = ScenarioSpec(n_choices=None) if spec is None else spec
    alphas = _check_alphas(alpha_grid, open_interval=True)
    frames = tuple(Frame(f) for f in frames)
    fn = functools.partial(
        _fig2_iteration, spec=spec, alphas=alphas, frames=frames, tie_break=tie_break, tol=tol
    )
    data = _collect(fn, list(range(iterations)), workers)
    rows, col = [], 0
    for a in alphas:
        for f in frames:
            mean, sd, ci = _stats(data[:, col])
            rows.append(dict(alpha=a, frame=f.value, mean_kl=mean, sd_kl=sd, ci95=ci, iterations=iterations))
            col += 1
    return SweepResult(
        "fig2",
        ("alpha", "frame", "mean_kl", "sd_kl", "ci95", "iterations"),
        rows,
        iterations,
        _params(spec, alphas=alphas, frames=frames),
    )


def _fig34_iteration(i, *, spec, alphas, epsilons, frames, tie_break, tol):
    rng = _iteration_rng(spec.seed, i)
    sc = gen_scenario(spec, rng)
    out = []
    for a in alphas:
        for f in frames:
            o = run_interaction(sc, a, f, tie_break=tie_break, rng=rng, tol=tol)
            out.append(o.regret)
            out.extend(trust_update(a, o.regret, e) for e in epsilons)
    return out


def _fig34_data(iterations, alphas, epsilons, spec, frames, workers, tie_break, tol):
    fn = functools.partial(
        _fig34_iteration,
        spec=spec,
        alphas=alphas,
        epsilons=epsilons,
        frames=frames,
        tie_break=tie_break,
        tol=tol,
    )
    return _collect(fn, list(range(iterations)), workers)


def sweep_fig3(
    iterations: int = 1000,
    alpha_grid=DEFAULT_ALPHAS,
    epsilons=DEFAULT_EPSILONS,
    spec: ScenarioSpec | None = None,
    frames=FRAMES,
    workers: int | None = None,
    tie_break: TieBreak = TieBreak.LOWEST_INDEX,
    tol: float = 1e-8,
) -> SweepResult:
    """Mean updated trust per (epsilon, alpha, frame)."""
    spec = ScenarioSpec(n_choices=10) if spec is None else spec
    alphas = _check_alphas(alpha_grid)
    epsilons = tuple(float(e) for e in epsilons)
    if any(not 0 <= e <= 1 for e in epsilons):
        raise ValueError("epsilon values must lie in [0, 1]")
    frames = tuple(Frame(f) for f in frames)
    data = _fig34_data(iterations, alphas, epsilons, spec, frames, workers, tie_break, tol)
    stride = 1 + len(epsilons)
    rows = []
    for ei, e in enumerate(epsilons):
        for ai, a in enumerate(alphas):
            for fi, f in enumerate(frames):
                col = (ai * len(frames) + fi) * stride + 1 + ei
                mean, sd, ci = _stats(data[:, col])
                rows.append(
                    dict(epsilon=e, alpha=a, frame=f.value, mean_alpha_prime=mean, sd=sd, ci95=ci, iterations=iterations)
                )
    return SweepResult(
        "fig3",
        ("epsilon", "alpha", "frame", "mean_alpha_prime", "sd", "ci95", "iterations"),
        rows,
        iterations,
        _params(spec, alphas=alphas, epsilons=epsilons, frames=frames),
    )


def sweep_fig4(
    iterations: int = 1000,
    alpha_grid=DEFAULT_ALPHAS,
    spec: ScenarioSpec | None = None,
    frames=FRAMES,
    workers: int | None = None,
    tie_break: TieBreak = TieBreak.LOWEST_INDEX,
    tol: float = 1e-8,
) -> SweepResult:
    """Mean regret per (alpha, frame)."""
    spec = ScenarioSpec(n_choices=10) if spec is None else spec
    alphas = _check_alphas(alpha_grid)
    frames = tuple(Frame(f) for f in frames)
    data = _fig34_data(iterations, alphas, (), spec, frames, workers, tie_break, tol)
    rows = []
    for ai, a in enumerate(alphas):
        for fi, f in enumerate(frames):
            mean, sd, ci = _stats(data[:, ai * len(frames) + fi])
            rows.append(dict(alpha=a, frame=f.value, mean_regret=mean, sd=sd, ci95=ci, iterations=iterations))
    return SweepResult(
        "fig4",
        ("alpha", "frame", "mean_regret", "sd", "ci95", "iterations"),
        rows,
        iterations,
        _params(spec, alphas=alphas, frames=frames),
    )


def _fig5_iteration(key, *, spec, alpha, frames, tie_break, tol):
    n, i = key
    rng = _iteration_rng(spec.seed, n, i)
    sc = gen_scenario(_with_choices(spec, n), rng)
    out = []
    for f in frames:
        o = run_interaction(sc, alpha, f, tie_break=tie_break, rng=rng, tol=tol)
        out.extend([o.alice_expected_utility, o.bob_expected_utility])
    return out


def sweep_fig5(
    iterations: int = 1000,
    choice_counts=DEFAULT_CHOICE_COUNTS,
    alpha: float = 0.5,
    spec: ScenarioSpec | None = None,
    frames=FRAMES,
    workers: int | None = None,
    tie_break: TieBreak = TieBreak.LOWEST_INDEX,
    tol: float = 1e-8,
) -> SweepResult:
    """Mean expected utility of each agent per (choice count, frame)."""
    spec = ScenarioSpec() if spec is None else spec
    counts = tuple(int(n) for n in choice_counts)
    if any(n < 2 for n in counts):
        raise ValueError("choice counts must be at least 2")
    frames = tuple(Frame(f) for f in frames)
    fn = functools.partial(_fig5_iteration, spec=spec, alpha=alpha, frames=frames, tie_break=tie_break, tol=tol)
    keys = [(n, i) for n in counts for i in range(iterations)]
    data = _collect(fn, keys, workers).reshape(len(counts), iterations, -1)
    rows = []
    for ni, n in enumerate(counts):
        for fi, f in enumerate(frames):
            for ag, agent in enumerate(("alice", "bob")):
                mean, sd, ci = _stats(data[ni, :, 2 * fi + ag])
                rows.append(
                    dict(n_choices=n, frame=f.value, agent=agent, mean_expected_utility=mean, sd=sd, ci95=ci, iterations=iterations)
                )
    return SweepResult(
        "fig5",
        ("n_choices", "frame", "agent", "mean_expected_utility", "sd", "ci95", "iterations"),
        rows,
        iterations,
        _params(spec, alpha=alpha, choice_counts=counts, frames=frames),
    )


def _with_choices(spec: ScenarioSpec, n: int) -> ScenarioSpec:
    d = asdict(spec)
    d["n_choices"] = n
    return ScenarioSpec(**d)


def _check_alphas(alpha_grid, open_interval: bool = False) -> tuple[float, ...]:
    alphas = tuple(float(a) for a in alpha_grid)
    if not alphas:
        raise ValueError("alpha grid is empty")
    for a in alphas:
        ok = 0 < a < 1 if open_interval else 0 <= a <= 1
        if not ok:
            raise ValueError(f"alpha {a} outside the allowed range")
    return alphas


def _params(spec: ScenarioSpec, **extra) -> dict:
    d = asdict(spec)
    d["belief_mode"] = spec.belief_mode.value
    d["reward_bounds"] = list(spec.reward_bounds)
    for k, v in extra.items():
        if isinstance(v, tuple):
            v = [x.value if isinstance(x, Frame) else x for x in v]
        d[k] = v
    return d
