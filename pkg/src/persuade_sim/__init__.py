"""One-shot strategic information design with a distrustful receiver."""

from .harness import (
    InteractionOutcome,
    Scenario,
    ScenarioSpec,
    SweepResult,
    gen_scenario,
    run_interaction,
    sweep_fig2,
    sweep_fig3,
    sweep_fig4,
    sweep_fig5,
)
from .optim import SolveReport, SolverFailure, brute_force_simplex_min, minimize_on_simplex, project_to_simplex
from .receiver import (
    DecisionRule,
    ReceiverState,
    RegretRecord,
    TieBreak,
    best_response,
    blended_means,
    expected_utility_bob,
    regret,
    trust_update,
)
from .sender import (
    Frame,
    SenderResult,
    Signal,
    design_complete,
    design_partial,
    expected_utility_alice,
    needs_manipulation,
    persuasion_condition_holds,
    target_choice,
)
from .simplex import BeliefMode, BeliefSet, RewardGrid, blend, expectation, kl_divergence, normalize

__version__ = "0.1.0"
