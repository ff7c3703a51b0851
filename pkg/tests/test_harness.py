import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from persuade_sim.harness import (
    ScenarioSpec,
    Scenario,
    gen_scenario,
    grid_marginal,
    manipulation_kl,
    mean_matching_distribution,
    run_interaction,
    sweep_fig2,
    sweep_fig3,
    sweep_fig4,
    sweep_fig5,
    worker_count,
)
from persuade_sim.receiver import ReceiverState
from persuade_sim.sender import Frame, design_partial
from persuade_sim.simplex import BeliefMode, BeliefSet, RewardGrid, kl_divergence, normalize

GRID = ScenarioSpec(belief_mode=BeliefMode.GRID, grid_bins=51)


class TestScenario:
    def test_zero_noise_grid_means_track_rewards(self):
        spec = ScenarioSpec(noise_sigma=0.0, belief_mode=BeliefMode.GRID)
        sc = gen_scenario(spec, np.random.default_rng(1))
        half_bin = 0.5 * 10 / (spec.grid_bins - 1)
        # the probability floor adds at most floor * bins * r_max of drift
        assert np.max(np.abs(sc.alice_belief.means() - sc.true_rewards)) <= half_bin + 1e-3

    def test_zero_noise_categorical_is_normalized_rewards(self):
        sc = gen_scenario(ScenarioSpec(noise_sigma=0.0), np.random.default_rng(1))
        np.testing.assert_allclose(sc.alice_belief.weights, normalize(sc.true_rewards))

    def test_normalized_perceived_rewards(self):
        np.testing.assert_allclose(normalize([9, 1]), [0.9, 0.1], atol=1e-6)

    @pytest.mark.parametrize("spec", [ScenarioSpec(), GRID, ScenarioSpec(n_choices=None)])
    def test_fixed_seed_is_reproducible(self, spec):
        a = gen_scenario(spec, np.random.default_rng(42))
        b = gen_scenario(spec, np.random.default_rng(42))
        np.testing.assert_array_equal(a.true_rewards, b.true_rewards)
        assert a.alice_belief == b.alice_belief and a.bob_belief == b.bob_belief

    def test_random_choice_count_in_range(self):
        counts = {gen_scenario(ScenarioSpec(n_choices=None), np.random.default_rng(s)).n_choices for s in range(300)}
        assert min(counts) >= 2 and max(counts) <= 20 and len(counts) > 10

    def test_bob_noise_knob(self):
        spec = ScenarioSpec(noise_sigma=1.0, noise_sigma_bob=0.0)
        sc = gen_scenario(spec, np.random.default_rng(5))
        np.testing.assert_allclose(sc.bob_belief.weights, normalize(sc.true_rewards))

    @pytest.mark.parametrize("kw", [dict(n_choices=1), dict(noise_sigma=-1), dict(grid_bins=1), dict(reward_bounds=(5, 5))])
    def test_spec_validation(self, kw):
        with pytest.raises(ValueError):
            ScenarioSpec(**kw)

    def test_grid_marginal_point_mass(self):
        grid = RewardGrid.uniform(11)
        w = grid_marginal(3.2, 0.0, grid, 1e-6)
        assert np.argmax(w) == 3


class TestMeanMatching:
    @given(st.floats(0.5, 9.5), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_hits_target_mean(self, target, seed):
        grid = RewardGrid.uniform(21)
        p = np.random.default_rng(seed).dirichlet(np.ones(21))
        d = mean_matching_distribution(p, grid, target)
        assert abs(d.sum() - 1) < 1e-12
        assert d @ grid.values == pytest.approx(target, abs=1e-9)

    def test_beats_constrained_general_solver(self):
        from scipy.optimize import minimize

        grid = RewardGrid.uniform(9)
        r = np.random.default_rng(7)
        for _ in range(10):
            p = r.dirichlet(np.ones(9))
            target = r.uniform(1, 9)
            d = mean_matching_distribution(p, grid, target)
            cons = [
                {"type": "eq", "fun": lambda x: x.sum() - 1},
                {"type": "eq", "fun": lambda x: x @ grid.values - target},
            ]
            ref = minimize(
                lambda x: np.sum(x * np.log(np.maximum(x, 1e-300) / p)),
                p,
                bounds=[(0, 1)] * 9,
                constraints=cons,
                method="SLSQP",
                options={"ftol": 1e-12, "maxiter": 500},
            )
            assert kl_divergence(d, p) <= kl_divergence(np.maximum(ref.x, 0) / np.maximum(ref.x, 0).sum(), p) + 1e-6

    def test_grid_end_gives_point_mass(self):
        grid = RewardGrid.uniform(5)
        d = mean_matching_distribution(np.full(5, 0.2), grid, 10.0)
        np.testing.assert_array_equal(d, [0, 0, 0, 0, 1])

    def test_unmanipulated_partial_signal_has_zero_kl(self):
        sc = gen_scenario(GRID, np.random.default_rng(0))
        res = design_partial(sc.alice_belief, ReceiverState(1.0, sc.bob_belief))
        assert manipulation_kl(res.signal, sc.alice_belief) == 0.0


def two_choice(ep, eq, x=(5.0, 5.0)):
    grid = RewardGrid(np.array([0.0, 10.0]))

    def b(m):
        return BeliefSet.from_marginals(grid, [[1 - v / 10, v / 10] for v in m])

    return Scenario(np.array(x), b(ep), b(eq))


class TestRunInteraction:
    @pytest.mark.parametrize("mode", list(BeliefMode))
    def test_full_trust_complete_sends_truth(self, mode):
        sc = gen_scenario(ScenarioSpec(belief_mode=mode, grid_bins=21), np.random.default_rng(3))
        out = run_interaction(sc, 1.0, Frame.COMPLETE)
        assert out.manipulation_kl == 0.0
        assert out.signal_choice == int(np.argmax(sc.alice_belief.means()))

    @pytest.mark.parametrize("frame", list(Frame))
    @pytest.mark.parametrize("mode", list(BeliefMode))
    def test_zero_trust_follows_prior(self, frame, mode):
        sc = gen_scenario(ScenarioSpec(belief_mode=mode, grid_bins=21), np.random.default_rng(4))
        out = run_interaction(sc, 0.0, frame)
        assert out.signal_choice == int(np.argmax(sc.bob_belief.means()))
        assert out.regret == 0.0 and out.degenerate

    def test_two_choice_partial(self):
        sc = two_choice([5, 4], [1, 9], x=(6.0, 3.0))
        out = run_interaction(sc, 0.5, Frame.PARTIAL, epsilon=0.1)
        assert out.signal_choice == 0
        assert out.bob_expected_utility == pytest.approx(5.0)
        assert out.alice_expected_utility == pytest.approx(5.0)
        assert out.regret == pytest.approx(-3.0)
        assert out.alpha_prime == pytest.approx(0.6)
        assert out.manipulated and out.manipulation_kl > 0


class TestSweeps:
    def test_fig2_single_iteration_equals_one_run(self):
        spec = ScenarioSpec(n_choices=None, seed=9)
        res = sweep_fig2(1, alpha_grid=(0.3,), spec=spec)
        sc = gen_scenario(spec, np.random.default_rng([9, 0]))
        for f in Frame:
            assert res.value("mean_kl", alpha=0.3, frame=f.value) == run_interaction(sc, 0.3, f).manipulation_kl
            assert res.value("sd_kl", alpha=0.3, frame=f.value) == 0.0

    @pytest.mark.parametrize("grid", [(0.0, 0.5), (0.5, 1.0), ()])
    def test_fig2_rejects_endpoints(self, grid):
        with pytest.raises(ValueError):
            sweep_fig2(1, alpha_grid=grid)

    def test_fig2_vanishes_near_full_trust(self):
        res = sweep_fig2(100, alpha_grid=(0.1, 0.99))
        for f in ("partial", "complete"):
            assert res.value("mean_kl", alpha=0.99, frame=f) < 0.01 * res.value("mean_kl", alpha=0.1, frame=f)

    def test_fig3_zero_step_keeps_trust(self):
        res = sweep_fig3(30, epsilons=(0.0,))
        for r in res.rows:
            assert r["mean_alpha_prime"] == pytest.approx(r["alpha"], abs=1e-15)

    def test_fig3_bounded_move(self):
        res = sweep_fig3(50)
        assert len(res.rows) == 54
        for r in res.rows:
            assert abs(r["mean_alpha_prime"] - r["alpha"]) <= r["epsilon"] + 1e-12

    def test_fig3_half_trust_frames(self):
        res = sweep_fig3(1000, alpha_grid=(0.5,), epsilons=(0.1,))
        assert res.value("mean_alpha_prime", alpha=0.5, frame="partial") >= res.value(
            "mean_alpha_prime", alpha=0.5, frame="complete"
        )

    def test_fig4_zero_trust_has_no_regret(self):
        res = sweep_fig4(50, alpha_grid=(0.0, 0.5))
        for f in ("partial", "complete"):
            assert res.value("mean_regret", alpha=0.0, frame=f) == 0.0
            assert res.value("sd", alpha=0.0, frame=f) == 0.0

    def test_fig4_ci_is_normal_approximation(self):
        res = sweep_fig4(40, alpha_grid=(0.5,))
        r = res.select(frame="partial")[0]
        assert r["ci95"] == pytest.approx(1.96 * r["sd"] / np.sqrt(40))

    def test_fig5_single_iteration_equals_one_run(self):
        spec = ScenarioSpec(seed=4)
        res = sweep_fig5(1, choice_counts=(3,), spec=spec)
        sc = gen_scenario(ScenarioSpec(n_choices=3, seed=4), np.random.default_rng([4, 3, 0]))
        for f in Frame:
            out = run_interaction(sc, 0.5, f)
            assert res.value("mean_expected_utility", n_choices=3, frame=f.value, agent="alice") == out.alice_expected_utility
            assert res.value("mean_expected_utility", n_choices=3, frame=f.value, agent="bob") == out.bob_expected_utility

    def test_fig5_alice_indifferent_between_frames(self):
        res = sweep_fig5(300, choice_counts=range(4, 21, 4))
        for n in range(4, 21, 4):
            a = res.select(n_choices=n, agent="alice")
            (p,) = [r for r in a if r["frame"] == "partial"]
            (c,) = [r for r in a if r["frame"] == "complete"]
            pooled = np.hypot(p["ci95"], c["ci95"])
            assert abs(p["mean_expected_utility"] - c["mean_expected_utility"]) < pooled

    def test_fig5_partial_frame_favours_bob(self):
        res = sweep_fig5(300, choice_counts=range(4, 21, 4))
        for n in range(4, 21, 4):
            bob = res.value("mean_expected_utility", n_choices=n, frame="partial", agent="bob")
            alice = res.value("mean_expected_utility", n_choices=n, frame="partial", agent="alice")
            assert bob > alice, f"n={n}: bob {bob:.4f} <= alice {alice:.4f}"

    def test_sweeps_reproducible(self):
        a = sweep_fig4(20, spec=ScenarioSpec(seed=3))
        b = sweep_fig4(20, spec=ScenarioSpec(seed=3))
        assert a.rows == b.rows

    def test_worker_count_env(self, monkeypatch):
        monkeypatch.setenv("PERSUADE_SIM_THREADS", "3")
        assert worker_count() == 3
        monkeypatch.setenv("PERSUADE_SIM_THREADS", "0")
        assert worker_count() >= 1
        assert worker_count(2) == 2

    def test_grid_mode_sweep_runs(self):
        res = sweep_fig4(5, alpha_grid=(0.2, 0.8), spec=ScenarioSpec(belief_mode=BeliefMode.GRID, grid_bins=21))
        assert len(res.rows) == 4
