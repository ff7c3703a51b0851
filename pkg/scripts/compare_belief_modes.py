"""Print the figure-3/4 trend numbers side by side for both belief representations.

Grid beliefs are much slower, so the default iteration count is modest.

    python scripts/compare_belief_modes.py --iterations 200
"""

import argparse

from persuade_sim.harness import DEFAULT_ALPHAS, ScenarioSpec, sweep_fig3, sweep_fig4
from persuade_sim.simplex import BeliefMode


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iterations", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    for mode in BeliefMode:
        spec = ScenarioSpec(n_choices=10, belief_mode=mode, seed=args.seed)
        fig3 = sweep_fig3(args.iterations, spec=spec)
        fig4 = sweep_fig4(args.iterations, spec=spec)
        print(f"\n== {mode.value} beliefs, {args.iterations} iterations ==")
        print("alpha  " + "  ".join(f"{a:>7}" for a in DEFAULT_ALPHAS))
        for eps in (0.1, 0.3, 0.5):
            gaps = [
                fig3.value("mean_alpha_prime", epsilon=eps, alpha=a, frame="partial")
                - fig3.value("mean_alpha_prime", epsilon=eps, alpha=a, frame="complete")
                for a in DEFAULT_ALPHAS
            ]
            print(f"dA e={eps}" + "".join(f"{g:+9.4f}" for g in gaps))
        for frame in ("partial", "complete"):
            regs = fig4.column("mean_regret", frame=frame)
            print(f"R {frame[:4]:<5}" + "".join(f"{r:+9.4f}" for r in regs))


if __name__ == "__main__":
    main()
