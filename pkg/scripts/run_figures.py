"""Run all four figure sweeps and write CSV/JSON/SVG under one directory.

    python scripts/run_figures.py --iterations 1000 --seed 0 --out results
"""

import argparse
import time

from persuade_sim.cli import parse_config, provenance, run
from persuade_sim.report import write_results


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iterations", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--belief-mode", default="categorical", choices=("categorical", "grid"))
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    for name in ("fig2", "fig3", "fig4", "fig5"):
        cfg = parse_config([
            "sweep", name,
            "--iterations", str(args.iterations),
            "--seed", str(args.seed),
            "--belief-mode", args.belief_mode,
            "--output-dir", args.out,
        ])
        t0 = time.perf_counter()
        result = run(cfg)
        paths = write_results(result, provenance(cfg), cfg.output_dir, cfg.formats)
        print(f"{name}: {time.perf_counter() - t0:.1f}s -> {', '.join(str(p) for p in paths)}")


if __name__ == "__main__":
    main()
