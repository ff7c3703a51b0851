"""Command-line entry point.

    persuade-sim solve [--alpha A] [--frame both] ...
    persuade-sim sweep fig3 --iterations 1000 --seed 7

Settings come from, in increasing priority: built-in defaults, a flat JSON
config file (``--config``), and command-line flags. A results JSON written by
an earlier run is also accepted as a config file; its ``config`` entry is used.

Exit codes: 0 success, 2 usage or config error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .harness import (
    DEFAULT_ALPHAS,
    DEFAULT_CHOICE_COUNTS,
    DEFAULT_EPSILONS,
    ScenarioSpec,
    gen_scenario,
    run_interaction,
    sweep_fig2,
    sweep_fig3,
    sweep_fig4,
    sweep_fig5,
)
from .optim import SolverFailure
from .report import ResultsWriteError, solve_rows, write_results
from .sender import Frame

EXIT_OK, EXIT_USAGE, EXIT_SOLVER = 0, 2, 3
SWEEPS = ("fig2", "fig3", "fig4", "fig5")
FORMATS = ("csv", "json", "svg")


class ConfigError(ValueError):
    """Bad command line or config file; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    command: str = "sweep"
    sweep_name: str | None = None
    frame: str = "both"
    belief_mode: str = "categorical"
    iterations: int = 1000
    seed: int = 0
    alpha: float = 0.5
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHAS
    epsilon: float = 0.1
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    # None: 10 choices, except fig2 which redraws 2..20 per iteration
    n_choices: int | None = None
    choice_counts: tuple[int, ...] = DEFAULT_CHOICE_COUNTS
    grid_bins: int = 101
    noise_sigma: float = 1.0
    noise_sigma_bob: float | None = None
    output_dir: str = "results"
    formats: tuple[str, ...] = FORMATS

    def frames(self) -> tuple[Frame, ...]:
        if self.frame == "both":
            return (Frame.PARTIAL, Frame.COMPLETE)
        return (Frame(self.frame),)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def config_hash(self) -> str:
        """Digest of everything that affects the numbers (not where or how they are written)."""
        d = self.to_dict()
        del d["output_dir"], d["formats"]
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def scenario_spec(self) -> ScenarioSpec:
        n = self.n_choices
        if n is None and not (self.command == "sweep" and self.sweep_name == "fig2"):
            n = 10
        return ScenarioSpec(
            n_choices=n,
            noise_sigma=self.noise_sigma,
            noise_sigma_bob=self.noise_sigma_bob,
            belief_mode=self.belief_mode,
            grid_bins=self.grid_bins,
            seed=self.seed,
        )


FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_TUPLE_ITEM = {"alpha_grid": float, "epsilons": float, "choice_counts": int, "formats": str}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    s = argparse.SUPPRESS
    p.add_argument("--config", default=s, help="JSON config file (flat keys, or a previous results file)")
    p.add_argument("--frame", choices=("partial", "complete", "both"), default=s)
    p.add_argument("--belief-mode", dest="belief_mode", choices=("grid", "categorical"), default=s)
    p.add_argument("--seed", type=int, default=s)
    p.add_argument("--n-choices", dest="n_choices", type=int, default=s)
    p.add_argument("--grid-bins", dest="grid_bins", type=int, default=s)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=s)
    p.add_argument("--noise-sigma-bob", dest="noise_sigma_bob", type=float, default=s)
    p.add_argument("--output-dir", dest="output_dir", default=s)
    p.add_argument("--formats", type=_str_list, default=s, help="comma-separated subset of csv,json,svg")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="persuade-sim", description="Persuasion with partial and complete signals.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    solve = sub.add_parser("solve", help="one interaction on one random scenario")
    _add_common(solve)
    solve.add_argument("--alpha", type=float, default=argparse.SUPPRESS)
    solve.add_argument("--epsilon", type=float, default=argparse.SUPPRESS)

    sweep = sub.add_parser("sweep", help="Monte Carlo sweep behind one figure")
    sweep.add_argument("sweep_name", choices=SWEEPS)
    _add_common(sweep)
    sweep.add_argument("--iterations", type=int, default=argparse.SUPPRESS)
    sweep.add_argument("--alpha", type=float, default=argparse.SUPPRESS, help="trust level for fig5")
    sweep.add_argument("--alpha-grid", dest="alpha_grid", type=_float_list, default=argparse.SUPPRESS)
    sweep.add_argument("--epsilons", type=_float_list, default=argparse.SUPPRESS)
    sweep.add_argument("--choice-counts", dest="choice_counts", type=_int_list, default=argparse.SUPPRESS)
    return parser


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc.strerror or exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--config: {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError(f"--config: {path} must hold a JSON object")
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]
    return doc


def _coerce(key: str, value):
    if key not in FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    if key in _TUPLE_ITEM:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key}: expected a list")
        try:
            return tuple(_TUPLE_ITEM[key](v) for v in value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: bad list entry in {value!r}")
    if value is None:
        return None
    default = FIELDS[key].default
    try:
        if key in ("iterations", "seed", "grid_bins", "n_choices"):
            if isinstance(value, bool) or float(value) != int(value):
                raise ValueError
            return int(value)
        if isinstance(default, float) or key == "noise_sigma_bob":
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: invalid value {value!r}")
    return value


def validate(cfg: RunConfig) -> RunConfig:
    def bad(key, msg):
        raise ConfigError(f"--{key.replace('_', '-')}: {msg}")

    if cfg.command not in ("solve", "sweep"):
        bad("command", f"must be solve or sweep, got {cfg.command!r}")
    if cfg.command == "sweep" and cfg.sweep_name not in SWEEPS:
        bad("sweep_name", f"must be one of {', '.join(SWEEPS)}")
    if cfg.frame not in ("partial", "complete", "both"):
        bad("frame", f"must be partial, complete or both, got {cfg.frame!r}")
    if cfg.belief_mode not in ("grid", "categorical"):
        bad("belief_mode", f"must be grid or categorical, got {cfg.belief_mode!r}")
    if cfg.iterations < 1:
        bad("iterations", "must be at least 1")
    if not 0 <= cfg.seed < 2**64:
        bad("seed", "must be a nonnegative 64-bit integer")
    if not 0.0 <= cfg.alpha <= 1.0:
        bad("alpha", f"{cfg.alpha} is outside [0, 1]")
    if not 0.0 <= cfg.epsilon <= 1.0:
        bad("epsilon", f"{cfg.epsilon} is outside [0, 1]")
    if not cfg.alpha_grid or any(not 0.0 <= a <= 1.0 for a in cfg.alpha_grid):
        bad("alpha_grid", "needs values in [0, 1]")
    if cfg.command == "sweep" and cfg.sweep_name == "fig2" and any(a in (0.0, 1.0) for a in cfg.alpha_grid):
        bad("alpha_grid", "fig2 needs trust values strictly between 0 and 1")
    if not cfg.epsilons or any(not 0.0 <= e <= 1.0 for e in cfg.epsilons):
        bad("epsilons", "needs values in [0, 1]")
    if cfg.n_choices is not None and cfg.n_choices < 2:
        bad("n_choices", "must be at least 2")
    if not cfg.choice_counts or any(n < 2 for n in cfg.choice_counts):
        bad("choice_counts", "needs counts of at least 2")
    if cfg.grid_bins < 2:
        bad("grid_bins", "must be at least 2")
    if cfg.noise_sigma < 0 or (cfg.noise_sigma_bob is not None and cfg.noise_sigma_bob < 0):
        bad("noise_sigma", "must be nonnegative")
    if not cfg.formats or any(f not in FORMATS for f in cfg.formats):
        bad("formats", f"must be a nonempty subset of {','.join(FORMATS)}")
    out = Path(cfg.output_dir)
    probe = out
    while not probe.exists() and probe != probe.parent:
        probe = probe.parent
    if not probe.is_dir() or not os.access(probe, os.W_OK):
        bad("output_dir", f"{cfg.output_dir} is not writable")
    return cfg


def parse_config(argv, config_file=None) -> RunConfig:
    """Merge defaults, an optional config file and ``argv`` into a validated RunConfig.

    Raises :class:`ConfigError` on any usage or validation problem.
    """
    argv = list(argv)
    if not argv:
        raise ConfigError("no command given")
    ns = vars(build_parser().parse_args(argv))
    if ns.get("command") is None:
        raise ConfigError("no command given")
    path = ns.pop("config", None) or config_file
    values = {}
    if path is not None:
        for k, v in load_config_file(path).items():
            values[k] = _coerce(k, v)
    for k, v in ns.items():
        values[k] = _coerce(k, v)
    if values.get("command") == "solve":
        values["sweep_name"] = None
    return validate(RunConfig(**values))


def run(cfg: RunConfig):
    """Execute ``cfg``; returns a SweepResult or a list of per-frame solve rows."""
    spec = cfg.scenario_spec()
    frames = cfg.frames()
    if cfg.command == "solve":
        rng = np.random.default_rng([cfg.seed, 0])
        scenario = gen_scenario(spec, rng)
        outcomes = {
            f.value: run_interaction(scenario, cfg.alpha, f, cfg.epsilon, rng=rng) for f in frames
        }
        return solve_rows(outcomes, cfg.alpha, cfg.epsilon)
    common = dict(iterations=cfg.iterations, spec=spec, frames=frames)
    if cfg.sweep_name == "fig2":
        return sweep_fig2(alpha_grid=cfg.alpha_grid, **common)
    if cfg.sweep_name == "fig3":
        return sweep_fig3(alpha_grid=cfg.alpha_grid, epsilons=cfg.epsilons, **common)
    if cfg.sweep_name == "fig4":
        return sweep_fig4(alpha_grid=cfg.alpha_grid, **common)
    return sweep_fig5(choice_counts=cfg.choice_counts, alpha=cfg.alpha, **common)


def provenance(cfg: RunConfig) -> dict:
    return {"seed": cfg.seed, "config_hash": cfg.config_hash(), "config": cfg.to_dict()}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"persuade-sim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = run(cfg)
    except SolverFailure as exc:
        print(f"persuade-sim: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        paths = write_results(result, provenance(cfg), cfg.output_dir, cfg.formats)
    except ResultsWriteError as exc:
        print(f"persuade-sim: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
