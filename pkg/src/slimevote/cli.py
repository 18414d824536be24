"""Run particle-band elections, automaton sweeps and frame renders.

Exit codes: 0 success, 2 configuration error, 3 if any run failed or timed out.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .encoding import CANDIDATE_NAMES, Election
from .errors import SlimeVoteError
from .harness import (
    ca_spacetime, run_agent_batch, run_agent_experiment, run_ca_election, run_ca_sweep, sweep_points,
    write_agent_outputs, write_ca_outputs,
)
from .lattice import write_pgm

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 2, 3

# flag -> config field
FLAGS = {
    "--seed": ("seed", int), "--voters": ("voters", int), "--so": ("so", float),
    "--sa": ("sa", float), "--ra": ("ra", float), "--decay": ("decay", float),
    "--arena-width": ("arena_width", int), "--arena-height": ("arena_height", int),
    "--amplitude": ("amplitude", int), "--population": ("population", int),
    "--halt-thickness": ("halt_thickness", float), "--radius": ("radius", int),
    "--epsilon": ("epsilon", float), "--runs": ("runs", int),
    "--frames-every": ("frames_every", int), "--out": ("out", str),
    "--votes-file": ("votes_file", str), "--workers": ("workers", int),
    "--max-steps": ("max_steps", int), "--band-width": ("band_width", int),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slimevote", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    for mode, help_ in [
        ("agent-run", "one particle-model election"),
        ("agent-batch", "a batch of random elections with summary statistics"),
        ("ca-run", "averaging automaton on random elections"),
        ("ca-sweep-n", "automaton accuracy and halt time across cell counts"),
        ("ca-sweep-r", "automaton halt time across neighbourhood radii"),
        ("render", "particle-model run that writes PGM frames"),
    ]:
        p = sub.add_parser(mode, help=help_)
        p.add_argument("--config", help="key=value config file; flags override it")
        for flag, (_, tp) in FLAGS.items():
            p.add_argument(flag, type=tp, default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {name: getattr(args, flag[2:].replace("-", "_")) for flag, (name, _) in FLAGS.items()}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    overrides["mode"] = args.mode
    if args.mode in ("ca-sweep-n", "ca-sweep-r") and "runs" not in overrides:
        overrides.setdefault("runs", 100)
    if args.mode == "render" and not overrides.get("frames_every"):
        overrides["frames_every"] = 1000
    if args.config:
        return load_config(args.config, **overrides)
    return ExperimentConfig(**overrides)


def _describe(winner: str) -> str:
    return f"{CANDIDATE_NAMES.get(winner, '?')} ({winner})"


def run(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.mode in ("agent-run", "render"):
        rec = run_agent_experiment(cfg, 0, frame_dir=out / "frames")
        write_agent_outputs(out, cfg, [rec])
        tw, tp = rec.truth()
        print(f"votes {rec.election.to_text()}  true winner {_describe(tw)} {tp:.2f}%")
        if rec.verdict:
            v = rec.verdict
            print(f"band winner {_describe(v.winner)} {v.estimated_majority_pct:.2f}% "
                  f"at step {v.halt_step}, population {rec.final_population}")
        else:
            print(f"run failed: {rec.reason}")
        return EXIT_OK if rec.ok else EXIT_FAILED
    if cfg.mode == "agent-batch":
        records, s = run_agent_batch(cfg, frame_root=out / "frames")
        write_agent_outputs(out, cfg, records, s)
        print(f"{s.correct_winners}/{s.runs - s.failed} correct winners, {s.failed} failed; "
              f"abs error mean {s.mean_abs_error_pct:.2f}% max {s.max_abs_error_pct:.2f}%; "
              f"pearson r {s.pearson_r:.3f}; mean halt step {s.mean_halt_step:.0f}")
        return EXIT_OK if s.failed == 0 else EXIT_FAILED
    if cfg.mode == "ca-run" and cfg.votes_file:
        e = Election.read(cfg.votes_file)
        groups = [[run_ca_election(cfg, e.n, cfg.radius, 0, election=e)]]
    else:
        groups = run_ca_sweep(cfg, sweep_points(cfg.mode, cfg))
    write_ca_outputs(out, cfg, cfg.mode.replace("-", "_"), groups)
    if cfg.mode == "ca-run" and cfg.frames_every > 0:
        rec = groups[0][0]
        img = ca_spacetime(rec.election, cfg.radius, rec.halt_steps, cfg.frames_every)
        write_pgm(img, out / "ca_spacetime.pgm")
    failed = 0
    for g in groups:
        correct = sum(c.correct for c in g)
        timeouts = sum(c.timed_out for c in g)
        failed += timeouts
        mean_halt = sum(c.halt_steps for c in g) / len(g)
        print(f"n={g[0].n:4d} r={g[0].r:3d}: {correct}/{len(g)} correct, "
              f"mean halt {mean_halt:.1f} steps, {timeouts} timeouts")
    return EXIT_OK if failed == 0 else EXIT_FAILED


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (SlimeVoteError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if not out.is_dir():
            raise OSError(f"{out} is not a directory")
    except OSError as exc:
        print(f"cannot write to {cfg.out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg)
    except SlimeVoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
