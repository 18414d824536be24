"""Batch of random elections printed as a per-run table with summary statistics.

    python3 scripts/election_table.py --runs 30 --voters 9 --out results/nine
    python3 scripts/election_table.py --runs 10 --voters 19 --scale-arena --out results/nineteen
"""

import argparse

from slimevote import ExperimentConfig, run_agent_batch
from slimevote.encoding import CANDIDATE_NAMES
from slimevote.harness import write_agent_outputs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=30)
    ap.add_argument("--voters", type=int, default=9)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--scale-arena", action="store_true",
                    help="keep the 9-voter width per voter (600/9 px) and particle density")
    ap.add_argument("--out", default="results/election_table")
    args = ap.parse_args()

    cfg = ExperimentConfig(mode="agent-batch", seed=args.seed, voters=args.voters, runs=args.runs,
                           workers=args.workers, out=args.out)
    if args.scale_arena:
        cfg = cfg.replace(arena_width=round(600 * args.voters / 9), population=round(3000 * args.voters / 9))
    records, summary = run_agent_batch(cfg)
    write_agent_outputs(args.out, cfg, records, summary)

    print(f"{'run':>3}  {'votes':<{2 * args.voters}} {'true':>14} {'estimated':>14} {'error':>6} {'halt':>7} {'pop':>5}")
    for rec in records:
        tw, tp = rec.truth()
        est = (f"{CANDIDATE_NAMES[rec.verdict.winner]} {rec.verdict.estimated_majority_pct:5.2f}"
               if rec.verdict else rec.status)
        halt = rec.verdict.halt_step if rec.verdict else rec.samples[-1].step
        print(f"{rec.index:3d}  {rec.election.to_text().replace(',', ' '):<{2 * args.voters}} "
              f"{CANDIDATE_NAMES[tw]:>8} {tp:5.2f} {est:>14} {rec.abs_error():6.2f} {halt:7d} "
              f"{rec.final_population:5d}")
    s = summary
    print(f"\n{s.correct_winners}/{s.runs} correct ({s.failed} failed); abs error mean {s.mean_abs_error_pct:.2f}% "
          f"max {s.max_abs_error_pct:.2f}% sd {s.std_abs_error_pct:.2f}; pearson r {s.pearson_r:.3f}; "
          f"mean halt {s.mean_halt_step:.0f} steps; {s.duplicate_elections} duplicate elections")


if __name__ == "__main__":
    main()
