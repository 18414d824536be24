"""Population, thickness range and estimated majority over one run, with optional frames.

    python3 scripts/band_time_series.py --votes C,C,T,C,T,T,C,C,C --frames-every 5000
"""

import argparse
from pathlib import Path

from slimevote import Election, ExperimentConfig, run_agent_experiment
from slimevote.analysis import readout
from slimevote.errors import IndeterminateResult
from slimevote.harness import write_agent_outputs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--votes", default="C,C,T,C,T,T,C,C,C")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--frames-every", type=int, default=0)
    ap.add_argument("--print-every", type=int, default=2500)
    ap.add_argument("--out", default="results/time_series")
    args = ap.parse_args()

    cfg = ExperimentConfig(seed=args.seed, frames_every=args.frames_every, out=args.out)
    election = Election.from_text(args.votes)
    rec = run_agent_experiment(cfg, election=election, frame_dir=Path(args.out) / "frames")
    write_agent_outputs(args.out, cfg, [rec])

    ep = cfg.encoding_params()
    print(f"{'step':>7} {'population':>10} {'thickness':>9} {'mean y':>8} {'estimate':>9}")
    for s in rec.samples:
        if s.step % args.print_every and s is not rec.samples[-1]:
            continue
        try:
            winner, pct = readout(s.mean_y, ep)
            est = f"{winner} {pct:5.2f}"
        except IndeterminateResult:
            est = "-"
        print(f"{s.step:7d} {s.population:10d} {s.thickness_range:9.0f} {s.mean_y:8.2f} {est:>9}")
    tw, tp = rec.truth()
    print(f"true {tw} {tp:.2f}%; {rec.status} {rec.verdict or rec.reason}")


if __name__ == "__main__":
    main()
