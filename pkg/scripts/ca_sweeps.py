"""Averaging automaton: accuracy and mean halt step across cell counts and radii.

    python3 scripts/ca_sweeps.py --runs 100 --out results/ca
"""

import argparse

from slimevote import ExperimentConfig, run_ca_sweep
from slimevote.config import SWEEP_N, SWEEP_R, SWEEP_R_CELLS
from slimevote.harness import ca_summary_row, write_ca_outputs


def show(title, groups):
    print(title)
    print(f"{'n':>5} {'r':>3} {'correct':>8} {'mean halt':>11}")
    for g in groups:
        n, r, runs, correct, _, mean_halt, _ = ca_summary_row(g)
        print(f"{n:5d} {r:3d} {correct:4d}/{runs:<3d} {mean_halt:11.1f}")
    print()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/ca")
    args = ap.parse_args()

    cfg = ExperimentConfig(mode="ca-sweep-n", seed=args.seed, runs=args.runs, workers=args.workers)
    by_n = run_ca_sweep(cfg, [(n, 1) for n in SWEEP_N])
    write_ca_outputs(args.out, cfg, "ca_sweep_n", by_n)
    show("halt time against cell count, r = 1", by_n)

    cfg = cfg.replace(mode="ca-sweep-r")
    by_r = run_ca_sweep(cfg, [(SWEEP_R_CELLS, r) for r in SWEEP_R])
    write_ca_outputs(args.out, cfg, "ca_sweep_r", by_r)
    show(f"halt time against radius, n = {SWEEP_R_CELLS}", by_r)


if __name__ == "__main__":
    main()
