"""Seeded experiment runs, batches and sweeps with CSV/PGM output."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import analysis
from .agents import WorldState, project_stimulus, scheduler_step
from .analysis import Sample, Verdict, measure, readout, should_halt, true_majority
from .ca import ca_history, ca_readout, ca_run, init_ca
from .config import SWEEP_N, SWEEP_R, SWEEP_R_CELLS, ExperimentConfig, run_seed
from .encoding import Election, build_polyline, random_election, seed_population
from .errors import IndeterminateResult
from .lattice import write_pgm

log = logging.getLogger(__name__)

SAMPLE_COLUMNS = ["step", "population", "thickness_range", "mean_y"]
VERDICT_COLUMNS = [
    "seed", "n", "true_winner", "true_majority_pct", "est_winner", "est_majority_pct",
    "abs_error_pct", "halt_step", "final_population", "status", "reason", "votes",
]
SUMMARY_COLUMNS = [
    "runs", "failed", "correct_winners", "mean_abs_error_pct", "max_abs_error_pct",
    "std_abs_error_pct", "mean_halt_step", "pearson_r", "duplicate_elections",
]
CA_COLUMNS = [
    "seed", "n", "r", "up_votes", "true_majority_pct", "final_value", "est_winner",
    "correct", "halt_steps",
]
CA_SUMMARY_COLUMNS = ["n", "r", "runs", "correct", "accuracy_pct", "mean_halt_steps", "timeouts"]


# --- agent model -----------------------------------------------------------------


@dataclass
class RunRecord:
    index: int
    seed: int
    election: Election
    samples: list[Sample] = field(default_factory=list)
    verdict: Verdict | None = None
    status: str = "ok"
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def final_population(self) -> int:
        return self.samples[-1].population if self.samples else 0

    @property
    def peak_population(self) -> int:
        return max((s.population for s in self.samples), default=0)

    def truth(self) -> tuple[str, float]:
        return true_majority(self.election)

    def abs_error(self) -> float:
        if self.verdict is None:
            return math.nan
        return abs(self.verdict.estimated_majority_pct - self.truth()[1])

    def correct(self) -> bool:
        return self.verdict is not None and self.verdict.winner == self.truth()[0]


def seed_world(cfg: ExperimentConfig, election: Election, rng: np.random.Generator):
    ep = cfg.encoding_params()
    polyline = build_polyline(election, ep)
    particles = seed_population(polyline, ep.population, rng)
    world = WorldState.from_particles(particles, ep.arena_width, ep.arena_height, rng)
    return world, polyline


def frame_image(world: WorldState, gain: float) -> np.ndarray:
    """Trail field as background, occupied cells at 255."""
    img = np.minimum(255, np.rint(world.field.values * gain)).astype(np.uint8)
    img[world.occupancy.cells >= 0] = 255
    return img


def run_agent_experiment(cfg: ExperimentConfig, index: int = 0, election: Election | None = None,
                         frame_dir: str | Path | None = None,
                         on_step: Callable[[WorldState], None] | None = None) -> RunRecord:
    """Seed, hold, release and relax one election until the band is thin enough.

    The run is sampled every ``cfg.sample_every`` steps; the halt test is only
    applied once the stimulus has been removed. ``on_step`` is called after
    every scheduler step (used by tests to check invariants).
    """
    seed = run_seed(cfg.seed, index)
    rng = np.random.default_rng(seed)
    if election is None:
        election = Election.read(cfg.votes_file) if cfg.votes_file else random_election(cfg.voters, rng)
    world, polyline = seed_world(cfg, election, rng)
    ap = cfg.agent_params()
    ep = cfg.encoding_params()
    threshold = cfg.halt_threshold
    rec = RunRecord(index, seed, election)

    frames = Path(frame_dir) if (frame_dir is not None and cfg.frames_every > 0) else None
    last_frame = -1

    def snap():
        nonlocal last_frame
        if frames is not None and world.step != last_frame:
            write_pgm(frame_image(world, cfg.render_gain), frames / f"step{world.step:07d}.pgm")
            last_frame = world.step

    if frames is not None:
        frames.mkdir(parents=True, exist_ok=True)
    snap()
    if world.n == 0:
        rec.status, rec.reason = "failed", "empty population at step 0"
        return rec
    rec.samples.append(measure(world))
    while world.step < cfg.max_steps:
        holding = world.step < cfg.hold_steps
        if holding:
            project_stimulus(world.field, polyline.pixels, cfg.stimulus)
        scheduler_step(world, ap, hold=holding)
        if on_step is not None:
            on_step(world)
        if frames is not None and world.step % cfg.frames_every == 0:
            snap()
        if world.n == 0:
            rec.status, rec.reason = "failed", f"population collapse at step {world.step}"
            break
        if world.step % cfg.sample_every:
            continue
        s = measure(world)
        rec.samples.append(s)
        if cfg.check_invariants:
            world.check_invariants()
        if world.step > cfg.hold_steps and should_halt(s, threshold):
            try:
                winner, pct = readout(s.mean_y, ep)
            except IndeterminateResult as exc:
                rec.status, rec.reason = "failed", str(exc)
            else:
                rec.verdict = Verdict(winner, pct, s.step)
            break
    else:
        rec.status, rec.reason = "failed", f"timeout at step cap {cfg.max_steps}"
    if rec.samples[-1].step != world.step and world.n > 0:
        rec.samples.append(measure(world))
    snap()
    log.info("run %d seed %d: %s %s", index, seed, rec.status,
             rec.verdict if rec.verdict else rec.reason)
    return rec


@dataclass(frozen=True)
class BatchSummary:
    runs: int
    failed: int
    correct_winners: int
    mean_abs_error_pct: float
    max_abs_error_pct: float
    std_abs_error_pct: float
    mean_halt_step: float
    pearson_r: float
    duplicate_elections: int = 0

    @classmethod
    def from_records(cls, records: Sequence[RunRecord]) -> "BatchSummary":
        good = [r for r in records if r.ok and r.verdict is not None]
        errs = np.array([r.abs_error() for r in good])
        truth = [r.truth()[1] for r in good]
        est = [r.verdict.estimated_majority_pct for r in good]
        seen = [r.election.votes for r in records]
        return cls(
            runs=len(records),
            failed=len(records) - len(good),
            correct_winners=sum(r.correct() for r in good),
            mean_abs_error_pct=float(errs.mean()) if len(good) else math.nan,
            max_abs_error_pct=float(errs.max()) if len(good) else math.nan,
            std_abs_error_pct=float(errs.std(ddof=1)) if len(good) > 1 else math.nan,
            mean_halt_step=float(np.mean([r.verdict.halt_step for r in good])) if good else math.nan,
            pearson_r=analysis.pearson_r(truth, est) if len(good) > 1 else math.nan,
            duplicate_elections=len(seen) - len(set(seen)),
        )


def _run_one(args):
    cfg, index, frame_root = args
    frame_dir = None if frame_root is None else Path(frame_root) / f"run{index:03d}"
    return run_agent_experiment(cfg, index, frame_dir=frame_dir)


def _map(fn, items: Iterable, workers: int) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_agent_batch(cfg: ExperimentConfig, num_elections: int | None = None,
                    frame_root: str | Path | None = None) -> tuple[list[RunRecord], BatchSummary]:
    runs = num_elections if num_elections is not None else cfg.runs
    if runs < 1:
        raise ValueError("num_elections must be >= 1")
    frames = frame_root if cfg.frames_every > 0 else None
    records = _map(_run_one, [(cfg, i, frames) for i in range(runs)], cfg.workers)
    records.sort(key=lambda r: r.index)
    return records, BatchSummary.from_records(records)


# --- CSV -------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6f}"
    return str(v)


def write_csv(path: str | Path, cfg: ExperimentConfig, columns: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    """Config-echo comment line, header row, then ``rows``."""
    buf = io.StringIO()
    buf.write(f"# config: {cfg.echo()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path: str | Path) -> list[dict[str, str]]:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def sample_rows(rec: RunRecord):
    return [(s.step, s.population, s.thickness_range, s.mean_y) for s in rec.samples]


def verdict_row(rec: RunRecord):
    tw, tp = rec.truth()
    v = rec.verdict
    return (
        rec.seed, rec.election.n, tw, tp,
        v.winner if v else "", v.estimated_majority_pct if v else math.nan,
        rec.abs_error(), v.halt_step if v else rec.samples[-1].step if rec.samples else 0,
        rec.final_population, rec.status, rec.reason, rec.election.to_text().replace(",", ""),
    )


def summary_row(s: BatchSummary):
    return (s.runs, s.failed, s.correct_winners, s.mean_abs_error_pct, s.max_abs_error_pct,
            s.std_abs_error_pct, s.mean_halt_step, s.pearson_r, s.duplicate_elections)


def write_agent_outputs(out: str | Path, cfg: ExperimentConfig, records: Sequence[RunRecord],
                        summary: BatchSummary | None = None) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for rec in records:
        write_csv(out / f"samples_run{rec.index:03d}.csv", cfg, SAMPLE_COLUMNS, sample_rows(rec))
    write_csv(out / "verdicts.csv", cfg, VERDICT_COLUMNS, [verdict_row(r) for r in records])
    if summary is not None:
        write_csv(out / "batch_summary.csv", cfg, SUMMARY_COLUMNS, [summary_row(summary)])


# --- automaton ---------------------------------------------------------------------


@dataclass(frozen=True)
class CaRecord:
    seed: int
    n: int
    r: int
    up_votes: int
    true_majority_pct: float
    final_value: float
    est_winner: str
    correct: bool
    halt_steps: int
    timed_out: bool
    last_range: float
    election: Election | None = field(default=None, compare=False, repr=False)

    def row(self):
        return (self.seed, self.n, self.r, self.up_votes, self.true_majority_pct, self.final_value,
                self.est_winner, int(self.correct), self.halt_steps)


def run_ca_election(cfg: ExperimentConfig, n: int, r: int, index: int,
                    election: Election | None = None) -> CaRecord:
    seed = run_seed(cfg.seed, n, r, index)
    if election is None:
        election = random_election(n, np.random.default_rng(seed))
    res = ca_run(init_ca(election), cfg.ca_config(n, r))
    truth_w, truth_p = true_majority(election)
    est = ""
    if not res.timed_out:
        try:
            est = ca_readout(res.final_value)[0]
        except IndeterminateResult:
            est = ""
    return CaRecord(seed, n, r, election.up_votes, truth_p, res.final_value, est,
                    est == truth_w, res.halt_step, res.timed_out, res.last_range, election)


def _ca_point(args):
    cfg, n, r = args
    return [run_ca_election(cfg, n, r, k) for k in range(cfg.runs)]


def run_ca_sweep(cfg: ExperimentConfig, points: Sequence[tuple[int, int]]) -> list[list[CaRecord]]:
    """``cfg.runs`` seeded elections at every ``(n, r)`` point."""
    return _map(_ca_point, [(cfg, n, r) for n, r in points], cfg.workers)


def ca_summary_row(records: Sequence[CaRecord]):
    ok = [c for c in records if not c.timed_out]
    correct = sum(c.correct for c in records)
    return (records[0].n, records[0].r, len(records), correct, 100.0 * correct / len(records),
            float(np.mean([c.halt_steps for c in ok])) if ok else math.nan,
            len(records) - len(ok))


def sweep_points(mode: str, cfg: ExperimentConfig) -> list[tuple[int, int]]:
    if mode == "ca-sweep-n":
        return [(n, cfg.radius) for n in SWEEP_N]
    if mode == "ca-sweep-r":
        return [(SWEEP_R_CELLS, r) for r in SWEEP_R]
    return [(cfg.voters, cfg.radius)]


def write_ca_outputs(out: str | Path, cfg: ExperimentConfig, name: str,
                     groups: Sequence[Sequence[CaRecord]]) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / f"{name}.csv", cfg, CA_COLUMNS, [c.row() for g in groups for c in g])
    write_csv(out / f"{name}_summary.csv", cfg, CA_SUMMARY_COLUMNS, [ca_summary_row(g) for g in groups])


def ca_spacetime(election: Election, r: int, steps: int, every: int = 1) -> np.ndarray:
    """Space-time image, one row per sampled step, values scaled 0-100 -> 0-255."""
    hist = ca_history(init_ca(election), r, steps, every)
    return np.rint(hist * 2.55).astype(np.uint8)
