"""Measurement, halting and majority readout for the particle band."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .encoding import DOWN, UP, Election, EncodingParams
from .errors import IndeterminateResult, MeasurementError, ParameterError

DEFAULT_HALT_THICKNESS = 10.0


@dataclass(frozen=True)
class Sample:
    step: int
    population: int
    thickness_range: float
    mean_y: float


@dataclass(frozen=True)
class Verdict:
    winner: str
    estimated_majority_pct: float
    halt_step: int


def measure(world) -> Sample:
    """Population, y range and mean y of the occupied cell rows."""
    if world.n == 0:
        raise MeasurementError(f"population collapsed to zero at step {world.step}")
    rows = world.rows()
    return Sample(world.step, int(world.n), float(rows.max() - rows.min()), float(rows.mean()))


def should_halt(sample: Sample, threshold: float = DEFAULT_HALT_THICKNESS) -> bool:
    if threshold <= 0:
        raise ParameterError(f"halt threshold must be > 0, got {threshold}")
    return sample.thickness_range <= threshold


def halt_threshold_for(so: float) -> float:
    # straight band is ~10 px at SO 5; other SO values use a 2*SO heuristic
    return DEFAULT_HALT_THICKNESS if so == 5 else 2.0 * so


def linear_majority(offset: float, amplitude: float) -> float:
    """Band offset from the centre line -> winning share, 50 at the centre, 100 at +-A."""
    return 50.0 + 50.0 * min(1.0, abs(offset) / amplitude)


def readout(mean_y: float, params: EncodingParams,
            mapping: Callable[[float, float], float] = linear_majority) -> tuple[str, float]:
    if not math.isfinite(mean_y):
        raise ParameterError(f"mean_y must be finite, got {mean_y!r}")
    offset = mean_y - params.centre_y
    if offset == 0:
        raise IndeterminateResult("band rests exactly on the centre line")
    winner = UP if offset < 0 else DOWN
    return winner, mapping(offset, params.amplitude)


def true_majority(election: Election) -> tuple[str, float]:
    k = election.up_votes
    n = election.n
    winner = UP if 2 * k > n else DOWN
    return winner, 100.0 * max(k, n - k) / n


def pearson_r(x, y) -> float:
    """Pearson correlation clipped to [-1, 1]; ``nan`` if either input is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y):
        raise ParameterError("pearson_r needs equal-length inputs")
    if len(x) < 2:
        return float("nan")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        return float("nan")
    return float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
