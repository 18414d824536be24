"""1D averaging automaton: every cell becomes the mean of its radius-r window.

Cells hold doubles in [0, 100]; an up vote starts at 100, a down vote at 0.
The window sum is taken directly (not with a running sum) so that every
cell sees the same rounding regardless of where it sits; rotating the input
rotates every later state bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .encoding import DOWN, UP, Election
from .errors import IndeterminateResult, ParameterError


@dataclass(frozen=True)
class CaConfig:
    n: int
    r: int = 1
    halt_epsilon: float = 0.01
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.n <= 0 or self.n % 2 == 0:
            raise ParameterError(f"cell count must be odd, got {self.n}")
        if self.r < 1 or 2 * self.r + 1 > self.n:
            raise ParameterError(f"radius {self.r} needs 1 <= r and 2r+1 <= n={self.n}")
        if self.halt_epsilon <= 0:
            raise ParameterError("halt_epsilon must be > 0")
        if self.max_steps < 0:
            raise ParameterError("max_steps must be >= 0")


@dataclass(frozen=True)
class CaResult:
    final_value: float
    halt_step: int
    timed_out: bool = False
    last_range: float = 0.0
    # largest relative change of the cell sum over a single step
    max_step_drift: float = 0.0


def init_ca(election: Election) -> np.ndarray:
    return np.where(np.array(election.votes, dtype=bool), 100.0, 0.0)


@numba.njit(cache=True)
def _step_into(src, dst, r):
    """One synchronous update; returns ``(min, max, sum)`` of the new state."""
    n = src.shape[0]
    k = 2 * r + 1
    lo, hi, total = np.inf, -np.inf, 0.0
    for i in range(n):
        s = 0.0
        for d in range(-r, r + 1):
            j = i + d
            if j < 0:
                j += n
            elif j >= n:
                j -= n
            s += src[j]
        v = s / k
        dst[i] = v
        lo = min(lo, v)
        hi = max(hi, v)
        total += v
    return lo, hi, total


@numba.njit(cache=True)
def _run(state, r, eps, max_steps):
    a = state.copy()
    b = np.empty_like(a)
    steps = 0
    spread = a.max() - a.min()
    prev = a.sum()
    drift = 0.0
    while spread >= eps and steps < max_steps:
        lo, hi, total = _step_into(a, b, r)
        a, b = b, a
        steps += 1
        spread = hi - lo
        if prev != 0.0:
            drift = max(drift, abs(total - prev) / abs(prev))
        prev = total
    return a, steps, spread, drift


def ca_step(state: np.ndarray, r: int = 1) -> np.ndarray:
    state = np.ascontiguousarray(state, dtype=np.float64)
    if r < 1 or 2 * r + 1 > len(state):
        raise ParameterError(f"radius {r} invalid for {len(state)} cells")
    out = np.empty_like(state)
    _step_into(state, out, r)
    return out


def ca_run(s0: np.ndarray, cfg: CaConfig) -> CaResult:
    """Iterate until ``max - min < halt_epsilon``; the final value is the cell mean."""
    s0 = np.ascontiguousarray(s0, dtype=np.float64)
    if len(s0) != cfg.n:
        raise ParameterError(f"state has {len(s0)} cells, config says {cfg.n}")
    final, steps, last, drift = _run(s0, cfg.r, cfg.halt_epsilon, cfg.max_steps)
    return CaResult(float(final.mean()), int(steps), bool(last >= cfg.halt_epsilon), float(last),
                    float(drift))


def ca_history(s0: np.ndarray, r: int, steps: int, every: int = 1) -> np.ndarray:
    """States at steps ``0, every, 2*every, ...`` up to ``steps``; one row each."""
    rows = [np.asarray(s0, dtype=np.float64).copy()]
    a = rows[0].copy()
    b = np.empty_like(a)
    for t in range(1, steps + 1):
        _step_into(a, b, r)
        a, b = b, a
        if t % every == 0:
            rows.append(a.copy())
    return np.array(rows)


def ca_readout(final_value: float) -> tuple[str, float]:
    if not (0.0 <= final_value <= 100.0):
        raise ParameterError(f"final value {final_value} outside [0, 100]")
    if final_value == 50.0:
        raise IndeterminateResult("automaton settled exactly on 50")
    winner = UP if final_value > 50.0 else DOWN
    return winner, max(final_value, 100.0 - final_value)
