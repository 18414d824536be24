"""Particle model of the virtual material.

Particles live in struct-of-arrays form inside :class:`WorldState` so the
per-step loops can run under numba. Slot ``i`` of the arrays is particle id
``i``; ids are compacted after every adaptation pass, so they are only stable
within a step.

Headings are degrees in ``[0, 360)``. Sensor "left" sits at ``heading + SA``
and turning left adds ``RA``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numba
import numpy as np

from .errors import ParameterError
from .lattice import EMPTY, OccupancyGrid, TrailField, cell_of, diffuse_and_decay, project_stimulus

# sensory rules
TURN_CLASSIC = 0  # forward smallest -> random left/right
TURN_TOWARD = 1  # forward smallest -> toward the larger side sensor
TURN_RULES = {"classic": TURN_CLASSIC, "toward": TURN_TOWARD}


@dataclass(frozen=True)
class AgentParams:
    so: float = 5.0
    sa: float = 90.0
    ra: float = 45.0
    deposit: float = 5.0
    step_length: float = 1.0
    adapt_every: int = 2
    decay: float = 0.1
    division_min: int = 1
    division_max: int = 10
    division_window: int = 9
    survival_min: int = 0
    survival_max: int = 24
    survival_window: int = 5
    # whether the centre particle counts towards its own neighbourhood tally
    division_count_self: bool = False
    survival_count_self: bool = True
    turn_rule: str = "toward"

    def __post_init__(self):
        if self.so < 3:
            raise ParameterError(f"SO must be >= 3 px for local coupling, got {self.so}")
        if self.step_length != 1.0:
            raise ParameterError("step_length is fixed at 1 px")
        if self.adapt_every < 1:
            raise ParameterError("adapt_every must be >= 1")
        if not (0.0 <= self.decay < 1.0):
            raise ParameterError(f"decay must be in [0, 1), got {self.decay}")
        if self.deposit < 0 or not math.isfinite(self.deposit):
            raise ParameterError("deposit must be finite and >= 0")
        if self.division_window % 2 == 0 or self.survival_window % 2 == 0:
            raise ParameterError("neighbourhood windows must be odd")
        if self.turn_rule not in TURN_RULES:
            raise ParameterError(f"turn_rule must be one of {sorted(TURN_RULES)}")


@dataclass
class Particle:
    x: float
    y: float
    heading: float
    alive: bool = True
    moved_last_step: bool = False


@dataclass
class WorldState:
    field: TrailField
    occupancy: OccupancyGrid
    px: np.ndarray
    py: np.ndarray
    heading: np.ndarray
    moved: np.ndarray
    alive: np.ndarray
    order: np.ndarray
    n: int
    rng: np.random.Generator
    step: int = 0
    last_moves: int = dc_field(default=0, compare=False)

    @classmethod
    def empty(cls, width: int, height: int, rng: np.random.Generator | int | None = None) -> "WorldState":
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        cap = width * height
        return cls(
            field=TrailField.zeros(width, height),
            occupancy=OccupancyGrid(width, height),
            px=np.zeros(cap),
            py=np.zeros(cap),
            heading=np.zeros(cap),
            moved=np.zeros(cap, dtype=np.bool_),
            alive=np.zeros(cap, dtype=np.bool_),
            order=np.zeros(cap, dtype=np.int64),
            n=0,
            rng=rng,
        )

    @classmethod
    def from_particles(cls, particles, width: int, height: int, rng=None) -> "WorldState":
        world = cls.empty(width, height, rng)
        for p in particles:
            world.add(p)
        return world

    @property
    def width(self) -> int:
        return self.field.width

    @property
    def height(self) -> int:
        return self.field.height

    def add(self, p: Particle) -> int:
        cx, cy = cell_of(p.x, p.y, self.width, self.height)
        if not (0 <= p.y < self.height):
            raise ParameterError(f"particle y={p.y} outside lattice")
        if self.occupancy.cells[cy, cx] != EMPTY:
            raise ParameterError(f"cell ({cx}, {cy}) already occupied")
        i = self.n
        self.px[i], self.py[i] = p.x % self.width, p.y
        self.heading[i] = p.heading % 360.0
        self.moved[i] = p.moved_last_step
        self.alive[i] = True
        self.occupancy.cells[cy, cx] = i
        self.n += 1
        return i

    def particle(self, i: int) -> Particle:
        return Particle(float(self.px[i]), float(self.py[i]), float(self.heading[i]),
                        bool(self.alive[i]), bool(self.moved[i]))

    @property
    def particles(self) -> list[Particle]:
        return [self.particle(i) for i in range(self.n)]

    def cells(self) -> np.ndarray:
        """Occupied ``(x, y)`` cell per live particle."""
        xs = np.floor(self.px[: self.n]).astype(np.int64) % self.width
        ys = np.floor(self.py[: self.n]).astype(np.int64)
        return np.column_stack([xs, ys])

    def rows(self) -> np.ndarray:
        return np.floor(self.py[: self.n]).astype(np.int64)

    def check_invariants(self) -> None:
        """Raise ``AssertionError`` if occupancy and the particle arrays disagree."""
        cells = self.occupancy.cells
        assert self.occupancy.occupied_count() == self.n, "occupied cells != particle count"
        assert self.alive[: self.n].all(), "dead particle inside live range"
        c = self.cells()
        assert (cells[c[:, 1], c[:, 0]] == np.arange(self.n)).all(), "particle not registered in its cell"
        h = self.heading[: self.n]
        assert ((h >= 0) & (h < 360)).all(), "heading outside [0, 360)"
        assert np.isfinite(self.field.values).all() and self.field.values.min() >= 0, "bad field"


# --- kernels -----------------------------------------------------------------


@numba.njit(cache=True)
def _norm_deg(a):
    a = a % 360.0
    if a >= 360.0:  # -tiny % 360 rounds up to 360
        a = 0.0
    return a


@numba.njit(cache=True)
def _sample(values, x, y, dx, dy, so):
    h, w = values.shape
    cx, cy = cell_of(x + so * dx, y + so * dy, w, h)
    return values[cy, cx]


@numba.njit(cache=True)
def _decide(f, fl, fr, heading, ra, rule, coin):
    """Sensory decision table; ``coin`` in [0, 1) breaks random turns."""
    if f > fl and f > fr:
        return heading
    if f < fl and f < fr:
        if rule == 1 and fl != fr:
            return _norm_deg(heading + ra) if fl > fr else _norm_deg(heading - ra)
        return _norm_deg(heading + ra) if coin < 0.5 else _norm_deg(heading - ra)
    if fl < fr:
        return _norm_deg(heading - ra)
    if fr < fl:
        return _norm_deg(heading + ra)
    return heading


@numba.njit(cache=True)
def _sense(values, px, py, hd, i, so, sa, ra, rule, rng):
    x, y, h = px[i], py[i], hd[i]
    r = math.radians(h)
    c, s = math.cos(r), math.sin(r)
    rs = math.radians(sa)
    cs, ss = math.cos(rs), math.sin(rs)
    f = _sample(values, x, y, c, s, so)
    fl = _sample(values, x, y, c * cs - s * ss, s * cs + c * ss, so)
    fr = _sample(values, x, y, c * cs + s * ss, s * cs - c * ss, so)
    coin = 0.5
    if f < fl and f < fr and (rule == 0 or fl == fr):
        coin = rng.random()
    return _decide(f, fl, fr, h, ra, rule, coin)


@numba.njit(cache=True)
def _move(values, occ, px, py, hd, moved, i, deposit, hold, rng):
    """Attempt a 1 px move; returns True on success."""
    h, w = occ.shape
    r = math.radians(hd[i])
    nx = px[i] + math.cos(r)
    ny = py[i] + math.sin(r)
    ox, oy = cell_of(px[i], py[i], w, h)
    ok = False
    if 0.0 <= ny < h:
        cx, cy = cell_of(nx, ny, w, h)
        if occ[cy, cx] == -1 or (cx == ox and cy == oy):
            ok = True
            if hold:
                values[oy, ox] += deposit
            else:
                occ[oy, ox] = -1
                occ[cy, cx] = i
                nx = nx % w
                if nx >= w:
                    nx = 0.0
                px[i] = nx
                py[i] = ny
                values[cy, cx] += deposit
    if not ok:
        hd[i] = rng.random() * 360.0
        if hd[i] >= 360.0:
            hd[i] = 0.0
    moved[i] = ok
    return ok


@numba.njit(cache=True)
def _count(occ, cx, cy, half, cap):
    """Occupied cells in the window; stops early once the tally exceeds ``cap``."""
    h, w = occ.shape
    y0 = max(cy - half, 0)
    y1 = min(cy + half, h - 1)
    c = 0
    if cx - half >= 0 and cx + half < w:
        for y in range(y0, y1 + 1):
            for x in range(cx - half, cx + half + 1):
                c += occ[y, x] >= 0
            if c > cap:
                return c
        return c
    for y in range(y0, y1 + 1):
        for dx in range(-half, half + 1):
            x = cx + dx
            if x < 0:
                x += w
            elif x >= w:
                x -= w
            c += occ[y, x] >= 0
        if c > cap:
            return c
    return c


@numba.njit(cache=True)
def _free_around(occ, cx, cy, pick):
    """With ``pick < 0`` count empty cells in the 3x3 block; otherwise return the
    flat index ``y * w + x`` of the ``pick``-th empty cell in row-major order."""
    h, w = occ.shape
    k = 0
    for dy in range(-1, 2):
        y = cy + dy
        if y < 0 or y >= h:
            continue
        for dx in range(-1, 2):
            x = cx + dx
            if x < 0:
                x += w
            elif x >= w:
                x -= w
            if occ[y, x] == -1:
                if k == pick:
                    return y * w + x
                k += 1
    return k


@numba.njit(cache=True)
def _shuffle(order, n, rng):
    """Fisher-Yates over ``order[:n]`` filled with ``0..n-1``."""
    for i in range(n):
        order[i] = i
    for i in range(n - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        t = order[i]
        order[i] = order[j]
        order[j] = t


@numba.njit(cache=True)
def _try_divide(occ, px, py, hd, moved, alive, i, n_end, lo, hi, half, count_self, rng):
    """Returns the new end index (``n_end + 1`` if a child was spawned)."""
    if not moved[i]:
        return n_end
    h, w = occ.shape
    cx, cy = cell_of(px[i], py[i], w, h)
    adj = 0 if count_self else 1
    c = _count(occ, cx, cy, half, hi + adj) - adj
    if c < lo or c > hi:
        return n_end
    k = _free_around(occ, cx, cy, -1)
    if k == 0:
        return n_end
    slot = _free_around(occ, cx, cy, int(rng.random() * k))
    fx, fy = slot % w, slot // w
    px[n_end] = fx + 0.5
    py[n_end] = fy + 0.5
    a = rng.random() * 360.0
    hd[n_end] = a if a < 360.0 else 0.0
    moved[n_end] = False
    alive[n_end] = True
    occ[fy, fx] = n_end
    return n_end + 1


@numba.njit(cache=True)
def _exceeds(occ, cx, cy, half, cap):
    """True if the window holds more than ``cap`` particles; stops as soon as
    the answer is settled either way."""
    h, w = occ.shape
    y0 = max(cy - half, 0)
    y1 = min(cy + half, h - 1)
    # empty cells we can still meet while count > cap remains possible
    slack = (2 * half + 1) * (y1 - y0 + 1) - cap - 1
    if slack < 0:
        return False
    c = 0
    for y in range(y0, y1 + 1):
        for dx in range(-half, half + 1):
            x = cx + dx
            if x < 0:
                x += w
            elif x >= w:
                x -= w
            if occ[y, x] >= 0:
                c += 1
                if c > cap:
                    return True
            else:
                slack -= 1
                if slack < 0:
                    return False
    return False


@numba.njit(cache=True)
def _survive(occ, px, py, alive, i, lo, hi, half, count_self):
    h, w = occ.shape
    cx, cy = cell_of(px[i], py[i], w, h)
    adj = 0 if count_self else 1
    if lo <= 1 - adj:
        # the lower bound cannot fail (the window always holds the particle itself)
        if not _exceeds(occ, cx, cy, half, hi + adj):
            return True
    else:
        c = _count(occ, cx, cy, half, hi + adj) - adj
        if lo <= c <= hi:
            return True
    alive[i] = False
    occ[cy, cx] = -1
    return False


@numba.njit(cache=True)
def _compact(occ, px, py, hd, moved, alive, n):
    h, w = occ.shape
    j = 0
    for i in range(n):
        if alive[i]:
            if i != j:
                px[j] = px[i]
                py[j] = py[i]
                hd[j] = hd[i]
                moved[j] = moved[i]
                alive[j] = True
                alive[i] = False
            cx, cy = cell_of(px[j], py[j], w, h)
            occ[cy, cx] = j
            j += 1
    return j


@numba.njit(cache=True)
def _agent_pass(values, occ, px, py, hd, moved, order, n, so, sa, ra, rule, deposit, hold, rng):
    _shuffle(order, n, rng)
    moves = 0
    for k in range(n):
        i = order[k]
        hd[i] = _sense(values, px, py, hd, i, so, sa, ra, rule, rng)
        if _move(values, occ, px, py, hd, moved, i, deposit, hold, rng):
            moves += 1
    return moves


@numba.njit(cache=True)
def _adapt_pass(occ, px, py, hd, moved, alive, order, n,
                dlo, dhi, dhalf, dself, slo, shi, shalf, sself, rng):
    _shuffle(order, n, rng)
    end = n
    for k in range(n):
        i = order[k]
        end = _try_divide(occ, px, py, hd, moved, alive, i, end, dlo, dhi, dhalf, dself, rng)
        _survive(occ, px, py, alive, i, slo, shi, shalf, sself)
    return _compact(occ, px, py, hd, moved, alive, end)


# --- per-particle operations ---------------------------------------------------


def sensory_stage(world: WorldState, i: int, params: AgentParams) -> float:
    """New heading for particle ``i`` from its three forward sensors (not stored)."""
    return float(_sense(world.field.values, world.px, world.py, world.heading, i,
                        params.so, params.sa, params.ra, TURN_RULES[params.turn_rule], world.rng))


def motor_stage(world: WorldState, i: int, params: AgentParams, hold: bool = False) -> bool:
    return bool(_move(world.field.values, world.occupancy.cells, world.px, world.py,
                      world.heading, world.moved, i, params.deposit, hold, world.rng))


def try_divide(world: WorldState, i: int, params: AgentParams) -> int:
    end = _try_divide(world.occupancy.cells, world.px, world.py, world.heading, world.moved,
                      world.alive, i, world.n, params.division_min, params.division_max,
                      params.division_window // 2, params.division_count_self, world.rng)
    spawned = end - world.n
    world.n = end
    return spawned


def apply_survival(world: WorldState, i: int, params: AgentParams) -> bool:
    """Survival test for particle ``i``; a dead particle is removed and ids are compacted."""
    ok = _survive(world.occupancy.cells, world.px, world.py, world.alive, i,
                  params.survival_min, params.survival_max,
                  params.survival_window // 2, params.survival_count_self)
    if not ok:
        world.n = _compact(world.occupancy.cells, world.px, world.py, world.heading,
                           world.moved, world.alive, world.n)
    return bool(ok)


def neighbour_count(world: WorldState, i: int, window: int, count_self: bool) -> int:
    cx, cy = cell_of(world.px[i], world.py[i], world.width, world.height)
    c = int(_count(world.occupancy.cells, cx, cy, window // 2, window * window))
    return c if count_self else c - 1


# --- scheduler -------------------------------------------------------------------


def agent_stage(world: WorldState, params: AgentParams, hold: bool = False) -> int:
    """Sense and move every particle once in random order; returns successful moves."""
    moves = _agent_pass(world.field.values, world.occupancy.cells, world.px, world.py,
                        world.heading, world.moved, world.order, world.n, params.so, params.sa, params.ra,
                        TURN_RULES[params.turn_rule], params.deposit, hold, world.rng)
    world.last_moves = int(moves)
    return int(moves)


def adaptation_stage(world: WorldState, params: AgentParams) -> None:
    world.n = int(_adapt_pass(world.occupancy.cells, world.px, world.py, world.heading,
                              world.moved, world.alive, world.order, world.n,
                              params.division_min, params.division_max,
                              params.division_window // 2, params.division_count_self,
                              params.survival_min, params.survival_max,
                              params.survival_window // 2, params.survival_count_self,
                              world.rng))


def adaptation_due(step: int, params: AgentParams) -> bool:
    return step % params.adapt_every == 0


def scheduler_step(world: WorldState, params: AgentParams, hold: bool = False) -> WorldState:
    """One scheduler step: agents, adaptation (when due), then diffusion/decay.

    Adaptation is due when the step counter *before* increment is a multiple of
    ``params.adapt_every``.
    """
    agent_stage(world, params, hold)
    if adaptation_due(world.step, params):
        adaptation_stage(world, params)
    diffuse_and_decay(world.field, params.decay)
    world.step += 1
    return world


def run_hold_phase(world: WorldState, stimulus: np.ndarray, hold_steps: int,
                   params: AgentParams, amount: float = 2.55) -> WorldState:
    """Pin the band: project ``stimulus`` every step while positions stay frozen."""
    if hold_steps < 0:
        raise ParameterError("hold_steps must be >= 0")
    for _ in range(hold_steps):
        project_stimulus(world.field, stimulus, amount)
        scheduler_step(world, params, hold=True)
    return world


def random_heading(rng: np.random.Generator) -> float:
    return float(rng.random() * 360.0)
