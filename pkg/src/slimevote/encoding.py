"""Square-wave spatial encoding of an election.

Each voter owns an equal-width slice of the arena. An up vote (candidate
"Clanton") puts the voter's horizontal segment at ``centre_y - amplitude``
(smaller y is "up"); a down vote ("Tramp") puts it at ``centre_y + amplitude``.
Adjacent voters that disagree are joined by a vertical connector in the
first column of the right-hand voter; the last and first voter are joined the
same way across the horizontal wrap.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .agents import Particle
from .errors import EncodingError, ParameterError, SeedingError

UP = "C"
DOWN = "T"
CANDIDATE_NAMES = {UP: "Clanton", DOWN: "Tramp"}


@dataclass(frozen=True)
class Election:
    """Ordered votes; ``True`` is an up vote. The voter count must be odd."""

    votes: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "votes", tuple(bool(v) for v in self.votes))
        n = len(self.votes)
        if n == 0 or n % 2 == 0:
            raise EncodingError(f"an election needs an odd number of voters, got {n}")

    @property
    def n(self) -> int:
        return len(self.votes)

    @property
    def up_votes(self) -> int:
        return sum(self.votes)

    def to_text(self) -> str:
        return ",".join(UP if v else DOWN for v in self.votes)

    @classmethod
    def from_text(cls, text: str) -> "Election":
        tokens = [t.strip().upper() for t in text.strip().split(",") if t.strip()]
        bad = [t for t in tokens if t not in (UP, DOWN)]
        if bad:
            raise EncodingError(f"unknown vote tokens {bad!r}; expected {UP!r} or {DOWN!r}")
        return cls(tuple(t == UP for t in tokens))

    @classmethod
    def read(cls, path: str | Path) -> "Election":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text() + "\n", encoding="utf-8")


@dataclass(frozen=True)
class EncodingParams:
    arena_width: int = 600
    arena_height: int = 300
    amplitude: int = 50
    population: int = 3000
    # stroke thickness of the drawn band, in px (odd)
    band_width: int = 5

    def __post_init__(self):
        if self.arena_width <= 0 or self.arena_height <= 0:
            raise ParameterError("arena dimensions must be positive")
        if not (0 <= self.amplitude and 2 * self.amplitude < self.arena_height):
            raise ParameterError(
                f"amplitude {self.amplitude} must satisfy 0 <= A < arena_height/2 = {self.arena_height / 2}"
            )
        if self.band_width < 1 or self.band_width % 2 == 0:
            raise ParameterError(f"band_width must be a positive odd number, got {self.band_width}")
        if self.centre_y + self.amplitude + self.band_width // 2 >= self.arena_height or (
            self.centre_y - self.amplitude - self.band_width // 2 < 0
        ):
            raise ParameterError("stroked band does not fit inside the arena height")
        if self.population < 0:
            raise ParameterError("population must be >= 0")

    @property
    def centre_y(self) -> int:
        return self.arena_height // 2


@dataclass(frozen=True)
class StimulusPolyline:
    """``path`` is the ordered 1 px centre line; ``pixels`` is the stroked band.

    Both are ``(k, 2)`` int arrays of ``(x, y)``. With ``band_width == 1`` the
    two hold the same cells.
    """

    path: np.ndarray
    pixels: np.ndarray
    connectors: int

    def __len__(self) -> int:
        return len(self.pixels)


def voter_columns(n: int, width: int) -> list[tuple[int, int]]:
    """Half-open column ranges per voter; together they tile ``[0, width)``."""
    if n > width:
        raise EncodingError(f"{n} voters do not fit in {width} columns")
    spacing = width / n
    edges = [int(round(i * spacing)) for i in range(n + 1)]
    return [(edges[i], edges[i + 1]) for i in range(n)]


def build_polyline(election: Election, params: EncodingParams) -> StimulusPolyline:
    n = election.n
    c, a = params.centre_y, params.amplitude
    levels = [c - a if v else c + a for v in election.votes]
    path: list[tuple[int, int]] = []
    connectors = 0
    for i, (x0, x1) in enumerate(voter_columns(n, params.arena_width)):
        prev = levels[i - 1]  # i == 0 picks the last voter: the wrap seam
        if prev != levels[i]:
            connectors += 1
            step = 1 if levels[i] > prev else -1
            path.extend((x0, y) for y in range(prev, levels[i], step))
        path.extend((x, levels[i]) for x in range(x0, x1))
    path_arr = np.array(path, dtype=np.int64).reshape(-1, 2)
    return StimulusPolyline(path_arr, _stroke(path_arr, params), connectors)


def _stroke(path: np.ndarray, params: EncodingParams) -> np.ndarray:
    half = params.band_width // 2
    if half == 0:
        return np.unique(path, axis=0)
    mask = np.zeros((params.arena_height, params.arena_width), dtype=bool)
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            ys = path[:, 1] + dy
            ok = (ys >= 0) & (ys < params.arena_height)
            mask[ys[ok], (path[ok, 0] + dx) % params.arena_width] = True
    ys, xs = np.nonzero(mask)
    return np.column_stack([xs, ys]).astype(np.int64)


def random_election(n: int, rng: np.random.Generator) -> Election:
    if n <= 0 or n % 2 == 0:
        raise EncodingError(f"an election needs an odd number of voters, got {n}")
    return Election(tuple(bool(v) for v in rng.integers(0, 2, size=n)))


def seed_positions(polyline: StimulusPolyline, count: int, rng: np.random.Generator) -> np.ndarray:
    """Pick ``count`` distinct band pixels; returns ``(count, 2)`` cell-centre coordinates."""
    available = len(polyline.pixels)
    if count < 0:
        raise SeedingError(f"count must be >= 0, got {count}")
    if count > available:
        raise SeedingError(f"cannot seed {count} particles on a band of {available} pixels")
    idx = rng.choice(available, size=count, replace=False)
    return polyline.pixels[idx].astype(np.float64) + 0.5


def cyclic_sign_changes(votes: Sequence[bool]) -> int:
    return sum(votes[i] != votes[i - 1] for i in range(len(votes)))


def seed_population(polyline: StimulusPolyline, count: int, rng: np.random.Generator) -> list[Particle]:
    """One particle on each of ``count`` distinct band pixels, random headings."""
    pos = seed_positions(polyline, count, rng)
    headings = rng.random(count) * 360.0
    return [Particle(float(x), float(y), float(h)) for (x, y), h in zip(pos, headings)]
