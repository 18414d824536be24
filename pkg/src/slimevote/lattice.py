"""Chemoattractant lattice and one-particle-per-cell occupancy grid.

Arrays are indexed ``[y, x]``. The horizontal axis wraps (column ``width``
is column 0); the vertical axis is clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import EncodingError, ParameterError

EMPTY = -1

# Concentrations below this are flushed to zero during diffusion. Keeps the
# far field out of subnormal floats, which are ~100x slower on most CPUs.
FLUSH_BELOW = 1e-12


@dataclass
class TrailField:
    """Non-negative concentration lattice. Shape is fixed at construction."""

    width: int
    height: int
    values: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ParameterError(f"lattice dimensions must be positive, got {self.width}x{self.height}")
        if self.values is None:
            self.values = np.zeros((self.height, self.width), dtype=np.float64)
        else:
            self.values = np.ascontiguousarray(self.values, dtype=np.float64)
            if self.values.shape != (self.height, self.width):
                raise ParameterError(
                    f"values shape {self.values.shape} does not match {self.height}x{self.width}"
                )
        # scratch buffer for the synchronous diffusion pass
        self._scratch = np.empty_like(self.values)

    @classmethod
    def zeros(cls, width: int, height: int) -> "TrailField":
        return cls(width, height)

    def copy(self) -> "TrailField":
        return TrailField(self.width, self.height, self.values.copy())

    def total(self) -> float:
        return float(self.values.sum())


@dataclass
class OccupancyGrid:
    """Per-cell particle id, or ``EMPTY``."""

    width: int
    height: int
    cells: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.cells is None:
            self.cells = np.full((self.height, self.width), EMPTY, dtype=np.int32)

    def occupied_count(self) -> int:
        return int(np.count_nonzero(self.cells != EMPTY))

    def is_free(self, x: int, y: int) -> bool:
        if y < 0 or y >= self.height:
            return False
        return bool(self.cells[y, x % self.width] == EMPTY)


def _check_amount(amount: float) -> None:
    if not math.isfinite(amount) or amount < 0:
        raise ParameterError(f"amount must be finite and >= 0, got {amount!r}")


def deposit(field: TrailField, pos: tuple[int, int], amount: float) -> TrailField:
    """Add ``amount`` at integer cell ``pos`` (x wraps). Mutates and returns ``field``."""
    _check_amount(amount)
    x, y = int(pos[0]), int(pos[1])
    if y < 0 or y >= field.height:
        raise ParameterError(f"y={y} outside lattice of height {field.height}")
    field.values[y, x % field.width] += amount
    return field


@numba.njit(cache=True)
def _diffuse_kernel(src, dst, factor, flush):
    h, w = src.shape
    row = np.empty(w)
    acc = np.empty(w)
    for y in range(h):
        ya = y - 1 if y > 0 else 0
        yb = y + 1 if y < h - 1 else h - 1
        for x in range(w):
            acc[x] = src[ya, x] + src[y, x] + src[yb, x]
        for x in range(1, w - 1):
            row[x] = acc[x - 1] + acc[x] + acc[x + 1]
        # wrapped edge columns; also covers w < 3
        for x in (0, w - 1):
            row[x] = acc[(x - 1) % w] + acc[x] + acc[(x + 1) % w]
        for x in range(w):
            v = row[x] * factor
            dst[y, x] = v if v >= flush else 0.0


def diffuse_and_decay(field: TrailField, decay_rate: float = 0.1) -> TrailField:
    """Replace every cell with its 3x3 mean times ``1 - decay_rate``.

    The update is synchronous. Rows beyond the top/bottom edge replicate the
    edge row, so the total can shrink at the vertical boundary but never grow.
    """
    if not (0.0 <= decay_rate < 1.0):
        raise ParameterError(f"decay_rate must be in [0, 1), got {decay_rate!r}")
    _diffuse_kernel(field.values, field._scratch, (1.0 - decay_rate) / 9.0, FLUSH_BELOW)
    field.values, field._scratch = field._scratch, field.values
    return field


def project_stimulus(field: TrailField, pixels: np.ndarray, amount: float = 2.55) -> TrailField:
    """Add ``amount`` at every pixel of an ``(k, 2)`` array of ``(x, y)`` cells."""
    _check_amount(amount)
    pixels = np.asarray(pixels, dtype=np.int64).reshape(-1, 2)
    if len(pixels) == 0:
        return field
    xs, ys = pixels[:, 0], pixels[:, 1]
    bad = (xs < 0) | (xs >= field.width) | (ys < 0) | (ys >= field.height)
    if bad.any():
        first = pixels[np.argmax(bad)]
        raise EncodingError(f"stimulus pixel {tuple(first)} outside {field.width}x{field.height} lattice")
    # np.add.at handles repeated pixels
    np.add.at(field.values, (ys, xs), amount)
    return field


@numba.njit(cache=True, inline="always")
def cell_of(x, y, width, height):
    """Floor a continuous coordinate to a cell, wrapping x and clamping y."""
    cx = int(math.floor(x))
    if cx < 0 or cx >= width:
        cx %= width
    cy = int(math.floor(y))
    if cy < 0:
        cy = 0
    elif cy > height - 1:
        cy = height - 1
    return cx, cy


@numba.njit(cache=True)
def _sample(values, x, y):
    h, w = values.shape
    cx, cy = cell_of(x, y, w, h)
    return values[cy, cx]


def sample_concentration(field: TrailField, pos: tuple[float, float]) -> float:
    return float(_sample(field.values, float(pos[0]), float(pos[1])))


def render_pgm(values: np.ndarray, path: str | Path, gain: float = 10.0) -> None:
    """Write a binary P5 greymap; each byte is ``min(255, round(value * gain))``."""
    img = np.minimum(255, np.rint(np.asarray(values, dtype=np.float64) * gain)).astype(np.uint8)
    write_pgm(img, path)


def write_pgm(img: np.ndarray, path: str | Path) -> None:
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5 {w} {h} 255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    header, _, body = data.partition(b"\n")
    magic, w, h, maxval = header.split()
    if magic != b"P5" or int(maxval) != 255:
        raise ValueError(f"not an 8-bit P5 file: {header!r}")
    return np.frombuffer(body, dtype=np.uint8).reshape(int(h), int(w))
