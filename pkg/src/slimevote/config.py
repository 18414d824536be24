"""Experiment configuration: one flat dataclass, loadable from ``key=value`` files."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .agents import AgentParams
from .analysis import halt_threshold_for
from .ca import CaConfig
from .encoding import EncodingParams
from .errors import ParameterError

MODES = ("agent-run", "agent-batch", "ca-run", "ca-sweep-n", "ca-sweep-r", "render")

SWEEP_N = (25, 49, 99, 113, 133, 159, 199, 265, 399, 799)
SWEEP_R = (1, 3, 5, 9, 15, 19, 29, 39)
SWEEP_R_CELLS = 199


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "agent-run"
    seed: int = 0
    voters: int = 9
    runs: int = 1
    workers: int = 1
    out: str = "out"
    votes_file: str | None = None
    frames_every: int = 0
    # particle model
    so: float = 5.0
    sa: float = 90.0
    ra: float = 45.0
    deposit: float = 5.0
    decay: float = 0.1
    adapt_every: int = 2
    turn_rule: str = "toward"
    division_count_self: bool = False
    survival_count_self: bool = True
    # encoding
    arena_width: int = 600
    arena_height: int = 300
    amplitude: int = 50
    population: int = 3000
    band_width: int = 5
    stimulus: float = 2.55
    hold_steps: int = 20
    # measurement
    halt_thickness: float | None = None
    sample_every: int = 50
    max_steps: int = 500_000
    render_gain: float = 10.0
    check_invariants: bool = False
    # automaton
    radius: int = 1
    epsilon: float = 0.01
    ca_max_steps: int = 10_000_000

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (0 <= self.seed < 2**64):
            raise ParameterError("seed must be a 64-bit unsigned integer")
        for name in ("runs", "workers", "sample_every"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1")
        if self.frames_every < 0 or self.hold_steps < 0 or self.max_steps < 0:
            raise ParameterError("frames_every, hold_steps and max_steps must be >= 0")
        if self.voters <= 0 or self.voters % 2 == 0:
            raise ParameterError(f"voters must be odd, got {self.voters}")
        if self.halt_thickness is not None and self.halt_thickness <= 0:
            raise ParameterError("halt_thickness must be > 0")
        # surface bad model parameters at config time, not mid-run
        self.agent_params()
        self.encoding_params()

    def agent_params(self) -> AgentParams:
        return AgentParams(
            so=self.so, sa=self.sa, ra=self.ra, deposit=self.deposit, decay=self.decay,
            adapt_every=self.adapt_every, turn_rule=self.turn_rule,
            division_count_self=self.division_count_self,
            survival_count_self=self.survival_count_self,
        )

    def encoding_params(self) -> EncodingParams:
        return EncodingParams(self.arena_width, self.arena_height, self.amplitude,
                              self.population, self.band_width)

    def ca_config(self, n: int | None = None, r: int | None = None) -> CaConfig:
        return CaConfig(n or self.voters, r or self.radius, self.epsilon, self.ca_max_steps)

    @property
    def halt_threshold(self) -> float:
        if self.halt_thickness is not None:
            return self.halt_thickness
        return halt_threshold_for(self.so)

    def replace(self, **changes: Any) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def echo(self) -> str:
        """Single-line ``key=value;...`` rendering, echoed into output headers."""
        return ";".join(f"{f.name}={getattr(self, f.name)}" for f in dataclasses.fields(self))


def run_seed(root: int, *keys: int) -> int:
    """Per-run 64-bit seed: the root seed and run keys (e.g. run index) mixed
    through ``numpy.random.SeedSequence``. Distinct keys give independent streams."""
    ss = np.random.SeedSequence([int(root), *map(int, keys)])
    return int(ss.generate_state(1, np.uint64)[0])


def run_rng(root: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(run_seed(root, *keys))


def _coerce(name: str, raw: str) -> Any:
    types = typing.get_type_hints(ExperimentConfig)
    if name not in types:
        raise ParameterError(f"unknown config key {name!r}")
    tp = types[name]
    args = [a for a in typing.get_args(tp) if a is not type(None)]
    optional = bool(args)
    if optional:
        tp = args[0]
    raw = raw.strip()
    if optional and raw.lower() in ("", "none"):
        return None
    if tp is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ParameterError(f"{name}: expected a boolean, got {raw!r}")
    try:
        return tp(raw)
    except ValueError as exc:
        raise ParameterError(f"{name}: {exc}") from None


def parse_config_text(text: str) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip().replace("-", "_")
        values[key] = _coerce(key, raw)
    return values


def load_config(path: str | Path, **overrides: Any) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text(encoding="utf-8"))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def dump_config(cfg: ExperimentConfig) -> str:
    return "".join(f"{f.name}={getattr(cfg, f.name)}\n" for f in dataclasses.fields(cfg))
