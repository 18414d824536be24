"""Majority voting by morphological adaptation of a particle band.

An election is drawn as a square wave on a 2D trail lattice, seeded with
particles, and left to shorten into a straight band whose height gives the
winner. A 1D averaging automaton provides the matching abstract model.
"""

from .config import ExperimentConfig
from .encoding import Election
from .harness import run_agent_batch, run_agent_experiment, run_ca_sweep

__all__ = ["Election", "ExperimentConfig", "run_agent_batch", "run_agent_experiment", "run_ca_sweep"]
