"""Edge-step preferential attachment graphs, bootstrap percolation on them,
and a Monte Carlo harness for their degree and outbreak properties."""

from .functions import (
    EdgeStepFunction,
    NormalizerTable,
    build_normalizers,
    check_conditions,
    estimate_c1_c2,
    slow_variation_ratio,
)
from .graph import Multigraph, generate, one_step_increment_distribution, read_edgelist, snapshot_adjacency, write_edgelist
from .percolation import InfectionState, TauRecord, infect_initial, run, step
from .rates import RateFamily

__version__ = "0.1.0"

__all__ = [
    "EdgeStepFunction",
    "NormalizerTable",
    "build_normalizers",
    "check_conditions",
    "estimate_c1_c2",
    "slow_variation_ratio",
    "Multigraph",
    "generate",
    "one_step_increment_distribution",
    "read_edgelist",
    "write_edgelist",
    "snapshot_adjacency",
    "InfectionState",
    "TauRecord",
    "infect_initial",
    "run",
    "step",
    "RateFamily",
]
