"""Bootstrap percolation with threshold r on a multigraph."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import _kernel
from .graph import FORMAT_VERSION, Multigraph

NEVER = np.iinfo(np.int64).max


@dataclass(frozen=True, eq=False)
class InfectionState:
    """Infection rounds per vertex (``NEVER`` when not infected)."""

    round_infected: np.ndarray
    round_sizes: tuple[int, ...]
    r: int
    a: float
    stabilized_round: int | None = None

    @property
    def infected(self) -> np.ndarray:
        return self.round_infected != NEVER

    @property
    def round(self) -> int:
        return len(self.round_sizes) - 1

    @property
    def final_size(self) -> int:
        return self.round_sizes[-1]

    def infected_by(self, s: int) -> np.ndarray:
        return self.round_infected <= s

    def __eq__(self, other):
        if not isinstance(other, InfectionState):
            return NotImplemented
        return (
            np.array_equal(self.round_infected, other.round_infected)
            and self.round_sizes == other.round_sizes
            and (self.r, self.a, self.stabilized_round) == (other.r, other.a, other.stabilized_round)
        )


@dataclass(frozen=True)
class TauRecord:
    c: float
    # None stands for an infinite stopping time
    tau_c: int | None


def _sizes(round_infected: np.ndarray, last: int) -> tuple[int, ...]:
    hit = round_infected[round_infected <= last]
    return tuple(np.cumsum(np.bincount(hit, minlength=last + 1)).tolist())


def initial_state(g: Multigraph, infected0: np.ndarray, r: int = 2, a: float = float("nan")) -> InfectionState:
    infected0 = np.asarray(infected0, dtype=bool)
    if infected0.shape != (g.n_vertices,):
        raise ValueError("initial infection mask must have one entry per vertex")
    rounds = np.where(infected0, 0, NEVER).astype(np.int64)
    return InfectionState(rounds, _sizes(rounds, 0), int(r), float(a))


def infect_initial(g: Multigraph, a: float, seed: int, r: int = 2) -> InfectionState:
    """Round 0: each vertex infected independently with probability ``min(1, a/V)``.

    One uniform per vertex, so states from the same seed are coupled: a larger
    ``a`` never infects fewer vertices.
    """
    if a < 0:
        raise ValueError("infection rate a must be >= 0")
    V = g.n_vertices
    p = min(1.0, a / V) if V else 0.0
    u = np.random.Generator(np.random.PCG64(seed)).random(V)
    return initial_state(g, u < p, r, a)


def step(g: Multigraph, state: InfectionState) -> InfectionState:
    """One round: uninfected vertices with at least r edges into the infected set join.

    Edges count with multiplicity; loops never count. A state with nothing
    left to infect is returned marked stabilized.
    """
    if state.stabilized_round is not None:
        return state
    infected = state.infected
    counts = g.adjacency.edges_into(infected)
    new = ~infected & (counts >= state.r)
    if not new.any():
        return replace(state, stabilized_round=state.round)
    nxt = state.round + 1
    rounds = state.round_infected.copy()
    rounds[new] = nxt
    return replace(state, round_infected=rounds, round_sizes=state.round_sizes + (int(infected.sum() + new.sum()),))


def tau(round_sizes: Sequence[int], V: int, c: float) -> int | None:
    """First round whose infected count reaches ``c * V``."""
    need = c * V
    for s, n in enumerate(round_sizes):
        if n >= need:
            return s
    return None


def run_from(
    g: Multigraph,
    state: InfectionState,
    c_list: Sequence[float] = (),
    max_rounds: int | None = None,
) -> tuple[InfectionState, list[TauRecord]]:
    """Iterate rounds from ``state`` until stable or ``max_rounds`` rounds are done.

    Frontier algorithm: only neighbours of the last round's new infections are
    touched, with running counters of infected-edge multiplicity.
    """
    if state.r < 2:
        raise ValueError("threshold r must be >= 2")
    V = g.n_vertices
    max_rounds = V + 1 if max_rounds is None else int(max_rounds)
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    adj = g.adjacency
    rounds = state.round_infected.copy()
    start = state.round
    if start:
        # resume: re-base earlier rounds at 0, the kernel seeds from round 0 only
        counts = adj.edges_into(rounds < start)
        frontier_round = rounds == start
        rounds = np.where(rounds < start, NEVER - 1, np.where(frontier_round, 0, rounds))
    else:
        counts = np.zeros(V, dtype=np.int64)
    last, stable = _kernel.frontier_rounds(
        adj.indptr, adj.nbr - 1, adj.mult, rounds, counts, state.r, max_rounds, NEVER
    )
    if start:
        rounds = np.where(rounds == NEVER - 1, state.round_infected, np.where(rounds == NEVER, NEVER, rounds + start))
        last += start
    out = InfectionState(rounds, _sizes(rounds, last), state.r, state.a, last if stable else None)
    taus = [TauRecord(float(c), tau(out.round_sizes, V, c)) for c in c_list]
    return out, taus


def run(
    g: Multigraph,
    a: float,
    r: int,
    c_list: Sequence[float] = (),
    seed: int = 0,
    max_rounds: int | None = None,
) -> tuple[InfectionState, list[TauRecord]]:
    if r < 2:
        raise ValueError("threshold r must be >= 2")
    return run_from(g, infect_initial(g, a, seed, r), c_list, max_rounds)


def run_record(g: Multigraph, state: InfectionState, taus: Sequence[TauRecord], seed: int | None) -> dict:
    """The per-run JSON document."""
    V = g.n_vertices
    return {
        "format_version": FORMAT_VERSION,
        "V": V,
        "E": g.t,
        "a": state.a,
        "r": state.r,
        "seed": seed,
        "round_sizes": list(state.round_sizes),
        "stabilized": state.stabilized_round is not None,
        "tau": {repr(tr.c): tr.tau_c for tr in taus},
        "final_fraction": state.final_size / V if V else 0.0,
    }
