"""Compiled inner loops. Random draws are made by the caller with numpy."""

import numba
import numpy as np


@numba.njit(cache=True)
def grow(half_edges, birth, s0, z, j1, j2, n_vertices):
    """Advance from time ``s0`` by ``len(z)`` steps; returns the new vertex count.

    Step ``k`` is the transition ``s -> s+1`` with ``s = s0 + k``. ``j1``/``j2``
    are uniform half-edge slots in ``[0, 2s)``, so ``half_edges[j]`` is a vertex
    drawn with probability ``degree / 2s``.
    """
    for k in range(z.shape[0]):
        s = s0 + k
        pos = 2 * s
        u = half_edges[j1[k]]
        if z[k]:
            n_vertices += 1
            half_edges[pos] = u
            half_edges[pos + 1] = n_vertices
            birth[n_vertices - 1] = s + 1
        else:
            half_edges[pos] = u
            half_edges[pos + 1] = half_edges[j2[k]]
    return n_vertices


@numba.njit(cache=True)
def frontier_rounds(indptr, nbr, mult, round_infected, counts, r, max_rounds, never):
    """Bootstrap rounds with per-vertex counters of infected-edge multiplicity.

    ``round_infected`` holds 0 for initially infected vertices and ``never``
    otherwise; it is filled in place. Returns the number of rounds run and
    whether the process stabilized.
    """
    n = round_infected.shape[0]
    frontier = np.empty(n, dtype=np.int64)
    nf = 0
    for v in range(n):
        if round_infected[v] == 0:
            frontier[nf] = v
            nf += 1
    nxt = np.empty(n, dtype=np.int64)
    rnd = 0
    while nf > 0:
        if rnd == max_rounds:
            return rnd, False
        rnd += 1
        nn = 0
        for a in range(nf):
            u = frontier[a]
            for e in range(indptr[u], indptr[u + 1]):
                v = nbr[e]
                if round_infected[v] != never:
                    continue
                before = counts[v]
                counts[v] = before + mult[e]
                if before < r and counts[v] >= r:
                    nxt[nn] = v
                    nn += 1
        for a in range(nn):
            round_infected[nxt[a]] = rnd
        frontier, nxt = nxt, frontier
        nf = nn
        if nf == 0:
            # the last round added nothing
            return rnd - 1, True
    return rnd, True
