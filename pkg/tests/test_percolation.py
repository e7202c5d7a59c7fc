import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgestep.functions import EdgeStepFunction
from edgestep.graph import Multigraph, generate
from edgestep.percolation import (
    NEVER,
    infect_initial,
    initial_state,
    run,
    run_from,
    run_record,
    step,
    tau,
)

from oracles import brute_force_rounds, pcg_initial_infection


def mask(V, members):
    m = np.zeros(V, dtype=bool)
    m[[v - 1 for v in members]] = True
    return m


def rounds_as_sets(state):
    ri = state.round_infected
    return [frozenset(int(v) + 1 for v in np.flatnonzero(ri <= s)) for s in range(state.round + 1)]


def test_initial_full_and_empty():
    g = generate(EdgeStepFunction.constant(0.5), 300, 1).final
    full = infect_initial(g, g.n_vertices, 3)
    assert full.infected.all() and full.round_sizes == (g.n_vertices,)
    # a larger than V is clamped to probability one
    assert infect_initial(g, 10 * g.n_vertices, 3).infected.all()
    assert not infect_initial(g, 0.0, 3).infected.any()
    with pytest.raises(ValueError):
        infect_initial(g, -1.0, 0)


def test_initial_matches_documented_rule():
    g = generate(EdgeStepFunction.constant(0.7), 200, 4).final
    st0 = infect_initial(g, 12.5, 99)
    oracle = pcg_initial_infection(g.n_vertices, 12.5, 99)
    assert set((np.flatnonzero(st0.infected) + 1).tolist()) == oracle


def test_initial_binomial_mean():
    g = Multigraph.from_edges([(v, v + 1) for v in range(1, 1000)] + [(1, 1)])
    assert g.n_vertices == 1000
    sizes = np.array([infect_initial(g, 100, s).final_size for s in range(10_000)])
    se = sizes.std(ddof=1) / np.sqrt(sizes.size)
    assert abs(sizes.mean() - 100) <= 4 * se


def test_step_examples():
    path = Multigraph.from_edges([(1, 2), (2, 3)])
    s1 = step(path, initial_state(path, mask(3, [1, 3])))
    assert s1.round_infected.tolist() == [0, 1, 0] and s1.round_sizes == (2, 3)

    dbl = Multigraph.from_edges([(1, 2), (1, 2)])
    s1 = step(dbl, initial_state(dbl, mask(2, [1])))
    assert s1.round_infected.tolist() == [0, 1]

    loops = Multigraph.from_edges([(1, 1)] * 5 + [(2, 3), (3, 2)])
    s0 = initial_state(loops, mask(3, [2]))
    s = step(loops, step(loops, s0))
    assert s.round_infected[0] == NEVER
    assert s.round_infected[2] == 1

    # a single loop at an uninfected vertex with one infected neighbour does not help
    g = Multigraph.from_edges([(1, 2), (2, 2)])
    assert step(g, initial_state(g, mask(2, [1]))).stabilized_round == 0


def test_run_full_infection():
    g = generate(EdgeStepFunction.power(0.5), 2000, 5).final
    state, taus = run(g, g.n_vertices, 3, [0.1, 0.5, 1.0], seed=1)
    assert [t.tau_c for t in taus] == [0, 0, 0]
    assert state.stabilized_round == 0 and state.round_sizes == (g.n_vertices,)


def test_run_zero_rate():
    g = generate(EdgeStepFunction.power(0.5), 2000, 5).final
    state, taus = run(g, 0.0, 2, [0.01, 1.0], seed=1)
    assert state.final_size == 0 and [t.tau_c for t in taus] == [None, None]


def test_run_star():
    m, r = 6, 2
    star = Multigraph.from_edges([(1, k) for k in range(2, m + 2)])
    state, _ = run_from(star, initial_state(star, mask(m + 1, range(2, 2 + r))))
    assert state.round_infected[0] == 1
    assert state.stabilized_round == 1
    assert state.final_size == r + 1


def test_run_rejects_bad_arguments():
    g = Multigraph.from_edges([(1, 2)])
    with pytest.raises(ValueError):
        run(g, 1.0, 1)
    with pytest.raises(ValueError):
        run(g, 1.0, 2, max_rounds=0)


def test_max_rounds_flags_non_stabilized():
    path = Multigraph.from_edges([(k, k + 1) for k in range(1, 10)] + [(k, k + 2) for k in range(1, 9)])
    s0 = initial_state(path, mask(10, [1, 2]))
    state, _ = run_from(path, s0, max_rounds=2)
    assert state.stabilized_round is None and state.round == 2
    done, _ = run_from(path, s0)
    assert done.stabilized_round is not None and done.final_size == 10


def test_ten_vertex_run_matches_brute_force():
    edges = [(1, 2), (2, 3), (3, 1), (3, 4), (4, 5), (5, 3), (5, 6), (6, 7), (7, 5), (7, 8), (8, 9), (9, 10), (10, 8), (2, 9)]
    g = Multigraph.from_edges(edges)
    I0 = {1, 2}
    state, _ = run_from(g, initial_state(g, mask(10, I0)))
    hist = brute_force_rounds(edges, 10, I0, 2)
    assert rounds_as_sets(state) == hist


def test_tau_definition():
    assert tau((1, 3, 5, 10), 10, 0.5) == 2
    assert tau((1, 3, 5, 10), 10, 1.0) == 3
    assert tau((0, 0), 10, 0.1) is None


multigraphs = st.integers(1, 8).flatmap(
    lambda V: st.tuples(
        st.just(V),
        st.lists(st.tuples(st.integers(1, V), st.integers(1, V)), min_size=0, max_size=12),
    )
)


@settings(max_examples=60, deadline=None)
@given(multigraphs, st.sampled_from([2, 3]))
def test_oracle_equivalence_exhaustive(gv, r):
    V, edges = gv
    # pad with loops so every vertex exists and the graph is non-empty
    edges = list(edges) + [(v, v) for v in range(1, V + 1)]
    g = Multigraph.from_edges(edges, n_vertices=V)
    for k in range(V + 1):
        for I0 in itertools.combinations(range(1, V + 1), k):
            state, _ = run_from(g, initial_state(g, mask(V, I0), r))
            hist = brute_force_rounds(edges, V, set(I0), r)
            assert rounds_as_sets(state) == hist
            assert state.stabilized_round == len(hist) - 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.floats(0, 50), st.floats(0, 50))
def test_monotone_in_a_under_coupling(seed, a1, a2):
    lo, hi = sorted((a1, a2))
    g = generate(EdgeStepFunction.power(0.5), 3000, seed).final
    s_lo, _ = run(g, lo, 2, seed=seed)
    s_hi, _ = run(g, hi, 2, seed=seed)
    assert np.all(s_hi.infected_by(0) >= s_lo.infected_by(0))
    assert np.all(s_hi.infected >= s_lo.infected)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.5, 200), st.sampled_from([2, 3]))
def test_state_invariants(seed, a, r):
    g = generate(EdgeStepFunction.constant(0.3), 1500, seed).final
    state, _ = run(g, a, r, seed=seed)
    assert state.stabilized_round is not None and state.stabilized_round <= g.n_vertices
    sizes = state.round_sizes
    assert all(x <= y for x, y in zip(sizes, sizes[1:]))
    # after round 0 every round adds someone until the fixed point
    assert all(x < y for x, y in zip(sizes, sizes[1:]))
    assert step(g, state) is state


def test_step_idempotent_and_resume():
    g = generate(EdgeStepFunction.constant(0.2), 4000, 8).final
    s0 = infect_initial(g, 40, 6)
    s = s0
    for _ in range(3):
        s = step(g, s)
    resumed, _ = run_from(g, s)
    direct, _ = run_from(g, s0)
    assert resumed == direct
    fixed = direct
    once = step(g, fixed)
    assert once == fixed and step(g, once) is once


def test_full_recount_matches_frontier():
    g = generate(EdgeStepFunction.constant(0.1), 3000, 2).final
    s = infect_initial(g, 30, 3)
    while s.stabilized_round is None:
        s = step(g, s)
    fast, _ = run(g, 30, 2, seed=3)
    assert s == fast


def test_run_record_fields():
    tri = Multigraph.from_edges([(1, 2), (2, 3), (3, 1)])
    state, taus = run(tri, 3, 2, [1.0], seed=0)
    rec = run_record(tri, state, taus, 0)
    assert rec["round_sizes"] == [3] and rec["tau"] == {"1.0": 0}
    assert rec["V"] == 3 and rec["E"] == 3 and rec["final_fraction"] == 1.0
    assert rec["format_version"] == 1
