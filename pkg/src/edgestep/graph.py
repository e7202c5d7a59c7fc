"""The growing multigraph G_t(f) and its sequential generator."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import _kernel
from .functions import CONVENTIONS, NEXT, EdgeStepFunction

FORMAT_VERSION = 1
CHUNK = 1 << 18
DEFAULT_MEMORY_LIMIT = int(os.environ.get("EDGESTEP_MEMORY_LIMIT", 4 << 30))


class ResourceError(RuntimeError):
    """Requested run does not fit the memory budget."""


class EdgeListError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class Adjacency:
    """CSR view of the aggregated multigraph, 0-based rows.

    Row ``v-1`` lists neighbours ``u != v`` (1-based ids) with edge
    multiplicities; loops are kept apart in ``loops``.
    """

    indptr: np.ndarray
    nbr: np.ndarray
    mult: np.ndarray
    loops: np.ndarray

    def row(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[v - 1], self.indptr[v]
        return self.nbr[lo:hi], self.mult[lo:hi]

    def multiplicity(self, v: int, u: int) -> int:
        if u == v:
            return int(self.loops[v - 1])
        nb, m = self.row(v)
        k = np.searchsorted(nb, u)
        return int(m[k]) if k < nb.size and nb[k] == u else 0

    def distinct_neighbors(self) -> np.ndarray:
        """Count of distinct neighbours per vertex; a loop counts the vertex itself once."""
        return np.diff(self.indptr) + (self.loops > 0)

    def edges_into(self, members: np.ndarray) -> np.ndarray:
        """Per vertex, total edge multiplicity to the boolean vertex set ``members``.

        Loops are not counted.
        """
        mask = members[self.nbr - 1]
        rows = np.repeat(np.arange(self.indptr.size - 1), np.diff(self.indptr))
        return np.bincount(rows[mask], weights=self.mult[mask], minlength=self.indptr.size - 1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class Multigraph:
    """Multigraph stored as a flat half-edge array (two 1-based ids per edge).

    Edge ``k`` (1-based) is ``half_edges[2k-2], half_edges[2k-1]``; it was added
    at the step that produced time ``k``. Sampling a uniform slot of
    ``half_edges`` picks a vertex with probability ``degree / 2t``.
    """

    half_edges: np.ndarray
    birth_time: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.half_edges.size % 2:
            raise ValueError("half-edge array must have even length")
        self.half_edges.setflags(write=False)
        self.birth_time.setflags(write=False)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[int, int]],
        n_vertices: int | None = None,
        seed: int | None = None,
    ) -> "Multigraph":
        """Build from edges in time order.

        Birth time of a vertex is the index of the first edge touching it,
        which reproduces the generator's birth times; vertices without edges
        get birth time ``t``.
        """
        he = np.asarray(list(edges), dtype=np.int64).reshape(-1)
        V = int(he.max()) if he.size else 0
        if n_vertices is not None:
            if n_vertices < V:
                raise ValueError(f"edge mentions vertex {V} but n_vertices={n_vertices}")
            V = int(n_vertices)
        if he.size and he.min() < 1:
            raise ValueError("vertex ids are 1-based")
        t = he.size // 2
        birth = np.full(V, t, dtype=np.int64)
        if he.size:
            ids, first = np.unique(he, return_index=True)
            birth[ids - 1] = first // 2 + 1
        return cls(he.astype(np.int32), birth, seed)

    @property
    def t(self) -> int:
        return self.half_edges.size // 2

    @property
    def n_vertices(self) -> int:
        return self.birth_time.size

    @property
    def edges(self) -> np.ndarray:
        return self.half_edges.reshape(-1, 2)

    @cached_property
    def degree(self) -> np.ndarray:
        """``degree[v-1]``; a loop adds 2."""
        d = np.bincount(self.half_edges, minlength=self.n_vertices + 1)[1:]
        d.setflags(write=False)
        return d

    @cached_property
    def adjacency(self) -> Adjacency:
        V = self.n_vertices
        e = self.edges
        is_loop = e[:, 0] == e[:, 1]
        loops = np.bincount(e[is_loop, 0], minlength=V + 1)[1:]
        e = e.astype(np.int64)
        e = e[~is_loop]
        # aggregate unordered pairs first; the distinct-pair list is small
        pairs, mult = np.unique(e.min(axis=1) * (V + 1) + e.max(axis=1), return_counts=True)
        del e
        lo, hi = np.divmod(pairs, V + 1)
        codes = np.concatenate([lo * (V + 1) + hi, hi * (V + 1) + lo])
        order = np.argsort(codes, kind="stable")
        codes = codes[order]
        mult = np.concatenate([mult, mult])[order]
        rows, nbr = np.divmod(codes, V + 1)
        indptr = np.zeros(V + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=V + 1)[1:], out=indptr[1:])
        adj = Adjacency(indptr, nbr.astype(np.int64), mult.astype(np.int64), loops.astype(np.int64))
        for a in (adj.indptr, adj.nbr, adj.mult, adj.loops):
            a.setflags(write=False)
        return adj

    def vertex_count_at(self, s) -> np.ndarray | int:
        out = np.searchsorted(self.birth_time, s, side="right")
        return int(out) if np.ndim(out) == 0 else out

    def prefix(self, s: int) -> "Multigraph":
        """The graph at time ``s <= t`` of the same trajectory (shares memory)."""
        if not 1 <= s <= self.t:
            raise ValueError(f"snapshot time {s} outside [1, {self.t}]")
        V = self.vertex_count_at(s)
        return Multigraph(self.half_edges[: 2 * s], self.birth_time[:V], self.seed)

    def check_invariants(self, strict_births: bool = True) -> None:
        """Raise AssertionError when a structural invariant is broken."""
        t = self.t
        assert self.half_edges.size == 2 * t
        assert int(self.degree.sum()) == 2 * t, "degree sum != 2t"
        if self.half_edges.size:
            assert self.half_edges.min() >= 1 and self.half_edges.max() <= self.n_vertices
        b = self.birth_time
        if strict_births:
            assert b.size == 0 or b[0] == 1
            assert np.all(np.diff(b) > 0), "birth times not strictly increasing"
            # every born vertex has an edge, and none appears before its birth
            assert np.all(self.degree >= 1)
            first = np.full(self.n_vertices, t + 1)
            ids, idx = np.unique(self.half_edges, return_index=True)
            first[ids - 1] = idx // 2 + 1
            assert np.array_equal(first, b), "vertex appears before its birth"

    def to_edgelist(self, path) -> None:
        write_edgelist(self, path)


def snapshot_adjacency(g: Multigraph) -> dict[int, list[tuple[int, int]]]:
    """``{v: [(u, multiplicity), ...]}`` sorted by ``u``; loops at v appear as ``(v, k)``."""
    adj = g.adjacency
    out = {}
    for v in range(1, g.n_vertices + 1):
        nb, m = adj.row(v)
        items = list(zip(nb.tolist(), m.tolist()))
        if adj.loops[v - 1]:
            items.append((v, int(adj.loops[v - 1])))
            items.sort()
        out[v] = items
    return out


@dataclass(frozen=True)
class GenerationTrace:
    final: Multigraph
    snapshots: dict[int, Multigraph]
    rng_seed: int
    convention: str = NEXT
    # True at index k when the step producing time k+2 was a vertex-step
    step_kinds: np.ndarray | None = field(default=None, repr=False)

    @property
    def vertex_count_series(self) -> list[tuple[int, int]]:
        times = sorted(set(self.snapshots) | {self.final.t})
        return [(s, self.final.vertex_count_at(s)) for s in times]

    def step_log(self) -> list[tuple[str, int, int]]:
        """``(kind, u, v)`` per step; needs ``step_log=True`` at generation."""
        if self.step_kinds is None:
            raise ValueError("trace was generated without a step log")
        e = self.final.edges[1:]
        return [
            ("vertex" if k else "edge", int(a), int(b)) for k, (a, b) in zip(self.step_kinds, e)
        ]


def estimate_memory(T: int, step_log: bool = False) -> int:
    per_chunk = CHUNK * (8 + 8 + 8 + 1)
    return 2 * T * 4 + T * 8 + per_chunk + (T if step_log else 0)


def generate(
    f: EdgeStepFunction,
    T: int,
    seed: int,
    snapshot_times: Sequence[int] = (),
    *,
    convention: str = NEXT,
    step_log: bool = False,
    memory_limit: int | None = None,
) -> GenerationTrace:
    """Run the chain G_1 -> G_T.

    G_1 is one vertex with one loop. The transition ``s -> s+1`` draws
    ``Ber(f(s+1))`` (``convention="next"``) or ``Ber(f(s))`` (``"current"``);
    on success a new vertex attaches to a degree-proportional target, else an
    edge joins two independent degree-proportional endpoints.
    """
    T = int(T)
    if T < 1:
        raise ValueError("T must be >= 1")
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    snaps = sorted({int(s) for s in snapshot_times})
    if snaps and (snaps[0] < 1 or snaps[-1] > T):
        raise ValueError(f"snapshot times must lie in [1, {T}]")
    if T > f.horizon:
        raise ValueError(f"f is only defined up to t={int(f.horizon)}")
    limit = DEFAULT_MEMORY_LIMIT if memory_limit is None else memory_limit
    need = estimate_memory(T, step_log)
    if need > limit:
        raise ResourceError(f"T={T} needs ~{need >> 20} MiB, budget is {limit >> 20} MiB")

    rng = np.random.Generator(np.random.PCG64(seed))
    he = np.empty(2 * T, dtype=np.int32)
    he[:2] = 1
    birth = np.empty(T, dtype=np.int64)
    birth[0] = 1
    kinds = np.empty(T - 1, dtype=bool) if step_log else None
    nv = 1
    shift = 1 if convention == NEXT else 0
    for s0 in range(1, T, CHUNK):
        s1 = min(T, s0 + CHUNK)
        s = np.arange(s0, s1, dtype=np.int64)
        p = f.values((s + shift).astype(float))
        z = rng.random(s.size) < p
        j1 = rng.integers(0, 2 * s)
        j2 = rng.integers(0, 2 * s)
        nv = _kernel.grow(he, birth, s0, z, j1, j2, nv)
        if kinds is not None:
            kinds[s0 - 1 : s1 - 1] = z
    final = Multigraph(he, birth[:nv].copy(), int(seed))
    snapshots = {s: final.prefix(s) for s in snaps}
    return GenerationTrace(final, snapshots, int(seed), convention, kinds)


def sample_vertices(g: Multigraph, size: int, rng: np.random.Generator) -> np.ndarray:
    """Degree-proportional draws: uniform half-edge slots, as in every generator step."""
    return g.half_edges[rng.integers(0, 2 * g.t, size)]


@dataclass(frozen=True)
class IncrementEstimate:
    mean: float
    stderr: float
    expected: float
    replicas: int

    @property
    def z_score(self) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.mean == self.expected else float("inf")
        return (self.mean - self.expected) / self.stderr


def one_step_increment_distribution(
    g: Multigraph,
    i: int,
    f: EdgeStepFunction,
    replicas: int,
    seed: int,
    *,
    convention: str = NEXT,
    block: int = 1 << 20,
) -> IncrementEstimate:
    """Resample the single transition ``s -> s+1`` from frozen ``g`` and average ``d_{s+1}(i) - d_s(i)``.

    ``expected`` is the conditional mean ``(1/s - f(s+1)/(2s)) d_s(i)``.
    """
    if not 1 <= i <= g.n_vertices:
        raise ValueError(f"vertex {i} is not born in the graph at time {g.t}")
    s = g.t
    p = f(s + 1) if convention == NEXT else f(s)
    rng = np.random.Generator(np.random.PCG64(seed))
    total = 0.0
    total_sq = 0.0
    left = int(replicas)
    while left > 0:
        n = min(block, left)
        z = rng.random(n) < p
        hit1 = sample_vertices(g, n, rng) == i
        hit2 = sample_vertices(g, n, rng) == i
        inc = np.where(z, hit1, hit1.astype(np.int64) + hit2)
        total += float(inc.sum())
        total_sq += float((inc * inc).sum())
        left -= n
    M = int(replicas)
    mean = total / M
    var = max(total_sq - M * mean * mean, 0.0) / (M - 1) if M > 1 else 0.0
    d = int(g.degree[i - 1])
    expected = (1.0 / s - p / (2.0 * s)) * d
    return IncrementEstimate(mean, float(np.sqrt(var / M)), expected, M)


def write_edgelist(g: Multigraph, path) -> None:
    seed = "none" if g.seed is None else str(g.seed)
    with open(path, "w") as fh:
        fh.write(f"# t={g.t} V={g.n_vertices} seed={seed} format_version={FORMAT_VERSION}\n")
        np.savetxt(fh, g.edges, fmt="%d")


def read_edgelist(path) -> Multigraph:
    """Parse the edge-list format; raises EdgeListError with the offending line."""
    header: dict[str, str] = {}
    edges: list[tuple[int, int]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if lineno == 1:
                    for tok in line[1:].split():
                        k, sep, v = tok.partition("=")
                        if not sep:
                            raise EdgeListError(lineno, f"bad header token {tok!r}")
                        header[k] = v
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EdgeListError(lineno, f"expected 'u v', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListError(lineno, f"non-integer vertex id in {line!r}") from None
            if u < 1 or v < 1:
                raise EdgeListError(lineno, "vertex ids are 1-based")
            edges.append((u, v))
    try:
        n = int(header["V"]) if "V" in header else None
        t = int(header["t"]) if "t" in header else None
        seed = header.get("seed", "none")
        seed = None if seed == "none" else int(seed)
    except ValueError as exc:
        raise EdgeListError(1, f"bad header value: {exc}") from None
    if t is not None and t != len(edges):
        raise EdgeListError(1, f"header says t={t} but file has {len(edges)} edges")
    try:
        return Multigraph.from_edges(edges, n, seed)
    except ValueError as exc:
        raise EdgeListError(1, str(exc)) from None
