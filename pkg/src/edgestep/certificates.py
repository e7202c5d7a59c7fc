"""Structural witnesses behind the three-round outbreak: star, hub set H, susceptible set S.

Thresholds follow the growth functions ``g(t) = (1-gamma)/f(t)`` and
``h(t) = C1 g(t) / (6 (r+1)^2 C2 log t)``. The existential constants (zeta,
kappa) are not asserted; the measured ratios are reported instead.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .functions import EdgeStepFunction
from .graph import FORMAT_VERSION, Multigraph
from .rates import RateFamily


@dataclass(frozen=True)
class ThresholdPlan:
    t: int
    r: int
    a_t: float
    gamma: float
    f_t: float
    g_t: float
    h_at: float
    C1: float
    C2: float
    function: EdgeStepFunction = field(repr=False)

    @classmethod
    def build(
        cls, f: EdgeStepFunction, t: int, r: int, a_t: float, C1: float, C2: float
    ) -> "ThresholdPlan":
        if f.gamma >= 1.0:
            raise ValueError("thresholds need gamma < 1")
        if a_t <= 1.0:
            raise ValueError(f"h(a_t) needs a_t > 1, got {a_t}")
        f_t = f(t)
        return cls(
            t=int(t),
            r=int(r),
            a_t=float(a_t),
            gamma=f.gamma,
            f_t=f_t,
            g_t=growth_g(f, t),
            h_at=growth_h(f, a_t, r, C1, C2),
            C1=float(C1),
            C2=float(C2),
            function=f,
        )

    @property
    def star_degree_threshold(self) -> float:
        return self.C1 * self.t / (self.C2 * self.h_at)

    @property
    def hub_degree_threshold(self) -> float:
        """g(t) capped at 2t, the largest degree any vertex can have at time t."""
        return min(self.g_t, 2.0 * self.t)

    def vertex_bound(self, time: int) -> float:
        """``15 f(time) time / (8 (1 - gamma))``."""
        return 15.0 * self.function(time) * time / (8.0 * (1.0 - self.gamma))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("function")
        d["star_degree_threshold"] = self.star_degree_threshold
        d["hub_degree_threshold"] = self.hub_degree_threshold
        return d


def growth_g(f: EdgeStepFunction, t: float) -> float:
    """``(1 - gamma) / f(t)``, infinite where f vanishes."""
    ft = f(t)
    return (1.0 - f.gamma) / ft if ft > 0 else math.inf


def growth_h(f: EdgeStepFunction, t: float, r: int, C1: float, C2: float) -> float:
    return C1 * growth_g(f, t) / (6.0 * (r + 1) ** 2 * C2 * math.log(t))


@dataclass(frozen=True)
class StarWitness:
    vertex: int
    degree: int
    distinct_neighbors: int
    meets_P1: bool


@dataclass(frozen=True)
class HubWitness:
    vertices: np.ndarray
    star: int
    total_degree: int
    # over hub members other than the star; None for an empty hub
    min_edges_to_star: int | None
    meets_total_degree: bool
    meets_star_edges: bool

    @property
    def verdict(self) -> bool:
        return self.meets_total_degree and self.meets_star_edges


def find_star(g: Multigraph, plan: ThresholdPlan) -> StarWitness:
    """Maximum-degree vertex (smallest id on ties) and the P1 test on ``g``."""
    deg = g.degree
    v = int(np.argmax(deg)) + 1
    d = int(deg[v - 1])
    gamma_v = int(g.adjacency.distinct_neighbors()[v - 1])
    meets = d >= plan.star_degree_threshold and g.n_vertices <= plan.vertex_bound(g.t)
    return StarWitness(v, d, gamma_v, bool(meets))


def hub_members(g: Multigraph, threshold: float) -> np.ndarray:
    return np.flatnonzero(g.degree >= threshold) + 1


def edges_to(g: Multigraph, v: int) -> np.ndarray:
    """Edge multiplicity from every vertex to ``v`` (loops excluded)."""
    out = np.zeros(g.n_vertices, dtype=np.int64)
    nb, m = g.adjacency.row(v)
    out[nb - 1] = m
    return out


def check_hub(g_late: Multigraph, hub: np.ndarray, star: int, r: int, total_needed: float) -> HubWitness:
    deg = g_late.degree
    total = int(deg[hub - 1].sum()) if hub.size else 0
    others = hub[hub != star]
    to_star = edges_to(g_late, star)[others - 1]
    min_edges = int(to_star.min()) if others.size else None
    meets_edges = hub.size > 0 and (min_edges is None or min_edges >= r)
    return HubWitness(hub, star, total, min_edges, total >= total_needed, bool(meets_edges))


def find_hub_set(
    snapshot_early: Multigraph,
    g_late: Multigraph,
    plan: ThresholdPlan,
    star: int | None = None,
    total_fraction: float = 1.0 / 8.0,
) -> HubWitness:
    """H = vertices of degree >= g(t) (capped at 2t) in the early snapshot, checked in the late graph.

    Checks total degree of H in ``g_late`` against ``total_fraction * t`` and
    that every member besides the star has r edges to the star.
    """
    if snapshot_early.seed != g_late.seed:
        raise ValueError("snapshots come from different trajectories")
    if g_late.t < snapshot_early.t:
        raise ValueError("late snapshot precedes the early one")
    if star is None:
        star = find_star(snapshot_early, plan).vertex
    hub = hub_members(snapshot_early, plan.hub_degree_threshold)
    return check_hub(g_late, hub, star, plan.r, total_fraction * plan.t)


def find_susceptible_set(g: Multigraph, hub: Sequence[int], r: int) -> np.ndarray:
    """Vertices outside ``hub`` with at least r edges into it (multiplicities summed)."""
    hub = np.asarray(hub, dtype=np.int64)
    if hub.size == 0:
        raise ValueError("hub set must be non-empty")
    members = np.zeros(g.n_vertices, dtype=bool)
    members[hub - 1] = True
    counts = g.adjacency.edges_into(members)
    return np.flatnonzero(~members & (counts >= r)) + 1


@dataclass(frozen=True)
class ConditionL:
    t: list[int]
    a_t: list[float]
    growth: list[float]
    # (i) is judged pairwise along the grid; the first entry is vacuous
    increasing: list[bool]
    a_below_t: list[bool]
    log_dominates: list[bool]


def validate_condition_L(f: EdgeStepFunction, a_family: RateFamily, t_grid: Sequence[int]) -> ConditionL:
    """(i) ``t f(t) f(a_t) log a_t`` increasing; (ii) ``a_t <= t``; (iii) ``f(a_t) log a_t >= f(t) log t``."""
    ts = [int(t) for t in t_grid]
    a = [float(a_family(t)) for t in ts]
    growth = [t * f(t) * f(at) * math.log(at) for t, at in zip(ts, a)]
    inc = [True] + [y > x for x, y in zip(growth, growth[1:])]
    below = [at <= t for t, at in zip(ts, a)]
    dom = [f(at) * math.log(at) >= f(t) * math.log(t) for t, at in zip(ts, a)]
    return ConditionL(ts, a, growth, inc, below, dom)


@dataclass
class Certificate:
    """P1-P4 verdicts, each at its own time and again on the final graph."""

    plan: ThresholdPlan
    times: dict[str, int]
    star: StarWitness
    hub: HubWitness
    susceptible: np.ndarray
    verdicts: dict[str, bool]
    verdicts_final: dict[str, bool]
    ratios: dict[str, float]
    details: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self, max_ids: int | None = 50) -> dict:
        def ids(a):
            a = [int(x) for x in a]
            return a if max_ids is None else a[:max_ids]

        return {
            "format_version": FORMAT_VERSION,
            "thresholds": self.plan.to_dict(),
            "times": self.times,
            "star": asdict(self.star),
            "hub": {
                "size": int(self.hub.vertices.size),
                "ids": ids(self.hub.vertices),
                "total_degree": self.hub.total_degree,
                "min_edges_to_star": self.hub.min_edges_to_star,
            },
            "susceptible": {"size": int(self.susceptible.size), "ids": ids(self.susceptible)},
            "verdicts": self.verdicts,
            "verdicts_final": self.verdicts_final,
            "ratios": self.ratios,
            "details": self.details,
        }


def proof_times(t: int, r: int) -> dict[str, int]:
    return {"P1": t, "P2": (r + 1) * t, "P3": (r + 1) ** 2 * t, "P4": 2 * (r + 1) ** 2 * t}


def _evaluate(name: str, g: Multigraph, plan: ThresholdPlan, star: int, hub: np.ndarray) -> tuple[bool, dict]:
    r = plan.r
    d_star = int(g.degree[star - 1])
    v_ok = g.n_vertices <= plan.vertex_bound(g.t)
    star_ok = d_star >= plan.star_degree_threshold
    info = {"V": g.n_vertices, "vertex_bound": plan.vertex_bound(g.t), "star_degree": d_star}
    if name == "P1":
        return bool(v_ok and star_ok), info
    frac = 1.0 / 16.0 if name == "P4" else 1.0 / 8.0
    hw = check_hub(g, hub, star, r, frac * plan.t)
    info.update(hub_total_degree=hw.total_degree, hub_min_edges_to_star=hw.min_edges_to_star)
    ok = v_ok and star_ok and hw.verdict
    if name == "P2":
        return bool(ok), info
    S = find_susceptible_set(g, hub, r) if hub.size else np.empty(0, dtype=np.int64)
    info["susceptible_size"] = int(S.size)
    ok = ok and S.size > 0
    if name == "P4":
        gamma_star = int(g.adjacency.distinct_neighbors()[star - 1])
        info["star_distinct_neighbors"] = gamma_star
        ok = ok and gamma_star > 0
    return bool(ok), info


def certify(snapshots: dict[int, Multigraph], plan: ThresholdPlan, a_of=None) -> Certificate:
    """Evaluate P1-P4 on the four snapshots at t, (r+1)t, (r+1)^2 t, 2(r+1)^2 t.

    The star is the maximum-degree vertex at time t and H the vertices of
    degree >= g(t) at time t; both are kept fixed for the later properties.
    Verdicts use h(a_t) at the base time. When ``a_of`` (time -> rate) is
    given, each property's details also carry h(a_s) at its own time s and
    the star threshold that value would give.
    """
    times = proof_times(plan.t, plan.r)
    missing = [s for s in times.values() if s not in snapshots]
    if missing:
        raise ValueError(f"missing snapshots at times {missing}")
    base = snapshots[times["P1"]]
    final = snapshots[times["P4"]]
    star = find_star(base, plan)
    hub_ids = hub_members(base, plan.hub_degree_threshold)
    verdicts, verdicts_final, details = {}, {}, {}
    for name, s in times.items():
        verdicts[name], details[name] = _evaluate(name, snapshots[s], plan, star.vertex, hub_ids)
        verdicts_final[name], _ = _evaluate(name, final, plan, star.vertex, hub_ids)
        if a_of is not None and a_of(s) > 1.0:
            h_s = growth_h(plan.function, a_of(s), plan.r, plan.C1, plan.C2)
            details[name]["h_a_s"] = h_s
            details[name]["star_degree_threshold_shifted"] = plan.C1 * plan.t / (plan.C2 * h_s) if h_s > 0 else math.inf
    hub = check_hub(final, hub_ids, star.vertex, plan.r, plan.t / 16.0)
    S = find_susceptible_set(final, hub_ids, plan.r) if hub_ids.size else np.empty(0, dtype=np.int64)
    ft = plan.f_t * plan.t
    gamma_final = int(final.adjacency.distinct_neighbors()[star.vertex - 1])
    ratios = {
        # undefined when f(t) = 0
        "susceptible_over_ft_t": S.size / ft if ft > 0 else math.nan,
        "star_neighbors_h_over_ft_t": gamma_final * plan.h_at / ft if ft > 0 else math.nan,
        "susceptible_fraction": S.size / final.n_vertices,
        "star_degree_over_threshold": (
            int(final.degree[star.vertex - 1]) / plan.star_degree_threshold
            if plan.star_degree_threshold > 0
            else math.inf
        ),
    }
    return Certificate(plan, times, star, hub, S, verdicts, verdicts_final, ratios, details)


@dataclass(frozen=True)
class CascadeCheck:
    premise_structural: bool
    premise_verdicts: bool
    star_by_1: bool
    hub_by_2: bool
    susceptible_by_3: bool

    @property
    def cascade(self) -> bool:
        return self.star_by_1 and self.hub_by_2 and self.susceptible_by_3

    @property
    def holds(self) -> bool:
        """The implication premise => cascade."""
        return self.cascade or not (self.premise_structural or self.premise_verdicts)


def check_cascade(cert: Certificate, final: Multigraph, round_infected: np.ndarray) -> CascadeCheck:
    """Does r infected star-neighbours at round 0 give star, H, S by rounds 1, 2, 3?

    The structural premise drops the numeric thresholds and keeps what the
    cascade needs: every hub member has r edges to the star. The verdict
    premise additionally requires all of P1-P4.
    """
    r = cert.plan.r
    star = cert.star.vertex
    nb, _ = final.adjacency.row(star)
    infected_nbrs = int(np.count_nonzero(round_infected[nb - 1] == 0))
    seeded = infected_nbrs >= r
    structural = seeded and cert.hub.meets_star_edges
    hub = cert.hub.vertices
    return CascadeCheck(
        premise_structural=bool(structural),
        premise_verdicts=bool(structural and cert.all_hold),
        star_by_1=bool(round_infected[star - 1] <= 1),
        hub_by_2=bool(np.all(round_infected[hub - 1] <= 2)),
        susceptible_by_3=bool(np.all(round_infected[cert.susceptible - 1] <= 3)),
    )
