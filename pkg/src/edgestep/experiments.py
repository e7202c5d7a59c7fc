"""Monte Carlo harness: replica-parallel estimates with standard errors.

Every replica draws from its own stream, derived from ``(master seed, key)``
through ``numpy.random.SeedSequence`` spawn keys, and results are folded in
replica order, so an experiment is bit-reproducible whatever the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .certificates import ThresholdPlan, certify, check_cascade, proof_times
from .functions import (
    NEXT,
    EdgeStepFunction,
    build_normalizers,
    check_conditions,
    estimate_c1_c2,
    slow_variation_ratio,
)
from .graph import FORMAT_VERSION, Multigraph, generate, one_step_increment_distribution
from .percolation import run
from .rates import RateFamily

KINDS = ("martingale", "maxdeg", "outbreak", "recurrence", "conditions")


def replica_seed(master: int, *key: int) -> int:
    """64-bit seed for the stream at ``key`` under ``master``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class ExperimentConfig:
    kind: str
    function: EdgeStepFunction
    replicas: int = 1
    seed: int = 0
    T: int | None = None
    t_grid: tuple[int, ...] = ()
    N: tuple[int, ...] = (1,)
    r: int = 2
    a_family: RateFamily = field(default_factory=lambda: RateFamily("log"))
    c_list: tuple[float, ...] = ()
    percolation_seeds: int = 1
    vertices: tuple[int, ...] = (1, 2, 3)
    increment_replicas: int = 10**6
    tail_horizon: int = 10**6
    convention: str = NEXT
    threads: int = 1
    echo: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if any(t < 2 for t in self.t_grid):
            raise ValueError("grid times must be >= 2")

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "function": self.function.to_dict(),
            "replicas": self.replicas,
            "seed": self.seed,
            "T": self.T,
            "t_grid": list(self.t_grid),
            "N": list(self.N),
            "r": self.r,
            "a_family": str(self.a_family),
            "c_list": list(self.c_list),
            "percolation_seeds": self.percolation_seeds,
            "vertices": list(self.vertices),
            "increment_replicas": self.increment_replicas,
            "tail_horizon": self.tail_horizon,
            "convention": self.convention,
            **({"source": self.echo} if self.echo else {}),
        }


@dataclass
class ExperimentResult:
    kind: str
    cells: list[dict]
    summary: dict
    config: dict
    replicas: int
    wall_time: float = 0.0

    def to_csv(self, path=None) -> str:
        cols: list[str] = []
        for row in self.cells:
            cols.extend(k for k in row if k not in cols)
        buf = io.StringIO()
        buf.write(f"# format_version={FORMAT_VERSION}\n")
        buf.write("# config=" + json.dumps(self.config, sort_keys=True) + "\n")
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for row in self.cells:
            w.writerow({k: _csv_value(v) for k, v in row.items()})
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "format_version": FORMAT_VERSION,
                "kind": self.kind,
                "replicas": self.replicas,
                "wall_time": self.wall_time,
                "config": self.config,
                "summary": self.summary,
                "cells": self.cells,
            }
        )

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def mean_se(x) -> tuple[float, float]:
    """Sample mean and sample-stddev / sqrt(M); the error is nan for M = 1."""
    x = np.asarray(x, dtype=float)
    m = float(np.mean(x))
    if x.size < 2:
        return m, math.nan
    return m, float(np.std(x, ddof=1) / math.sqrt(x.size))


def z_score(mean: float, se: float, target: float) -> float:
    if se == 0.0:
        return 0.0 if mean == target else math.copysign(math.inf, mean - target)
    return (mean - target) / se


def parallel_map(fn: Callable, items: Sequence, threads: int) -> list:
    """Ordered map, in-process for one worker."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


def default_threads() -> int:
    return os.cpu_count() or 1


# -- martingale ----------------------------------------------------------------


def martingale_path(g: Multigraph, N: int, phi: np.ndarray) -> tuple[np.ndarray, float]:
    """``W_{N,s}`` for ``s = N..t`` and the largest ``|dW_s| phi(s+1) / 3``.

    ``phi[s-1] = phi(s)``. ``D_{N,s}`` is the degree at time s held by the
    vertices born by time N.
    """
    T = g.t
    VN = g.vertex_count_at(N)
    contrib = (g.edges <= VN).sum(axis=1)
    D = np.cumsum(contrib)
    W = D[N - 1 :] / phi[N - 1 : T]
    if W.size < 2:
        return W, 0.0
    dW = np.abs(np.diff(W))
    return W, float(np.max(dW * phi[N:T] / 3.0))


def _martingale_replica(args):
    cfg, phi, i = args
    N = cfg.N[0]
    T = max(cfg.t_grid)
    tr = generate(cfg.function, T, replica_seed(cfg.seed, i), convention=cfg.convention)
    W, inc = martingale_path(tr.final, N, phi)
    return np.array([W[s - N] for s in cfg.t_grid]), inc


def martingale_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    N = cfg.N[0]
    if not cfg.t_grid or N > min(cfg.t_grid):
        raise ValueError("martingale needs a time grid with N <= min(grid)")
    T = max(cfg.t_grid)
    phi = np.asarray(build_normalizers(cfg.function, T).phi)
    out = parallel_map(_martingale_replica, [(cfg, phi, i) for i in range(cfg.replicas)], cfg.threads)
    Ws = np.stack([w for w, _ in out])
    incs = np.array([x for _, x in out])
    target = 2.0 * N / phi[N - 1]
    cells = []
    for k, s in enumerate(cfg.t_grid):
        m, se = mean_se(Ws[:, k])
        zero = bool(np.all(Ws[:, k] == Ws[0, k]))
        cells.append(
            {
                "s": s,
                "N": N,
                "mean_W": m,
                "stderr": 0.0 if zero else se,
                "target": target,
                "deviation_se": z_score(m, 0.0 if zero else se, target),
                "zero_variance": zero,
                "replicas": cfg.replicas,
            }
        )
    summary = {
        "target": target,
        "max_increment_ratio": float(incs.max()),
        "increment_bound_ok": bool(np.all(incs <= 1.0)),
    }
    return ExperimentResult("martingale", cells, summary, cfg.describe(), cfg.replicas, time.perf_counter() - t0)


# -- maximum degree --------------------------------------------------------------


def _maxdeg_replica(args):
    cfg, thresholds, i = args
    tr = generate(cfg.function, cfg.T, replica_seed(cfg.seed, i), convention=cfg.convention)
    d = tr.final.degree
    V = d.size
    return np.array([float(np.max(d[: min(N, V)]) >= thr) for N, thr in zip(cfg.N, thresholds)])


def max_degree_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    T = cfg.T
    if T is None or max(cfg.N) > T:
        raise ValueError("maxdeg needs T >= max(N)")
    table = build_normalizers(cfg.function, T)
    thresholds = [table.phi_at(T) / table.phi_at(N) for N in cfg.N]
    hits = np.stack(
        parallel_map(_maxdeg_replica, [(cfg, thresholds, i) for i in range(cfg.replicas)], cfg.threads)
    )
    cells = []
    for k, N in enumerate(cfg.N):
        m, se = mean_se(hits[:, k])
        cells.append(
            {
                "T": T,
                "N": N,
                "threshold": thresholds[k],
                "frequency": m,
                "stderr": se,
                "zero_variance": bool(np.all(hits[:, k] == hits[0, k])),
                "replicas": cfg.replicas,
            }
        )
    freqs = [c["frequency"] for c in cells]
    ses = [0.0 if math.isnan(c["stderr"]) else c["stderr"] for c in cells]
    monotone = all(b >= a - 2.0 * max(sa, sb) for a, b, sa, sb in zip(freqs, freqs[1:], ses, ses[1:]))
    summary = {"monotone_in_N_2se": monotone}
    return ExperimentResult("maxdeg", cells, summary, cfg.describe(), cfg.replicas, time.perf_counter() - t0)


# -- outbreak --------------------------------------------------------------------


def _outbreak_replica(args):
    cfg, t, ti, C1, C2, i = args
    f, r = cfg.function, cfg.r
    times = proof_times(t, r)
    T_final = times["P4"]
    tr = generate(f, T_final, replica_seed(cfg.seed, ti, i), times.values(), convention=cfg.convention)
    final = tr.snapshots[T_final]
    # a_t = |V| has no value at the base time; the thresholds then use a_t = t
    a_base = float(t) if cfg.a_family.kind == "full" else cfg.a_family(t)
    # thresholds need gamma < 1 and a_t > 1; otherwise the run goes uncertified
    cert = None
    if f.gamma < 1.0 and a_base > 1.0:
        a_of = None if cfg.a_family.kind == "full" else cfg.a_family
        cert = certify(tr.snapshots, ThresholdPlan.build(f, t, r, a_base, C1, C2), a_of)
    V = final.n_vertices
    a = cfg.a_family.rate_for(T_final, V)
    c_star = cert.susceptible.size / (2.0 * V) if cert is not None and cert.susceptible.size else None
    cs = list(cfg.c_list) + ([c_star] if c_star is not None else [])
    K = cfg.percolation_seeds
    hit_star = np.zeros(K)
    hit_c = np.zeros((K, len(cfg.c_list)))
    frac = np.zeros(K)
    premise_s = premise_v = violations = 0
    for k in range(K):
        state, taus = run(final, a, r, cs, replica_seed(cfg.seed, ti, i, k + 1))
        frac[k] = state.final_size / V
        for j, tr_c in enumerate(taus[: len(cfg.c_list)]):
            hit_c[k, j] = tr_c.tau_c is not None and tr_c.tau_c <= 3
        if c_star is not None:
            tau_star = taus[-1].tau_c
            hit_star[k] = tau_star is not None and tau_star <= 3
        if cert is not None:
            chk = check_cascade(cert, final, state.round_infected)
            premise_s += chk.premise_structural
            premise_v += chk.premise_verdicts
            violations += not chk.holds
    return {
        "hit_star": hit_star,
        "hit_c": hit_c,
        "final_fraction": frac,
        "c_star": c_star,
        "V": V,
        "a": a,
        "certified": cert is not None,
        "verdicts": cert.verdicts if cert is not None else None,
        "verdicts_final": cert.verdicts_final if cert is not None else None,
        "ratios": cert.ratios if cert is not None else None,
        "hub_size": int(cert.hub.vertices.size) if cert is not None else 0,
        "hub_star_edges_ok": cert.hub.meets_star_edges if cert is not None else False,
        "premise_structural": premise_s,
        "premise_verdicts": premise_v,
        "cascade_violations": violations,
    }


def _two_level(per_replica: np.ndarray) -> dict:
    """Mean over a (replica, seed) array with graph-level error and variance split."""
    means = per_replica.mean(axis=1)
    m, se = mean_se(means)
    between = float(np.var(means, ddof=1)) if means.size > 1 else math.nan
    within = float(np.mean(np.var(per_replica, axis=1, ddof=1))) if per_replica.shape[1] > 1 else math.nan
    return {"mean": m, "stderr": se, "var_between_graphs": between, "var_within_graph": within}


def outbreak_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    if cfg.r < 2:
        raise ValueError("outbreak needs r >= 2")
    cells, per_t = [], {}
    for ti, t in enumerate(cfg.t_grid):
        T_final = proof_times(t, cfg.r)["P4"]
        C1, C2, _ = estimate_c1_c2(build_normalizers(cfg.function, T_final))
        items = [(cfg, t, ti, C1, C2, i) for i in range(cfg.replicas)]
        reps = parallel_map(_outbreak_replica, items, cfg.threads)
        frac = _two_level(np.stack([x["final_fraction"] for x in reps]))
        star = _two_level(np.stack([x["hit_star"] for x in reps]))
        base = {"t": t, "T_final": T_final, "replicas": cfg.replicas, "percolation_seeds": cfg.percolation_seeds}
        cells.append(
            {
                **base,
                "c": "achieved",
                "freq_tau_le_3": star["mean"],
                "stderr": star["stderr"],
                "var_between_graphs": star["var_between_graphs"],
                "var_within_graph": star["var_within_graph"],
                "mean_final_fraction": frac["mean"],
                "final_fraction_stderr": frac["stderr"],
            }
        )
        hit_c = np.stack([x["hit_c"] for x in reps]) if cfg.c_list else None
        for j, c in enumerate(cfg.c_list):
            st = _two_level(hit_c[:, :, j])
            cells.append(
                {
                    **base,
                    "c": c,
                    "freq_tau_le_3": st["mean"],
                    "stderr": st["stderr"],
                    "var_between_graphs": st["var_between_graphs"],
                    "var_within_graph": st["var_within_graph"],
                    "mean_final_fraction": frac["mean"],
                    "final_fraction_stderr": frac["stderr"],
                }
            )
        names = ("P1", "P2", "P3", "P4")
        cstars = [x["c_star"] for x in reps if x["c_star"] is not None]
        certified = [x for x in reps if x["certified"]]

        def freq(key, p):
            return float(np.mean([x[key][p] for x in certified])) if certified else None

        per_t[str(t)] = {
            "C1": C1,
            "C2": C2,
            "mean_V": float(np.mean([x["V"] for x in reps])),
            "a": reps[0]["a"],
            "certified_replicas": len(certified),
            "mean_c_achieved": float(np.mean(cstars)) if cstars else None,
            "replicas_without_S": sum(x["c_star"] is None for x in reps),
            "verdict_frequency": {p: freq("verdicts", p) for p in names},
            "verdict_frequency_final": {p: freq("verdicts_final", p) for p in names},
            "hub_star_edges_frequency": float(np.mean([x["hub_star_edges_ok"] for x in certified])) if certified else None,
            "mean_hub_size": float(np.mean([x["hub_size"] for x in certified])) if certified else None,
            "mean_ratios": (
                {k: float(np.mean([x["ratios"][k] for x in certified])) for k in certified[0]["ratios"]}
                if certified
                else {}
            ),
            "premise_structural_runs": int(sum(x["premise_structural"] for x in reps)),
            "premise_verdict_runs": int(sum(x["premise_verdicts"] for x in reps)),
            "cascade_violations": int(sum(x["cascade_violations"] for x in reps)),
            "mean_final_fraction": frac,
        }
    achieved = [c for c in cells if c["c"] == "achieved"]
    trend = all(
        b["freq_tau_le_3"] >= a["freq_tau_le_3"] - 2.0 * _nz(max(a["stderr"], b["stderr"]))
        for a, b in zip(achieved, achieved[1:])
    )
    summary = {
        "per_t": per_t,
        "trend_non_decreasing_2se": trend,
        "cascade_violations": sum(v["cascade_violations"] for v in per_t.values()),
    }
    return ExperimentResult("outbreak", cells, summary, cfg.describe(), cfg.replicas, time.perf_counter() - t0)


def _nz(x: float) -> float:
    return 0.0 if math.isnan(x) else x


# -- degree recurrence ---------------------------------------------------------------


def degree_recurrence_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Resample single transitions from frozen states and compare with the closed form."""
    t0 = time.perf_counter()
    T = max(cfg.t_grid)
    tr = generate(cfg.function, T, replica_seed(cfg.seed, 0), cfg.t_grid, convention=cfg.convention)
    cells = []
    for s in cfg.t_grid:
        g = tr.snapshots[s]
        for v in cfg.vertices:
            if v > g.n_vertices:
                continue
            est = one_step_increment_distribution(
                g, v, cfg.function, cfg.increment_replicas, replica_seed(cfg.seed, s, v), convention=cfg.convention
            )
            z = est.z_score
            cells.append(
                {
                    "s": s,
                    "vertex": v,
                    "degree": int(g.degree[v - 1]),
                    "expected": est.expected,
                    "mean": est.mean,
                    "stderr": est.stderr,
                    "deviation_se": z,
                    "within_4se": abs(z) <= 4.0,
                    "zero_variance": est.stderr == 0.0,
                }
            )
    within = [c["within_4se"] for c in cells]
    summary = {
        "cells": len(cells),
        "fraction_within_4se": float(np.mean(within)) if within else math.nan,
        "max_abs_deviation_se": max((abs(c["deviation_se"]) for c in cells), default=0.0),
    }
    return ExperimentResult("recurrence", cells, summary, cfg.describe(), cfg.increment_replicas, time.perf_counter() - t0)


# -- conditions ------------------------------------------------------------------


def conditions_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    f = cfg.function
    grid = list(cfg.t_grid) or [10**k for k in range(1, 7)]
    rep = check_conditions(f, grid, cfg.tail_horizon)
    horizon = int(min(2 * max(grid), f.horizon))
    table = build_normalizers(f, horizon)
    cells = []
    for k, t in enumerate(grid):
        row: dict[str, Any] = {"t": t, "f": f(t), "f_log_t": rep.f_log_t[k][1], "xi": table.xi_at(t)}
        if 2 * t <= horizon:
            row["xi_ratio_2"] = slow_variation_ratio(f, 2.0, [t], table).ratios[0][1]
        for a, res in rep.ratio_residuals.items():
            row[f"rv_residual_{a:g}"] = res[k]
        cells.append(row)
    C1, C2, H = estimate_c1_c2(table)
    summary = {**rep.to_dict(), "C1": C1, "C2": C2, "normalizer_horizon": H}
    return ExperimentResult("conditions", cells, summary, cfg.describe(), 1, time.perf_counter() - t0)


RUNNERS = {
    "martingale": martingale_experiment,
    "maxdeg": max_degree_experiment,
    "outbreak": outbreak_experiment,
    "recurrence": degree_recurrence_experiment,
    "conditions": conditions_experiment,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.kind](cfg)


def degree_histogram(g: Multigraph) -> tuple[np.ndarray, np.ndarray]:
    """Degree values and their vertex counts (diagnostic only)."""
    return np.unique(g.degree, return_counts=True)
