"""Edge-step function families, regularity checks and the normalizers phi, xi."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "EdgeStepFunction",
    "NormalizerTable",
    "ConditionReport",
    "Verdict",
    "Constants",
    "SlowVariationReport",
    "evaluate",
    "build_normalizers",
    "phi_direct",
    "check_conditions",
    "slow_variation_ratio",
    "estimate_c1_c2",
    "expected_vertex_count",
    "karamata_ratio",
    "FAMILIES",
]

FAMILIES = ("constant", "power", "logpower", "tabulated")

# which f-index the step G_s -> G_{s+1} draws its Bernoulli from
NEXT = "next"  # Ber(f(s+1)), consistent with phi and the degree recurrence
CURRENT = "current"  # Ber(f(s))
CONVENTIONS = (NEXT, CURRENT)

_CLAMP_SLACK = 1e-12


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class EdgeStepFunction:
    """A probability schedule ``f: [1, inf) -> [0, 1]``.

    Use the classmethod constructors; they validate parameters. ``gamma`` is
    the declared index of regular variation (``f`` is r.v. with index
    ``-gamma``).
    """

    family: str
    params: tuple[float, ...]
    gamma: float
    monotone: bool = True
    table: tuple[float, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")

    @classmethod
    def constant(cls, p: float) -> "EdgeStepFunction":
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        return cls("constant", (float(p),), 0.0)

    @classmethod
    def power(cls, gamma: float) -> "EdgeStepFunction":
        """``f(t) = t**-gamma``."""
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
        return cls("power", (float(gamma),), float(gamma))

    @classmethod
    def log_power(cls, beta: float) -> "EdgeStepFunction":
        """``f(t) = log(e + t)**-beta``; slowly varying."""
        if not beta > 0.0:
            raise ValueError(f"beta must be positive, got {beta}")
        return cls("logpower", (float(beta),), 0.0)

    @classmethod
    def tabulated(cls, values: Sequence[float], gamma: float = 0.0) -> "EdgeStepFunction":
        """Values ``f(1), ..., f(n)``; must be non-increasing and in [0, 1]."""
        arr = np.asarray(values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("tabulated values must be a non-empty 1-d sequence")
        if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
            raise ValueError("tabulated values must lie in [0, 1]")
        bad = np.flatnonzero(np.diff(arr) > 0.0)
        if bad.size:
            raise ValueError(f"tabulated values increase at t={bad[0] + 1}")
        return cls("tabulated", (), float(gamma), True, tuple(arr.tolist()))

    @property
    def limit(self) -> float:
        """``lim_{t->inf} f(t)``; for tables, the last tabulated value."""
        if self.family == "constant":
            return self.params[0]
        if self.family == "power":
            return 1.0 if self.params[0] == 0.0 else 0.0
        if self.family == "logpower":
            return 0.0
        return self.table[-1]

    @property
    def horizon(self) -> float:
        """Largest admissible argument."""
        return float(len(self.table)) if self.family == "tabulated" else math.inf

    def values(self, t) -> np.ndarray:
        """Vectorized evaluation at real arguments ``t >= 1``."""
        t = np.asarray(t, dtype=float)
        if t.size and (np.min(t) < 1.0 or not np.all(np.isfinite(t))):
            raise ValueError("edge-step functions are defined for t >= 1 only")
        if self.family == "constant":
            out = np.full(t.shape, self.params[0])
        elif self.family == "power":
            out = t ** -self.params[0]
        elif self.family == "logpower":
            out = np.log(math.e + t) ** -self.params[0]
        else:
            if t.size and np.max(t) > len(self.table):
                raise ValueError(f"tabulated function defined up to t={len(self.table)}")
            out = np.asarray(self.table)[np.floor(t).astype(np.int64) - 1]
        lo, hi = (float(np.min(out)), float(np.max(out))) if out.size else (0.0, 1.0)
        if lo < -_CLAMP_SLACK or hi > 1.0 + _CLAMP_SLACK:
            raise ValueError(f"f left [0, 1]: range [{lo}, {hi}]")
        return np.clip(out, 0.0, 1.0)

    def __call__(self, t: float) -> float:
        if t < 1:
            raise ValueError(f"t must be >= 1, got {t}")
        return float(self.values(np.array([t]))[0])

    def to_dict(self) -> dict:
        d = {"family": self.family, "params": list(self.params), "gamma": self.gamma}
        if self.table is not None:
            d["n_values"] = len(self.table)
        return d


def evaluate(f: EdgeStepFunction, t: float) -> float:
    return f(t)


@dataclass(frozen=True)
class NormalizerTable:
    """``phi[t-1]`` and ``xi[t-1]`` for ``t = 1..horizon``."""

    function: EdgeStepFunction
    phi: np.ndarray
    xi: np.ndarray
    horizon: int

    def phi_at(self, t) -> np.ndarray | float:
        return self._lookup(self.phi, t)

    def xi_at(self, t) -> np.ndarray | float:
        return self._lookup(self.xi, t)

    def _lookup(self, arr, t):
        idx = np.asarray(t, dtype=np.int64)
        if idx.size and (idx.min() < 1 or idx.max() > self.horizon):
            raise IndexError(f"time outside table horizon [1, {self.horizon}]")
        out = arr[idx - 1]
        return float(out) if out.ndim == 0 else out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "phi"])
            for t, p in enumerate(self.phi, start=1):
                w.writerow([t, repr(float(p))])


def _xi_factors(f: EdgeStepFunction, T: int) -> np.ndarray:
    # 1 - f(r+1) / (2(r+1)) for r = 1..T-1
    nxt = np.arange(2, T + 1, dtype=float)
    return 1.0 - f.values(nxt) / (2.0 * nxt)


def build_normalizers(f: EdgeStepFunction, T: int) -> NormalizerTable:
    """Tabulate ``phi(t) = prod_{s<t} (1 + 1/s - f(s+1)/(2s))`` and ``xi = phi/t``.

    The running product is taken over the xi factors, which lie in [3/4, 1],
    and phi is recovered as ``t * xi``. For ``f == 0`` this gives ``phi(t) = t``
    exactly.
    """
    T = int(T)
    if T < 1:
        raise ValueError("T must be >= 1")
    xi = np.empty(T)
    xi[0] = 1.0
    if T > 1:
        np.cumprod(_xi_factors(f, T), out=xi[1:])
    phi = xi * np.arange(1, T + 1, dtype=float)
    bad = np.flatnonzero(~np.isfinite(phi) | (phi <= 0.0))
    if bad.size:
        raise OverflowError(f"normalizer not representable at t={bad[0] + 1}")
    phi.setflags(write=False)
    xi.setflags(write=False)
    return NormalizerTable(f, phi, xi, T)


def phi_direct(f: EdgeStepFunction, T: int) -> np.ndarray:
    """phi by the literal definition, one factor ``1 + 1/s - f(s+1)/(2s)`` at a time."""
    s = np.arange(1, T, dtype=float)
    factors = 1.0 + 1.0 / s - f.values(s + 1.0) / (2.0 * s)
    return np.concatenate([[1.0], np.cumprod(factors)])


class Constants(NamedTuple):
    C1: float
    C2: float
    horizon: int


def estimate_c1_c2(table: NormalizerTable) -> Constants:
    """``C1 t <= phi(t) <= C2 t`` on the table; xi is non-increasing so C2 = xi(1)."""
    return Constants(float(np.min(table.xi)), float(np.max(table.xi)), table.horizon)


@dataclass(frozen=True)
class SlowVariationReport:
    a: float
    ratios: list[tuple[int, float]]
    # |ratio - 1| non-increasing along the s grid
    trending_to_one: bool


def slow_variation_ratio(
    f: EdgeStepFunction,
    a: float,
    s_grid: Sequence[int],
    table: NormalizerTable | None = None,
) -> SlowVariationReport:
    if not a > 0:
        raise ValueError("a must be positive")
    targets = [(int(s), int(math.ceil(a * s))) for s in s_grid]
    need = max(max(s, m) for s, m in targets)
    if table is None:
        table = build_normalizers(f, need)
    elif need > table.horizon:
        raise IndexError(f"ratio needs xi up to t={need}, table horizon is {table.horizon}")
    ratios = [(s, table.xi_at(m) / table.xi_at(s)) for s, m in targets]
    dev = [abs(r - 1.0) for _, r in ratios]
    trending = all(d1 <= d0 for d0, d1 in zip(dev, dev[1:]))
    return SlowVariationReport(float(a), ratios, trending)


@dataclass(frozen=True)
class ConditionReport:
    function: dict
    tail_horizon: int
    holds_S: Verdict
    s_partial_sum: float
    # bound on sum_{s > horizon} f(s)/s; inf when (S) fails, None if unknown
    s_tail_estimate: float | None
    holds_Vinf: Verdict
    v_partial_sum: float
    monotone_on_grid: bool
    holds_D0: bool
    gamma: float
    ratio_residuals: dict[float, list[float]]
    f_log_t: list[tuple[int, float]]

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "tail_horizon": self.tail_horizon,
            "holds_S": self.holds_S.value,
            "s_partial_sum": self.s_partial_sum,
            "s_tail_estimate": _json_float(self.s_tail_estimate),
            "holds_Vinf": self.holds_Vinf.value,
            "v_partial_sum": self.v_partial_sum,
            "monotone_on_grid": self.monotone_on_grid,
            "holds_D0": self.holds_D0,
            "gamma": self.gamma,
            "ratio_residuals": {str(a): [_json_float(x) for x in v] for a, v in self.ratio_residuals.items()},
            "f_log_t": [[t, v] for t, v in self.f_log_t],
        }


def _json_float(x):
    if x is None or math.isnan(x):
        return None
    if math.isinf(x):
        return "inf"
    return x


def _tail_S(f: EdgeStepFunction, H: int) -> tuple[Verdict, float | None]:
    """Verdict for sum f(s)/s < inf and a bound on the tail past H."""
    if f.family == "constant":
        return (Verdict.HOLDS, 0.0) if f.params[0] == 0.0 else (Verdict.FAILS, math.inf)
    if f.family == "power":
        g = f.params[0]
        if g == 0.0:
            return Verdict.FAILS, math.inf
        # sum_{s>H} s^{-1-g} <= int_H^inf t^{-1-g} dt
        return Verdict.HOLDS, H ** (-g) / g
    if f.family == "logpower":
        beta = f.params[0]
        if beta <= 1.0:
            return Verdict.FAILS, math.inf
        # 1/(t log^b(e+t)) <= 1/(t log^b t), whose tail integral is closed form
        return Verdict.HOLDS, math.log(H) ** (1.0 - beta) / (beta - 1.0)
    return Verdict.INCONCLUSIVE, None


def _verdict_Vinf(f: EdgeStepFunction) -> Verdict:
    if f.family == "constant":
        return Verdict.HOLDS if f.params[0] > 0.0 else Verdict.FAILS
    if f.family in ("power", "logpower"):
        return Verdict.HOLDS
    return Verdict.INCONCLUSIVE


def check_conditions(
    f: EdgeStepFunction,
    grid: Sequence[int],
    tail_horizon: int,
    ratio_bases: Sequence[float] = (2.0, 10.0),
) -> ConditionReport:
    """Check (S), (V_inf), (D_0) and the declared regular-variation index.

    Tails are classified from the family's closed form; tabulated functions
    get ``inconclusive`` rather than an extrapolated guess.
    """
    grid = [int(t) for t in grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
        raise ValueError("grid must be a non-empty increasing list of times >= 1")
    H = int(min(tail_horizon, f.horizon))
    s = np.arange(1, H + 1, dtype=float)
    fs = f.values(s)
    s_sum = float(np.sum(fs / s))
    v_sum = float(np.sum(fs))
    holds_S, tail = _tail_S(f, H)

    g = np.asarray(grid, dtype=float)
    fg = f.values(g)
    nxt = g + 1.0
    in_dom = nxt <= f.horizon
    step_ok = np.all(f.values(nxt[in_dom]) <= fg[in_dom])
    monotone = bool(step_ok and np.all(np.diff(fg) <= 0.0))
    holds_D0 = monotone and f.limit == 0.0

    residuals: dict[float, list[float]] = {}
    for a in ratio_bases:
        at = a * g
        ok = at <= f.horizon
        res = np.full(g.shape, np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            res[ok] = f.values(at[ok]) / fg[ok] - a ** (-f.gamma)
        residuals[float(a)] = res.tolist()

    f_log_t = [(t, float(v * math.log(t))) for t, v in zip(grid, fg)]
    return ConditionReport(
        function=f.to_dict(),
        tail_horizon=H,
        holds_S=holds_S,
        s_partial_sum=s_sum,
        s_tail_estimate=tail,
        holds_Vinf=_verdict_Vinf(f),
        v_partial_sum=v_sum,
        monotone_on_grid=monotone,
        holds_D0=holds_D0,
        gamma=f.gamma,
        ratio_residuals=residuals,
        f_log_t=f_log_t,
    )


def expected_vertex_count(f: EdgeStepFunction, T: int, convention: str = NEXT) -> float:
    """Exact ``E V_T`` under the Bernoulli vertex-step schedule."""
    if T <= 1:
        return 1.0
    s = np.arange(2, T + 1, dtype=float) if convention == NEXT else np.arange(1, T, dtype=float)
    return 1.0 + float(np.sum(f.values(s)))


def karamata_ratio(
    ell: Callable[[float], float], alpha: float, x: float, x0: float = 1.0
) -> float:
    """Ratio of a regularly varying integral to its Karamata asymptotic.

    For ``alpha > -1`` compares ``int_{x0}^x t^alpha ell(t) dt`` with
    ``x^{1+alpha} ell(x) / (1+alpha)``; for ``alpha < -1`` the tail
    ``int_x^inf`` against ``-x^{1+alpha} ell(x) / (1+alpha)``. Tends to 1 as
    ``x`` grows when ``ell`` is slowly varying.
    """
    if alpha == -1.0:
        raise ValueError("alpha = -1 is the boundary case, no Karamata asymptotic")

    def integrand(u):
        # the power factor underflows long before ell's argument overflows
        return math.exp((alpha + 1.0) * u) * ell(math.exp(min(u, 700.0)))

    # substitute t = e^u so quad sees a smooth integrand on a short interval
    if alpha > -1.0:
        val, _ = integrate.quad(integrand, math.log(x0), math.log(x), limit=200)
        ref = x ** (1.0 + alpha) * ell(x) / (1.0 + alpha)
    else:
        val, _ = integrate.quad(integrand, math.log(x), np.inf, limit=200)
        ref = -(x ** (1.0 + alpha)) * ell(x) / (1.0 + alpha)
    return val / ref
