"""Infection-rate sequences (a_t)."""

from __future__ import annotations

import math
from dataclasses import dataclass

RATE_KINDS = ("log", "power", "identity", "constant", "full")


@dataclass(frozen=True)
class RateFamily:
    """``a_t`` as a function of the graph time t.

    ``full`` means ``a = |V|`` (everything infected at round 0) and cannot be
    evaluated without a graph; see :meth:`rate_for`.
    """

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in RATE_KINDS:
            raise ValueError(f"unknown rate family {self.kind!r}; expected one of {RATE_KINDS}")

    @classmethod
    def parse(cls, text: str) -> "RateFamily":
        """``log``, ``identity``, ``full``, ``power:<exponent>``, ``constant:<a>``."""
        kind, _, arg = text.strip().partition(":")
        if kind in ("power", "constant"):
            if not arg:
                raise ValueError(f"rate family {kind!r} needs a parameter, e.g. {kind}:2")
            return cls(kind, float(arg))
        if arg:
            raise ValueError(f"rate family {kind!r} takes no parameter")
        return cls(kind)

    def __str__(self) -> str:
        return f"{self.kind}:{self.param:g}" if self.kind in ("power", "constant") else self.kind

    def __call__(self, t: float) -> float:
        if self.kind == "log":
            return math.log(t)
        if self.kind == "power":
            return float(t) ** self.param
        if self.kind == "identity":
            return float(t)
        if self.kind == "constant":
            return self.param
        raise ValueError("rate family 'full' depends on the vertex count, not on t")

    def rate_for(self, t: float, n_vertices: int) -> float:
        return float(n_vertices) if self.kind == "full" else self(t)
