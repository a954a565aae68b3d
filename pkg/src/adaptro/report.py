"""Run reports and the relative optimality gap shared by every driver."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np


class Termination(str, Enum):
    CONVERGED = "Converged"
    TIME_LIMIT = "TimeLimit"
    ITER_LIMIT = "IterLimit"
    INFEASIBLE = "InfeasibleProblem"
    INCONCLUSIVE = "Inconclusive"


def ul_gap(LB: float, UB: float) -> float:
    """``(UB - LB) / max(min(|LB|, |UB|), 1)``; ``inf`` while UB is infinite."""
    if math.isnan(LB) or math.isnan(UB):
        raise ValueError("bounds must not be NaN")
    if UB == math.inf or LB == -math.inf:
        return math.inf
    slack = 1e-9 * max(1.0, abs(LB), abs(UB))
    if LB > UB + slack:
        raise AssertionError(f"lower bound {LB!r} exceeds upper bound {UB!r}")
    return max(UB - LB, 0.0) / max(min(abs(LB), abs(UB)), 1.0)


@dataclass
class IterationRecord:
    k: int
    LB: float
    UB: float
    gap: float
    cut: str | None  # provenance of the scenario added in this iteration
    cut_vertex: bool | None
    time: float
    u: list[float] | None = None


def _num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


@dataclass
class RunReport:
    algorithm: str
    epsilon: float
    iterations: list[IterationRecord] = field(default_factory=list)
    inner_iterations: int = 0
    outer_iterations: int = 0
    termination: Termination | None = None
    x: np.ndarray | None = None
    value: float = math.nan
    LB: float = -math.inf
    UB: float = math.inf
    wall_time: float = 0.0
    am_traces: list = field(default_factory=list)
    cuts: list[dict] = field(default_factory=list)
    verifications: list[dict] = field(default_factory=list)
    message: str = ""

    @property
    def gap(self) -> float:
        try:
            return ul_gap(self.LB, self.UB)
        except (AssertionError, ValueError):
            return math.nan

    @property
    def converged(self) -> bool:
        return self.termination is Termination.CONVERGED

    def record(self, k, LB, UB, cut=None, cut_vertex=None, t=0.0, u=None) -> IterationRecord:
        rec = IterationRecord(k=k, LB=LB, UB=UB, gap=ul_gap(LB, UB), cut=cut, cut_vertex=cut_vertex,
                              time=t, u=None if u is None else [float(v) for v in u])
        self.iterations.append(rec)
        return rec

    def to_dict(self) -> dict:
        its = [{k: _num(v) for k, v in asdict(r).items()} for r in self.iterations]
        return {
            "algorithm": self.algorithm,
            "epsilon": self.epsilon,
            "termination": None if self.termination is None else self.termination.value,
            "x": None if self.x is None else [float(v) for v in self.x],
            "value": _num(float(self.value)),
            "LB": _num(float(self.LB)),
            "UB": _num(float(self.UB)),
            "gap": _num(float(self.gap)),
            "inner_iterations": self.inner_iterations,
            "outer_iterations": self.outer_iterations,
            "wall_time": self.wall_time,
            "iterations": its,
            "cuts": self.cuts,
            "verifications": self.verifications,
            "am_traces": [t.to_dict() for t in self.am_traces],
            "message": self.message,
        }
