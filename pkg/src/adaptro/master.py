"""Scenario-restricted lower-bound problem.

For a finite scenario set V the master problem is::

    min_{x in X, theta, y^s >= 0}  a.x + theta
        s.t.  b.y^s <= theta,  A x + B y^s + C u^s >= c   for every u^s in V

Each new scenario adds ``m`` columns and ``r + 1`` rows to a live backend
session instead of rebuilding the model.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .backend import INF, BackendError, ModelBuilder, Session, Sense, Status
from .config import DEFAULT_TOL, Tolerances
from .model import ScenarioSet, TwoStageInstance, second_stage_value


class MasterInfeasible(Exception):
    """No x in X admits recourse for every scenario collected so far."""

    def __init__(self) -> None:
        super().__init__("problem infeasible (certified by scenario subset V)")


class SolverLimit(Exception):
    pass


@dataclass
class MasterSolution:
    x: np.ndarray
    theta: float
    LB: float
    ys: list[np.ndarray]


class MasterProblem:
    """Live master model that grows by one scenario block per cut."""

    def __init__(self, inst: TwoStageInstance, tol: Tolerances = DEFAULT_TOL) -> None:
        self.inst = inst
        self.tol = tol
        mb = ModelBuilder()
        self.x_idx = inst.X.add_to(mb)
        self.theta_idx = mb.add_vars(1, lb=-INF, name="theta")[0]
        mb.set_objective([(inst.a, self.x_idx), (np.ones(1), [self.theta_idx])], Sense.MIN)
        self.session = Session(mb.build(), tol)
        self.y_blocks: list[np.ndarray] = []
        self.scenarios: list[np.ndarray] = []

    def add_scenario(self, u) -> None:
        inst = self.inst
        u = np.asarray(u, float)
        y = self.session.add_vars(inst.m)
        # A x + B y >= c - C u
        M = np.hstack([inst.A, inst.B])
        self.session.add_rows(M, np.concatenate([self.x_idx, y]), inst.c - inst.C @ u, INF)
        # b.y - theta <= 0
        self.session.add_rows(np.concatenate([inst.b, [-1.0]])[None, :],
                              np.concatenate([y, [self.theta_idx]]), -INF, 0.0)
        self.y_blocks.append(y)
        self.scenarios.append(u.copy())

    def sync(self, V: ScenarioSet) -> None:
        """Add every scenario of ``V`` not yet present (V only ever grows)."""
        for s in list(V)[len(self.scenarios):]:
            self.add_scenario(s.u)

    def solve(self, time_limit: float | None = None) -> MasterSolution:
        if not self.scenarios:
            raise ValueError("master needs at least one scenario")
        out = self.session.solve(time_limit)
        if out.status is Status.INFEASIBLE:
            raise MasterInfeasible()
        if out.status is Status.LIMIT:
            raise SolverLimit("master solve hit a limit")
        if out.status is not Status.OPTIMAL:
            raise BackendError(f"master ended with status {out.status.value}")
        z = out.x
        x = z[self.x_idx].copy()
        integer = self.inst.X.integer
        x[integer] = np.round(x[integer])
        theta = float(z[self.theta_idx])
        return MasterSolution(x=x, theta=theta, LB=float(out.objective), ys=[z[b].copy() for b in self.y_blocks])


def solve_master(inst: TwoStageInstance, V, tol: Tolerances = DEFAULT_TOL) -> MasterSolution:
    """One-shot master solve over the scenario points in ``V``."""
    mp = MasterProblem(inst, tol)
    for u in _points(V):
        mp.add_scenario(u)
    return mp.solve()


def _points(V) -> list[np.ndarray]:
    if isinstance(V, ScenarioSet):
        return V.points
    return [np.asarray(u, float).reshape(-1) for u in V]


def eval_underZ(inst: TwoStageInstance, x, V, jobs: int = 1) -> float:
    """Master value at fixed x: ``a.x + max_s min_y b.y`` over the scenarios of V."""
    pts = _points(V)
    if not pts:
        raise ValueError("empty scenario set")
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            vals = list(ex.map(lambda u: second_stage_value(inst, x, u)[0], pts))
    else:
        vals = [second_stage_value(inst, x, u)[0] for u in pts]
    return float(max(vals))
