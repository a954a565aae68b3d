"""Top-level cut loops: column-and-constraint generation and its feasibility-safe variant.

Both loops alternate a master solve over the scenario set V (lower bound)
with a worst-case oracle at the master's x (upper bound and a new scenario).
``ccg`` trusts a single oracle; ``ddbd`` uses the alternating-maximization
oracle inside the loop and verifies the final x with the dual basis cuts
oracle, adding a feasibility cut and resuming when verification fails.
"""

from __future__ import annotations

import logging
import time

import numpy as np

from .adversary import AdversaryError, solve_alpha_oracle, solve_tildeZ
from .am import f1_oracle
from .backend import INF, ModelBuilder, Sense, Status, solve_lp
from .config import DEFAULT_TOL, Tolerances
from .dbc import DualProblemData, PartitionTree, f2_oracle
from .master import MasterInfeasible, MasterProblem, SolverLimit
from .model import ScenarioSet, TwoStageInstance, UncertaintyPolytope, second_stage_value
from .report import RunReport, Termination, ul_gap

log = logging.getLogger(__name__)

DEFAULT_ITER_LIMIT = 500
DEFAULT_TIME_LIMIT = 1000.0


def default_u0(U: UncertaintyPolytope, seed: int = 0) -> np.ndarray:
    """A vertex of U: the maximizer of a fixed random linear objective."""
    g = np.random.default_rng(seed).standard_normal(U.l)
    mb = ModelBuilder()
    u = mb.add_vars(U.l)
    mb.add_constraints([(U.D, u)], "<=", U.d_rhs)
    mb.set_objective([(g, u)], Sense.MAX)
    out = solve_lp(mb.build())
    if out.status is not Status.OPTIMAL:
        raise ValueError(f"cannot pick a starting scenario: LP status {out.status.value}")
    return np.clip(out.x[u], 0.0, None)


class _Loop:
    """State shared by both drivers: V, the live master, bounds and the report."""

    def __init__(self, inst, algorithm, epsilon, u0, tol, iter_limit, time_limit, bigM):
        self.inst = inst
        self.tol = tol
        self.bigM = bigM
        self.iter_limit = iter_limit
        self.time_limit = time_limit
        self.t0 = time.perf_counter()
        self.rep = RunReport(algorithm=algorithm, epsilon=epsilon)
        self.V = ScenarioSet(inst.U, tol)
        u0 = default_u0(inst.U) if u0 is None else np.asarray(u0, float).reshape(-1)
        if not inst.U.contains(u0, tol.feas):
            raise ValueError("u0 is not in the uncertainty set")
        self.V.add(u0, "initial")
        self.master = MasterProblem(inst, tol)
        self.LB = -INF
        self.k = 0

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def out_of_budget(self) -> Termination | None:
        if self.k >= self.iter_limit:
            return Termination.ITER_LIMIT
        if self.elapsed() >= self.time_limit:
            return Termination.TIME_LIMIT
        return None

    def solve_master(self):
        self.k += 1
        self.master.sync(self.V)
        sol = self.master.solve(max(self.time_limit - self.elapsed(), 1e-3))
        # the master bound is monotone in V; clamp solver noise
        self.LB = max(self.LB, sol.LB)
        return sol

    def add_cut(self, u, origin, source) -> bool:
        added = self.V.add(u, origin)
        vertex = self.inst.U.is_vertex(u, self.tol.vertex)
        self.rep.cuts.append({"k": self.k, "u": [float(v) for v in u], "origin": origin,
                              "source": source, "vertex": bool(vertex), "added": bool(added)})
        return added

    def record(self, UB, cut=None, u=None):
        vertex = None if u is None else bool(self.inst.U.is_vertex(u, self.tol.vertex))
        self.rep.record(self.k, self.LB, UB, cut, vertex, self.elapsed(), u)

    def finish(self, term, x, value, UB, message=""):
        rep = self.rep
        rep.termination = term
        rep.x = None if x is None else np.asarray(x, float)
        rep.value = value
        rep.LB = self.LB
        rep.UB = UB
        rep.wall_time = self.elapsed()
        if message:
            rep.message = message
        return rep


def _upper(value: float, LB: float) -> float:
    # the master value at x is itself the cost of a scenario in U, so it is never above the worst case
    return max(value, LB)


def ccg(inst: TwoStageInstance, epsilon: float = 1e-3, u0=None, oracle: str = "tildeZ",
        tol: Tolerances = DEFAULT_TOL, iter_limit: int = DEFAULT_ITER_LIMIT,
        time_limit: float = DEFAULT_TIME_LIMIT, bigM: float | None = None) -> RunReport:
    """Column-and-constraint generation.

    ``oracle="tildeZ"`` uses the complementarity worst case only, which is
    exact for robustly feasible x but can accept an infeasible one.
    ``oracle="alpha-exact"`` first checks feasibility with the phase-one
    oracle and adds a feasibility cut when x fails it.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if oracle not in ("tildeZ", "alpha-exact"):
        raise ValueError(f"unknown oracle {oracle!r}")
    L = _Loop(inst, "ccg" if oracle == "tildeZ" else "ccg-exact", epsilon, u0, tol, iter_limit, time_limit, bigM)
    x, UB = None, INF
    while True:
        term = L.out_of_budget()
        if term:
            return L.finish(term, x, UB, UB)
        try:
            sol = L.solve_master()
        except MasterInfeasible as e:
            return L.finish(Termination.INFEASIBLE, None, INF, INF, str(e))
        except SolverLimit:
            return L.finish(Termination.TIME_LIMIT, x, UB, UB)
        x = sol.x
        origin, source = "optimality-cut", "tildeZ"
        try:
            if oracle == "alpha-exact":
                al = solve_alpha_oracle(inst, x, bigM, tol)
                if al.verdict == "infeasible":
                    u, UB, origin, source = al.u_star, INF, "feasibility-cut", "alpha"
                else:
                    tz = solve_tildeZ(inst, x, bigM, tol)
                    u, UB = tz.u_star, _upper(tz.value, L.LB)
            else:
                tz = solve_tildeZ(inst, x, bigM, tol)
                u, UB = tz.u_star, _upper(tz.value, L.LB)
        except AdversaryError as e:
            return L.finish(Termination.INCONCLUSIVE, x, UB, UB, str(e))
        L.record(UB, origin, u)
        if ul_gap(L.LB, UB) <= epsilon:
            return L.finish(Termination.CONVERGED, x, UB, UB)
        if not L.add_cut(u, origin, source):
            return L.finish(Termination.INCONCLUSIVE, x, UB, UB, "oracle repeated a scenario already in V")


def ddbd(inst: TwoStageInstance, u0=None, epsilon: float | None = None, tol: Tolerances = DEFAULT_TOL,
         iter_limit: int = DEFAULT_ITER_LIMIT, time_limit: float = DEFAULT_TIME_LIMIT,
         bigM: float | None = None, am_rounds: int = 100, jobs: int = 1,
         tree: PartitionTree | None = None) -> RunReport:
    """Feasibility-safe decomposition.

    The inner loop stops once ``UB - LB <= tol.conv`` (or the relative gap
    falls to ``epsilon`` when one is given, or the fast oracle repeats a
    scenario).  The candidate is then verified exactly; an infeasible one
    yields a vertex feasibility cut and the inner loop resumes.
    """
    if epsilon is not None and epsilon <= 0:
        raise ValueError("epsilon must be positive")
    # the reported gap can only be as tight as the MIP tolerance of the master
    conv_eps = epsilon if epsilon is not None else 10 * tol.mip
    L = _Loop(inst, "ddbd", conv_eps, u0, tol, iter_limit, time_limit, bigM)
    rep = L.rep
    tree = tree or PartitionTree(DualProblemData(inst))
    x, UB = None, INF
    while True:
        term = L.out_of_budget()
        if term:
            return L.finish(term, x, UB, UB)
        try:
            sol = L.solve_master()
        except MasterInfeasible as e:
            return L.finish(Termination.INFEASIBLE, None, INF, INF, str(e))
        except SolverLimit:
            return L.finish(Termination.TIME_LIMIT, x, UB, UB)
        x = sol.x
        try:
            u_tilde = solve_tildeZ(inst, x, bigM, tol).u_star
        except AdversaryError:
            # no scenario admits recourse at x; any start lets the fast oracle certify it
            u_tilde = L.V[0].u
        f1 = f1_oracle(inst, x, u_tilde, am_rounds, tol)
        rep.inner_iterations += 1
        rep.am_traces.append(f1.info["trace"])
        u = f1.u_star
        if f1.value == INF:
            UB, origin = INF, "feasibility-cut"
        else:
            UB, origin = _upper(f1.value, L.LB), "optimality-cut"
        L.record(UB, origin, u)
        added = L.add_cut(u, origin, "F1")
        done = UB - L.LB <= tol.conv or (epsilon is not None and ul_gap(L.LB, UB) <= epsilon)
        if not (done or not added):
            continue
        # exact verification of the candidate
        rep.outer_iterations += 1
        remaining = max(time_limit - L.elapsed(), 1e-3)
        f2 = f2_oracle(inst, x, u_tilde, tol, tree=tree, time_limit=remaining, jobs=jobs)
        rep.verifications.append({"k": L.k, "x": [float(v) for v in x], "verdict": f2.verdict,
                                  "u": None if f2.u_star is None else [float(v) for v in f2.u_star],
                                  "nodes": len(tree.nodes)})
        if f2.verdict == "infeasible":
            UB = INF
            L.record(UB, "feasibility-cut", f2.u_star)
            if not L.add_cut(f2.u_star, "feasibility-cut", "F2"):
                return L.finish(Termination.INCONCLUSIVE, x, UB, UB,
                                "exact oracle returned a scenario already in V")
            continue
        if f2.verdict != "feasible":
            term = Termination.TIME_LIMIT if f2.info.get("reason") == "time limit" else Termination.INCONCLUSIVE
            return L.finish(term, x, UB, UB, f"exact oracle: {f2.info.get('reason', '')}")
        # x is robustly feasible, so the complementarity worst case at u_tilde is exact
        exact = second_stage_value(inst, x, u_tilde)[0]
        value = exact if UB == INF else max(UB, exact)
        if ul_gap(L.LB, value) <= conv_eps:
            return L.finish(Termination.CONVERGED, x, value, value)
        return L.finish(Termination.INCONCLUSIVE, x, value, value,
                        "inner loop stalled on a repeated scenario before closing the gap")


def run(inst: TwoStageInstance, algorithm: str, epsilon: float = 1e-3, **kw) -> RunReport:
    """Dispatch by algorithm name: ccg, ccg-exact, ddbd or dbc."""
    if algorithm == "ccg":
        return ccg(inst, epsilon, oracle="tildeZ", **kw)
    if algorithm == "ccg-exact":
        return ccg(inst, epsilon, oracle="alpha-exact", **kw)
    if algorithm == "ddbd":
        return ddbd(inst, epsilon=epsilon, **kw)
    if algorithm == "dbc":
        from .dbc import dbc_solve

        kw = {k: v for k, v in kw.items() if k in ("tol", "time_limit", "tree")}
        if "iter_limit" in kw:
            kw["max_iter"] = kw.pop("iter_limit")
        return dbc_solve(inst, epsilon, **kw)[2]
    raise ValueError(f"unknown algorithm {algorithm!r}")
