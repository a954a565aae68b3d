"""Brute-force ground truth for small instances.

The worst case over a polytope of a convex piecewise-linear function of u
(the recourse value) is attained at a vertex, so enumerating the vertices
of U gives exact worst cases and, through the master over all vertices,
the exact optimum.  Only for testing and verification.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .master import solve_master
from .model import TwoStageInstance, UncertaintyPolytope, second_stage_value

DEFAULT_CAP = 1_000_000


class ReferenceTooLarge(ValueError):
    def __init__(self, count: int, cap: int) -> None:
        super().__init__(f"instance too large for reference oracle ({count} candidate bases > cap {cap})")


def enumerate_vertices(poly: UncertaintyPolytope, cap: int = DEFAULT_CAP,
                       tol: Tolerances = DEFAULT_TOL) -> list[np.ndarray]:
    """All vertices of ``{D u <= d_rhs, u >= 0}`` by trying every set of l active rows."""
    G, h = poly.inequalities()
    n_rows, l = G.shape
    count = math.comb(n_rows, l)
    if count > cap:
        raise ReferenceTooLarge(count, cap)
    out: list[np.ndarray] = []
    for rows in itertools.combinations(range(n_rows), l):
        Gs = G[list(rows)]
        if abs(np.linalg.det(Gs)) < 1e-12:
            if np.linalg.matrix_rank(Gs) < l:
                continue
        u = np.linalg.solve(Gs, h[list(rows)])
        if np.any(G @ u > h + tol.feas * (1.0 + np.abs(h))):
            continue
        u[np.abs(u) < 1e-13] = 0.0
        if any(np.max(np.abs(u - v)) <= tol.dup * (1.0 + np.max(np.abs(v))) for v in out):
            continue
        out.append(u)
    return out


def exact_worst_case(inst: TwoStageInstance, x, vertices=None, jobs: int = 1) -> tuple[float, np.ndarray]:
    """``(Zbar(x), u*)``: the worst second-stage cost over the vertices of U, ``inf`` when one is infeasible."""
    x = np.asarray(x, float)
    V = enumerate_vertices(inst.U) if vertices is None else vertices
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            vals = list(ex.map(lambda u: second_stage_value(inst, x, u)[0], V))
    else:
        vals = []
        for u in V:
            vals.append(second_stage_value(inst, x, u)[0])
            if vals[-1] == math.inf:
                break
    i = int(np.argmax(vals))
    return float(vals[i]), V[i].copy()


def is_feasible(inst: TwoStageInstance, x, vertices=None) -> bool:
    return exact_worst_case(inst, x, vertices)[0] < math.inf


def exact_solve(inst: TwoStageInstance, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    """Optimal ``(x*, value)`` from the master over every vertex of U; raises MasterInfeasible."""
    V = enumerate_vertices(inst.U)
    sol = solve_master(inst, V, tol)
    value, _ = exact_worst_case(inst, sol.x, V)
    if not math.isclose(value, sol.LB, rel_tol=1e-8, abs_tol=1e-8):
        # integer rounding of x or solver tolerances; the re-evaluated value is the truthful one
        if value == math.inf or abs(value - sol.LB) > 1e-6 * max(1.0, abs(value)):
            raise AssertionError(f"reference master value {sol.LB} disagrees with worst case {value} at x*")
    return sol.x, value
