"""Fast feasibility oracle: alternating maximization.

Y(x, u) is empty exactly when the dual of the recourse LP has an improving
ray, i.e. when ``max {(c - A x - C u).w : B'w <= 0, 0 <= w <= 1}`` is
positive.  Searching for such a (u, w) pair is a bilinear program; here it
is attacked by alternating between the u-block (an LP over U) and the
w-block (an LP over the truncated recession cone).  A positive value is a
proof of infeasibility.  A zero value proves nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adversary import AdversaryOutcome
from .backend import INF, BackendError, ModelBuilder, Sense, Status, solve_lp
from .config import DEFAULT_TOL, Tolerances
from .model import TwoStageInstance, second_stage_value

DEFAULT_MAX_ROUNDS = 100


@dataclass
class AmTrace:
    start: np.ndarray
    x: np.ndarray | None = None
    f: list[float] = field(default_factory=list)
    u: list[np.ndarray] = field(default_factory=list)
    w: list[np.ndarray] = field(default_factory=list)
    u_final: np.ndarray | None = None
    certificate_positive: bool = False
    truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "start": self.start.tolist(),
            "x": None if self.x is None else self.x.tolist(),
            "f": [float(v) for v in self.f],
            "u": [v.tolist() for v in self.u],
            "u_final": None if self.u_final is None else self.u_final.tolist(),
            "certificate_positive": self.certificate_positive,
            "truncated": self.truncated,
        }


def _cone_lp(inst: TwoStageInstance, g: np.ndarray):
    mb = ModelBuilder()
    w = mb.add_vars(inst.r, ub=1.0, name="w")
    mb.add_constraints([(inst.B.T, w)], "<=", 0.0)
    return mb, w


def recession_certificate_lp(inst: TwoStageInstance, x, u, tie_break: bool = True) -> tuple[np.ndarray, float]:
    """``max (c - A x - C u).w`` over ``{B'w <= 0, 0 <= w <= 1}``.

    A value above ``tol.pos`` certifies that Y(x, u) is empty.  Among
    optimal w the one with the largest total mass is returned, so that a
    zero objective does not collapse the search onto w = 0.
    """
    g = inst.rhs(x, u)
    mb, w = _cone_lp(inst, g)
    mb.set_objective([(g, w)], Sense.MAX)
    out = solve_lp(mb.build())
    if out.status is not Status.OPTIMAL:
        raise BackendError(f"recession LP ended with status {out.status.value}")
    w_best, v = out.x[w], float(out.objective)
    if tie_break:
        mb2, w2 = _cone_lp(inst, g)
        mb2.add_constraints([(g[None, :], w2)], ">=", v - 1e-12 * (1.0 + abs(v)))
        mb2.set_objective([(np.ones(inst.r), w2)], Sense.MAX)
        out2 = solve_lp(mb2.build())
        if out2.status is Status.OPTIMAL and g @ out2.x[w2] >= g @ w_best - 1e-12:
            w_best = out2.x[w2]
    w_best = np.clip(w_best, 0.0, 1.0)
    return w_best, float(g @ w_best)


def adversary_step_lp(inst: TwoStageInstance, x, w, prev_u=None, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Vertex of U maximizing ``(c - A x - C u).w``.

    ``prev_u`` is kept when it is itself a vertex and already optimal, which
    makes the step deterministic under ties (in particular when w = 0).
    """
    w = np.asarray(w, float)
    mb = ModelBuilder()
    u = mb.add_vars(inst.l, name="u")
    mb.add_constraints([(inst.U.D, u)], "<=", inst.U.d_rhs)
    mb.set_objective([(-(inst.C.T @ w), u)], Sense.MAX)
    out = solve_lp(mb.build())
    if out.status is not Status.OPTIMAL:
        raise BackendError(f"adversary step LP ended with status {out.status.value}")
    u_new = np.clip(out.x[u], 0.0, None)
    if prev_u is not None:
        prev_u = np.asarray(prev_u, float)
        obj = -(inst.C.T @ w)
        if obj @ prev_u >= obj @ u_new - 1e-12 * (1.0 + abs(obj @ u_new)) and inst.U.is_vertex(prev_u, tol.vertex):
            return prev_u.copy()
    return u_new


def _bounded_dual(inst: TwoStageInstance, x, u) -> np.ndarray:
    """Optimal dual multipliers of the recourse LP at (x, u) over ``{B'w <= b, w >= 0}``."""
    g = inst.rhs(x, u)
    mb = ModelBuilder()
    w = mb.add_vars(inst.r, name="w")
    mb.add_constraints([(inst.B.T, w)], "<=", inst.b)
    mb.set_objective([(g, w)], Sense.MAX)
    out = solve_lp(mb.build())
    if out.status is Status.OPTIMAL:
        return out.x[w]
    if out.status is Status.UNBOUNDED:
        # recourse is already infeasible at the start point; start from the ray
        return recession_certificate_lp(inst, x, u)[0]
    raise BackendError(f"initial dual LP ended with status {out.status.value}")


def run_am(inst: TwoStageInstance, x, u_start, max_rounds: int = DEFAULT_MAX_ROUNDS,
           tol: Tolerances = DEFAULT_TOL) -> AmTrace:
    x = np.asarray(x, float)
    u_start = np.asarray(u_start, float)
    trace = AmTrace(start=u_start.copy(), x=x.copy())
    w = _bounded_dual(inst, x, u_start)
    u = u_start
    f_prev = -INF
    for k in range(max_rounds):
        u = adversary_step_lp(inst, x, w, prev_u=u, tol=tol)
        w, f = recession_certificate_lp(inst, x, u)
        trace.u.append(u.copy())
        trace.w.append(w.copy())
        trace.f.append(f)
        if k > 0 and f - f_prev <= tol.pos:
            break
        f_prev = f
    else:
        trace.truncated = True
    trace.u_final = u.copy()
    trace.certificate_positive = trace.f[-1] > tol.pos
    return trace


def f1_oracle(inst: TwoStageInstance, x, u_start, max_rounds: int = DEFAULT_MAX_ROUNDS,
              tol: Tolerances = DEFAULT_TOL) -> AdversaryOutcome:
    """Alternating-maximization oracle seeded at ``u_start``.

    Returns ``value = inf`` with the certifying vertex when infeasibility is
    proven.  Otherwise returns the worst second-stage cost among the visited
    vertices; the first visited vertex already costs at least as much as
    ``u_start`` (weak duality), so the value is never below the seed's.
    """
    x = np.asarray(x, float)
    trace = run_am(inst, x, u_start, max_rounds, tol)
    info = {"trace": trace, "truncated": trace.truncated}
    if trace.certificate_positive:
        u = trace.u_final
        return AdversaryOutcome(value=INF, u_star=u, w_star=trace.w[-1],
                                vertex_of_U=inst.U.is_vertex(u, tol.vertex),
                                kind="AlternatingMax", verdict="infeasible", info=info)
    best_v, best_u, best_y = -INF, None, None
    seen: list[np.ndarray] = []
    for u in trace.u:
        if any(np.max(np.abs(u - s)) <= tol.dup for s in seen):
            continue
        seen.append(u)
        v, y = second_stage_value(inst, x, u)
        if v > best_v:
            best_v, best_u, best_y = v, u, y
        if v == INF:
            break
    verdict = "infeasible" if best_v == INF else None
    return AdversaryOutcome(value=best_v, u_star=best_u, w_star=None, y_star=best_y,
                            vertex_of_U=inst.U.is_vertex(best_u, tol.vertex),
                            kind="AlternatingMax", verdict=verdict, info=info)
