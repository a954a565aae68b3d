"""Complementarity-based worst-case oracles.

``solve_tildeZ`` maximizes the second-stage cost over u by pairing the
recourse LP with its dual and enforcing complementary slackness through
big-M binaries.  For a first-stage decision that admits recourse for every
u the result is the true worst case; otherwise it can underestimate it,
because realizations with an empty recourse set simply drop out of the
search.

``solve_alpha_oracle`` applies the same construction to the phase-one
problem ``min {alpha : B y + alpha e >= c - A x - C u}``, whose worst case
over U is zero exactly when x is robustly feasible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .backend import INF, BackendError, ModelBuilder, Sense, Status, solve_lp, solve_mip
from .config import DEFAULT_TOL, Tolerances
from .model import TwoStageInstance, second_stage_value

log = logging.getLogger(__name__)

DEFAULT_BIGM_MULTIPLIER = 1e4


class AdversaryError(RuntimeError):
    pass


@dataclass
class AdversaryOutcome:
    value: float
    u_star: np.ndarray
    w_star: np.ndarray | None
    vertex_of_U: bool
    kind: str
    verdict: str | None = None  # "feasible" | "infeasible" | "inconclusive" | None
    y_star: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)
    info: dict = field(default_factory=dict)


def default_bigM(inst: TwoStageInstance, multiplier: float = DEFAULT_BIGM_MULTIPLIER) -> float:
    """Data-driven big-M: ``multiplier * max(1, data scale)``.

    The scale is the largest of |c|, |b|, |B|, and the row sums of |A| and
    |C| weighted by the magnitude of the X and U bounding boxes.
    """
    X = inst.X
    xmag = np.maximum(np.abs(X.lb), np.abs(X.ub))
    if not np.all(np.isfinite(xmag)):
        raise ValueError("cannot derive M: first-stage set has no finite bounding box")
    _, uhi = inst.U.box()
    if not np.all(np.isfinite(uhi)):
        raise ValueError("cannot derive M: uncertainty set is unbounded")
    parts = [
        np.max(np.abs(inst.c), initial=0.0),
        np.max(np.abs(inst.b), initial=0.0),
        np.max(np.abs(inst.B), initial=0.0),
        np.max(np.abs(inst.A) @ xmag, initial=0.0),
        np.max(np.abs(inst.C) @ np.abs(uhi), initial=0.0),
    ]
    return float(multiplier * max(1.0, *parts))


def _complementarity_mio(rhs0, B, b, C, D, d, M, tol: Tolerances, presolve: str = "choose"):
    """max b.y over (u, y, w) with big-M complementarity; rhs0 = c - A x."""
    r, m = B.shape
    l = C.shape[1]
    mb = ModelBuilder()
    u = mb.add_vars(l, name="u")
    y = mb.add_vars(m, name="y")
    w = mb.add_vars(r, name="w")
    al = mb.add_vars(r, ub=1.0, integer=True, name="alpha")
    be = mb.add_vars(m, ub=1.0, integer=True, name="beta")
    I_r, I_m = np.eye(r), np.eye(m)
    mb.add_constraints([(D, u)], "<=", d)
    mb.add_constraints([(B, y), (C, u)], ">=", rhs0)
    mb.add_constraints([(B.T, w)], "<=", b)
    mb.add_constraints([(I_r, w), (-M * I_r, al)], "<=", 0.0)
    mb.add_constraints([(B, y), (C, u), (M * I_r, al)], "<=", M + rhs0)
    mb.add_constraints([(I_m, y), (-M * I_m, be)], "<=", 0.0)
    mb.add_constraints([(-B.T, w), (M * I_m, be)], "<=", M - b)
    mb.set_objective([(b, y)], Sense.MAX)
    out = solve_mip(mb.build(), tol, presolve=presolve)
    if out.status is Status.INFEASIBLE:
        raise AdversaryError("complementarity MIO is infeasible: no u in U admits recourse at this x")
    if out.status is Status.LIMIT:
        raise AdversaryError("complementarity MIO hit a solver limit")
    if out.status is not Status.OPTIMAL:
        raise BackendError(f"complementarity MIO ended with status {out.status.value}")
    z = out.x
    return z[u], z[y], z[w], np.round(z[al]).astype(bool), np.round(z[be]).astype(bool), out.objective


def _polish(rhs0, B, b, C, D, d, act_rows, pos_cols):
    """Re-solve with the binary pattern fixed and no big-M; exact complementarity."""
    r, m = B.shape
    l = C.shape[1]
    mb = ModelBuilder()
    u = mb.add_vars(l)
    y_ub = np.where(pos_cols, INF, 0.0)
    y = mb.add_vars(m, ub=y_ub)
    w_ub = np.where(act_rows, INF, 0.0)
    w = mb.add_vars(r, ub=w_ub)
    mb.add_constraints([(D, u)], "<=", d)
    mb.add_constraints([(B, y), (C, u)], ">=", rhs0)
    if act_rows.any():
        mb.add_constraints([(B[act_rows], y), (C[act_rows], u)], "<=", rhs0[act_rows])
    mb.add_constraints([(B.T, w)], "<=", b)
    if pos_cols.any():
        mb.add_constraints([(B.T[pos_cols], w)], ">=", b[pos_cols])
    mb.set_objective([(b, y)], Sense.MAX)
    out = solve_lp(mb.build())
    if out.status is not Status.OPTIMAL:
        return None
    z = out.x
    return z[u], z[y], z[w], out.objective


def _tight_warnings(y, w, slack, M) -> list[str]:
    warn = []
    lim = 0.99 * M
    if np.any(w >= lim):
        warn.append("big-M possibly too small: dual multiplier at the bound")
    if np.any(y >= lim):
        warn.append("big-M possibly too small: recourse variable at the bound")
    if np.any(slack >= lim):
        warn.append("big-M possibly too small: constraint slack at the bound")
    for msg in warn:
        log.warning(msg)
    return warn


def _run(rhs0, B, b, C, U, M, tol):
    D, d = U.D, U.d_rhs
    # A smaller M only shrinks the feasible set, so a solution found after a
    # spurious "infeasible" at a huge M is still a valid answer.
    trials = [M] + [M * f for f in (1e-2, 1e-4) if M * f >= 10.0]
    for i, Mi in enumerate(trials):
        try:
            u, y, w, act, pos, obj = _complementarity_mio(rhs0, B, b, C, D, d, Mi, tol)
            break
        except AdversaryError:
            if i == len(trials) - 1:
                raise
    warn = _tight_warnings(y, w, B @ y + C @ u - rhs0, Mi)
    if Mi != M:
        warn.append(f"MIO reported infeasible at M={M:.3g}; solved with M={Mi:.3g}")
        log.warning(warn[-1])
    # With M far above the solution scale HiGHS occasionally stops at a
    # suboptimal pattern; a second pass with M sized to the first solution
    # is much better conditioned.  Both answers are exact complementarity
    # points, so keeping the larger objective is always safe.
    M2 = 10.0 * max(1.0, np.max(np.abs(np.concatenate([u, y, w, B @ y + C @ u - rhs0]))))
    if M2 * 100.0 < M:
        try:
            alt = _complementarity_mio(rhs0, B, b, C, D, d, M2, tol)
        except AdversaryError:
            alt = None
        if alt is not None and alt[5] > obj + 1e-9 * (1.0 + abs(obj)):
            u, y, w, act, pos, obj = alt
    pol = _polish(rhs0, B, b, C, D, d, act, pos)
    if pol is not None and pol[3] >= obj - 1e-7 * (1.0 + abs(obj)):
        u, y, w, obj = pol
    u = np.clip(u, 0.0, None)
    return u, y, w, obj, warn


def solve_tildeZ(inst: TwoStageInstance, x, bigM: float | None = None,
                 tol: Tolerances = DEFAULT_TOL) -> AdversaryOutcome:
    """Worst-case second-stage cost (including a.x) via the complementarity MIO."""
    x = np.asarray(x, float)
    M = default_bigM(inst) if bigM is None else float(bigM)
    if M <= 0:
        raise ValueError("bigM must be positive")
    rhs0 = inst.c - inst.A @ x
    u, y, w, obj, warn = _run(rhs0, inst.B, inst.b, inst.C, inst.U, M, tol)
    ax = float(inst.a @ x)
    value, y_lp = second_stage_value(inst, x, u)
    if not np.isfinite(value):
        # LP at the returned u disagrees with the MIO's own recourse; trust the MIO
        value, y_lp = ax + float(inst.b @ y), y
    return AdversaryOutcome(
        value=value, u_star=u, w_star=w, y_star=y_lp,
        vertex_of_U=inst.U.is_vertex(u, tol.vertex),
        kind="ComplementarityMax", warnings=warn,
        info={"mio_value": ax + obj, "bigM": M},
    )


def alpha_value(inst: TwoStageInstance, x, u) -> float:
    """Phase-one infeasibility ``min {alpha >= 0 : B y + alpha e >= c - A x - C u, y >= 0}``."""
    mb = ModelBuilder()
    y = mb.add_vars(inst.m)
    al = mb.add_vars(1)
    mb.add_constraints([(inst.B, y), (np.ones((inst.r, 1)), al)], ">=", inst.rhs(x, u))
    mb.set_objective([(np.ones(1), al)], Sense.MIN)
    out = solve_lp(mb.build())
    if out.status is not Status.OPTIMAL:
        raise BackendError(f"phase-one LP ended with status {out.status.value}")
    return float(out.objective)


def _vertex_push(inst: TwoStageInstance, x, u):
    """Vertex of U whose phase-one value is no smaller than that of ``u``."""
    mb = ModelBuilder()
    w = mb.add_vars(inst.r)
    mb.add_constraints([(inst.B.T, w)], "<=", 0.0)
    mb.add_constraints([(np.ones((1, inst.r)), w)], "<=", 1.0)
    mb.set_objective([(inst.rhs(x, u), w)], Sense.MAX)
    out = solve_lp(mb.build())
    if out.status is not Status.OPTIMAL:
        return None
    from .am import adversary_step_lp

    return adversary_step_lp(inst, x, out.x[w])


def solve_alpha_oracle(inst: TwoStageInstance, x, bigM: float | None = None,
                       tol: Tolerances = DEFAULT_TOL) -> AdversaryOutcome:
    """Exact (slow) feasibility oracle: worst-case phase-one value over U."""
    x = np.asarray(x, float)
    M = default_bigM(inst) if bigM is None else float(bigM)
    if M <= 0:
        raise ValueError("bigM must be positive")
    r, m = inst.r, inst.m
    B_aug = np.hstack([inst.B, np.ones((r, 1))])
    b_aug = np.zeros(m + 1)
    b_aug[-1] = 1.0
    rhs0 = inst.c - inst.A @ x
    u, ytil, w, obj, warn = _run(rhs0, B_aug, b_aug, inst.C, inst.U, M, tol)
    alpha_bar = max(alpha_value(inst, x, u), 0.0)
    # the phase-one value is convex in u, so a vertex of U does at least as well
    uv = _vertex_push(inst, x, u)
    if uv is not None:
        av = max(alpha_value(inst, x, uv), 0.0)
        if av >= alpha_bar - 1e-9:
            u, alpha_bar = uv, av
    return AdversaryOutcome(
        value=alpha_bar, u_star=u, w_star=w, y_star=ytil[:m],
        vertex_of_U=inst.U.is_vertex(u, tol.vertex),
        kind="AlphaFeasibility",
        verdict="feasible" if alpha_bar <= tol.pos else "infeasible",
        warnings=warn, info={"mio_value": obj, "bigM": M},
    )
