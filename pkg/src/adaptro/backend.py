"""LP / MILP backend contract.

Every subproblem in the package is expressed as a :class:`LinearModel` and
handed to :func:`solve_lp` or :func:`solve_mip`.  The only engine wired in is
HiGHS (dual simplex for LPs, so optimal LP points are always basic).
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import highspy
import numpy as np
from scipy import sparse

from .config import DEFAULT_TOL, Tolerances

INF = float("inf")


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    UNBOUNDED = "Unbounded"
    INFEASIBLE = "Infeasible"
    LIMIT = "Limit"


class Sense(enum.Enum):
    MIN = "min"
    MAX = "max"


class BackendError(RuntimeError):
    """Numerical or internal failure of the underlying engine."""


@dataclass(frozen=True, eq=False)
class LinearModel:
    """``opt obj.x + offset  s.t.  row_lo <= A x <= row_hi,  lb <= x <= ub``."""

    obj: np.ndarray
    A: sparse.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    sense: Sense = Sense.MIN
    offset: float = 0.0
    col_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        n = self.obj.shape[0]
        if self.A.shape[1] != n:
            raise ValueError(f"constraint matrix has {self.A.shape[1]} columns, expected {n}")
        for name in ("lb", "ub", "integer"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} has wrong length")
        if self.row_lo.shape[0] != self.A.shape[0] or self.row_hi.shape[0] != self.A.shape[0]:
            raise ValueError("row bounds do not match constraint count")
        if not (np.all(np.isfinite(self.obj)) and np.all(np.isfinite(self.A.data))):
            raise ValueError("non-finite coefficient in model")

    @property
    def num_vars(self) -> int:
        return self.obj.shape[0]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def is_mip(self) -> bool:
        return bool(self.integer.any())


@dataclass
class SolveOutcome:
    status: Status
    x: np.ndarray | None = None
    objective: float = float("nan")
    row_duals: np.ndarray | None = None
    col_duals: np.ndarray | None = None
    row_activity: np.ndarray | None = None
    is_vertex: bool = False
    ray: np.ndarray | None = None
    # basis status per column / row: "basic", "lower", "upper", "zero"
    col_basis: tuple[str, ...] | None = None
    row_basis: tuple[str, ...] | None = None
    solve_time: float = 0.0
    mip_gap: float | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class ModelBuilder:
    """Incrementally assemble a :class:`LinearModel` from dense blocks.

    >>> mb = ModelBuilder()
    >>> u = mb.add_vars(1, ub=1.0)
    >>> mb.set_objective([(np.ones(1), u)], Sense.MAX)
    >>> solve_lp(mb.build()).objective
    1.0
    """

    def __init__(self) -> None:
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._int: list[np.ndarray] = []
        self._names: list[str] = []
        self._n = 0
        self._rows = 0
        self._ri: list[np.ndarray] = []
        self._ci: list[np.ndarray] = []
        self._v: list[np.ndarray] = []
        self._rlo: list[np.ndarray] = []
        self._rhi: list[np.ndarray] = []
        self._obj: dict[int, float] = {}
        self._sense = Sense.MIN
        self._offset = 0.0

    @property
    def num_vars(self) -> int:
        return self._n

    @property
    def num_rows(self) -> int:
        return self._rows

    def add_vars(self, count: int, lb=0.0, ub=INF, integer: bool = False, name: str = "v") -> np.ndarray:
        idx = np.arange(self._n, self._n + count)
        self._lb.append(np.broadcast_to(np.asarray(lb, float), (count,)).copy())
        self._ub.append(np.broadcast_to(np.asarray(ub, float), (count,)).copy())
        self._int.append(np.full(count, integer))
        self._names.extend(f"{name}[{i}]" for i in range(count))
        self._n += count
        return idx

    def add_constraints(self, terms: Iterable[tuple[np.ndarray, np.ndarray]], sense: str, rhs) -> np.ndarray:
        """Add ``sum_k M_k @ x[idx_k]  (sense)  rhs`` row-block-wise.

        ``sense`` is one of ``"<="``, ``">="``, ``"=="``.  Each ``M_k`` is a
        2-D array with one row per new constraint.
        """
        terms = list(terms)
        k = None
        for M, idx in terms:
            M = np.atleast_2d(np.asarray(M, float))
            if k is None:
                k = M.shape[0]
            elif M.shape[0] != k:
                raise ValueError("inconsistent block row counts")
            if M.shape[1] != len(idx):
                raise ValueError("block width does not match variable index list")
            rr, cc = np.nonzero(M)
            self._ri.append(rr + self._rows)
            self._ci.append(np.asarray(idx)[cc])
            self._v.append(M[rr, cc])
        if k is None:
            k = np.atleast_1d(rhs).shape[0]
        rhs = np.broadcast_to(np.asarray(rhs, float), (k,)).copy()
        if sense == "<=":
            lo, hi = np.full(k, -INF), rhs
        elif sense == ">=":
            lo, hi = rhs, np.full(k, INF)
        elif sense == "==":
            lo, hi = rhs, rhs.copy()
        else:
            raise ValueError(f"unknown sense {sense!r}")
        self._rlo.append(lo)
        self._rhi.append(hi)
        rows = np.arange(self._rows, self._rows + k)
        self._rows += k
        return rows

    def set_objective(self, terms: Iterable[tuple[np.ndarray, np.ndarray]], sense: Sense = Sense.MIN,
                      offset: float = 0.0) -> None:
        self._obj = {}
        for coef, idx in terms:
            for c, i in zip(np.atleast_1d(np.asarray(coef, float)), np.atleast_1d(idx)):
                self._obj[int(i)] = self._obj.get(int(i), 0.0) + float(c)
        self._sense = sense
        self._offset = float(offset)

    def build(self) -> LinearModel:
        n = self._n
        obj = np.zeros(n)
        for i, c in self._obj.items():
            obj[i] = c
        if self._ri:
            A = sparse.coo_matrix(
                (np.concatenate(self._v), (np.concatenate(self._ri), np.concatenate(self._ci))),
                shape=(self._rows, n),
            ).tocsr()
        else:
            A = sparse.csr_matrix((self._rows, n))
        cat = lambda xs: np.concatenate(xs) if xs else np.zeros(0)  # noqa: E731
        return LinearModel(
            obj=obj, A=A,
            row_lo=cat(self._rlo), row_hi=cat(self._rhi),
            lb=cat(self._lb), ub=cat(self._ub),
            integer=cat(self._int).astype(bool) if self._int else np.zeros(0, bool),
            sense=self._sense, offset=self._offset,
            col_names=tuple(self._names),
        )


_BASIS_NAMES = {
    highspy.HighsBasisStatus.kBasic: "basic",
    highspy.HighsBasisStatus.kLower: "lower",
    highspy.HighsBasisStatus.kUpper: "upper",
    highspy.HighsBasisStatus.kZero: "zero",
    highspy.HighsBasisStatus.kNonbasic: "lower",
}


def _to_highs_lp(model: LinearModel, relax: bool = False) -> highspy.HighsLp:
    lp = highspy.HighsLp()
    lp.num_col_ = model.num_vars
    lp.num_row_ = model.num_rows
    lp.col_cost_ = model.obj
    lp.col_lower_ = np.where(np.isinf(model.lb), -highspy.kHighsInf, model.lb)
    lp.col_upper_ = np.where(np.isinf(model.ub), highspy.kHighsInf, model.ub)
    lp.row_lower_ = np.where(np.isinf(model.row_lo), -highspy.kHighsInf, model.row_lo)
    lp.row_upper_ = np.where(np.isinf(model.row_hi), highspy.kHighsInf, model.row_hi)
    lp.offset_ = model.offset
    lp.sense_ = highspy.ObjSense.kMaximize if model.sense is Sense.MAX else highspy.ObjSense.kMinimize
    A = model.A.tocsc()
    A.sort_indices()
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = A.indptr.astype(np.int32)
    lp.a_matrix_.index_ = A.indices.astype(np.int32)
    lp.a_matrix_.value_ = A.data
    if model.is_mip and not relax:
        lp.integrality_ = [highspy.HighsVarType.kInteger if f else highspy.HighsVarType.kContinuous
                           for f in model.integer]
    return lp


def _new_highs(time_limit: float | None, presolve: str = "choose") -> highspy.Highs:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("threads", 1)
    h.setOptionValue("presolve", presolve)
    if time_limit is not None:
        h.setOptionValue("time_limit", float(max(time_limit, 1e-3)))
    return h


def _extract(h: highspy.Highs, model: LinearModel, mip: bool, t0: float) -> SolveOutcome:
    ms = h.getModelStatus()
    M = highspy.HighsModelStatus
    elapsed = time.perf_counter() - t0
    if ms == M.kOptimal:
        sol = h.getSolution()
        x = np.array(sol.col_value)
        out = SolveOutcome(
            status=Status.OPTIMAL, x=x,
            objective=float(h.getInfo().objective_function_value),
            row_activity=np.array(sol.row_value),
            solve_time=elapsed,
        )
        if mip:
            out.mip_gap = float(h.getInfo().mip_gap)
        else:
            if sol.dual_valid:
                out.row_duals = np.array(sol.row_dual)
                out.col_duals = np.array(sol.col_dual)
            basis = h.getBasis()
            if basis.valid:
                out.col_basis = tuple(_BASIS_NAMES[s] for s in basis.col_status)
                out.row_basis = tuple(_BASIS_NAMES[s] for s in basis.row_status)
                out.is_vertex = True
        return out
    if ms == M.kInfeasible:
        return SolveOutcome(status=Status.INFEASIBLE, solve_time=elapsed)
    if ms == M.kUnbounded:
        ray = None
        if not mip:
            _, has_ray, r = h.getPrimalRay()
            if has_ray:
                ray = np.array(r)
        return SolveOutcome(status=Status.UNBOUNDED, ray=ray, solve_time=elapsed)
    if ms in (M.kTimeLimit, M.kIterationLimit, M.kSolutionLimit, M.kInterrupt):
        return SolveOutcome(status=Status.LIMIT, solve_time=elapsed)
    raise BackendError(f"HiGHS returned model status {h.modelStatusToString(ms)}")


def solve_lp(model: LinearModel, time_limit: float | None = None) -> SolveOutcome:
    """Solve a pure LP with dual simplex; optimal points are basic solutions."""
    if model.is_mip:
        raise ValueError("solve_lp called on a model with integer variables")
    t0 = time.perf_counter()
    h = _new_highs(time_limit)
    h.setOptionValue("solver", "simplex")
    h.passModel(_to_highs_lp(model))
    h.run()
    if h.getModelStatus() == highspy.HighsModelStatus.kUnboundedOrInfeasible:
        # presolve cannot tell the two apart; plain simplex can
        h = _new_highs(time_limit, presolve="off")
        h.setOptionValue("solver", "simplex")
        h.passModel(_to_highs_lp(model))
        h.run()
    return _extract(h, model, mip=False, t0=t0)


def solve_mip(model: LinearModel, tol: Tolerances = DEFAULT_TOL, time_limit: float | None = None,
              presolve: str = "choose") -> SolveOutcome:
    """Solve a MILP to relative gap ``tol.mip``; delegates to solve_lp when no integers.

    ``presolve="off"`` is for big-M models, where HiGHS presolve can cut
    off the optimum when M is several orders above the data.
    """
    if not model.is_mip:
        return solve_lp(model, time_limit=time_limit)
    t0 = time.perf_counter()
    h = _new_highs(time_limit, presolve)
    h.setOptionValue("mip_rel_gap", tol.mip)
    h.setOptionValue("mip_abs_gap", 1e-9)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    h.passModel(_to_highs_lp(model))
    h.run()
    if h.getModelStatus() == highspy.HighsModelStatus.kUnboundedOrInfeasible:
        # decide via the relaxation: an infeasible relaxation means an infeasible MIP
        relax = solve_lp(_relaxed(model), time_limit=time_limit)
        if relax.status is Status.INFEASIBLE:
            return SolveOutcome(status=Status.INFEASIBLE, solve_time=time.perf_counter() - t0)
        return SolveOutcome(status=Status.UNBOUNDED, solve_time=time.perf_counter() - t0)
    return _extract(h, model, mip=True, t0=t0)


def _relaxed(model: LinearModel) -> LinearModel:
    return LinearModel(model.obj, model.A, model.row_lo, model.row_hi, model.lb, model.ub,
                       np.zeros_like(model.integer), model.sense, model.offset, model.col_names)


def solve(model: LinearModel, tol: Tolerances = DEFAULT_TOL, time_limit: float | None = None) -> SolveOutcome:
    return solve_mip(model, tol, time_limit) if model.is_mip else solve_lp(model, time_limit)


def active_rank(G: np.ndarray, h: np.ndarray, x: np.ndarray, tol: float = 1e-7) -> int:
    """Rank of the rows of ``G x <= h`` that are active at ``x``."""
    G = np.atleast_2d(np.asarray(G, float))
    slack = h - G @ x
    scale = 1.0 + np.abs(h)
    act = G[np.abs(slack) <= tol * scale]
    if act.size == 0:
        return 0
    return int(np.linalg.matrix_rank(act, tol=1e-9))


def is_vertex_of(G: np.ndarray, h: np.ndarray, x: np.ndarray, tol: float = 1e-7) -> bool:
    """True when ``x`` is feasible for ``G x <= h`` and activates ``dim(x)`` independent rows."""
    x = np.asarray(x, float)
    if np.any(G @ x > h + tol * (1.0 + np.abs(h))):
        return False
    return active_rank(G, h, x, tol) >= x.shape[0]


def model_is_vertex(model: LinearModel, x: np.ndarray, tol: float = 1e-7) -> bool:
    """Vertex test of ``x`` against all rows and finite bounds of an LP model."""
    A = model.A.toarray()
    n = model.num_vars
    blocks, rhs = [], []
    fin = np.isfinite(model.row_hi)
    blocks.append(A[fin]); rhs.append(model.row_hi[fin])
    fin = np.isfinite(model.row_lo)
    blocks.append(-A[fin]); rhs.append(-model.row_lo[fin])
    eye = np.eye(n)
    fin = np.isfinite(model.ub)
    blocks.append(eye[fin]); rhs.append(model.ub[fin])
    fin = np.isfinite(model.lb)
    blocks.append(-eye[fin]); rhs.append(-model.lb[fin])
    return is_vertex_of(np.vstack(blocks), np.concatenate(rhs), x, tol)


def write_lp_file(model: LinearModel, path: str) -> None:
    """Dump the model in CPLEX LP text format for debugging."""
    names = model.col_names or tuple(f"x{i}" for i in range(model.num_vars))
    safe = [n.replace("[", "(").replace("]", ")") for n in names]

    def expr(coefs: Sequence[float], idx: Sequence[int]) -> str:
        parts = []
        for c, i in zip(coefs, idx):
            if c == 0:
                continue
            parts.append(f"{'+' if c >= 0 else '-'} {abs(c):.17g} {safe[i]}")
        return " ".join(parts) if parts else "0 " + safe[0]

    lines = ["Maximize" if model.sense is Sense.MAX else "Minimize"]
    nz = np.nonzero(model.obj)[0]
    lines.append(" obj: " + expr(model.obj[nz], nz))
    lines.append("Subject To")
    A = model.A.tocsr()
    for r in range(model.num_rows):
        row = A.getrow(r)
        e = expr(row.data, row.indices)
        lo, hi = model.row_lo[r], model.row_hi[r]
        if lo == hi:
            lines.append(f" r{r}: {e} = {hi:.17g}")
        else:
            if np.isfinite(hi):
                lines.append(f" r{r}u: {e} <= {hi:.17g}")
            if np.isfinite(lo):
                lines.append(f" r{r}l: {e} >= {lo:.17g}")
    lines.append("Bounds")
    for i in range(model.num_vars):
        lo = "-inf" if np.isinf(model.lb[i]) else f"{model.lb[i]:.17g}"
        hi = "+inf" if np.isinf(model.ub[i]) else f"{model.ub[i]:.17g}"
        lines.append(f" {lo} <= {safe[i]} <= {hi}")
    ints = [safe[i] for i in np.nonzero(model.integer)[0]]
    if ints:
        lines.append("General")
        lines.append(" " + " ".join(ints))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class Session:
    """Append-only LP/MILP session that keeps one HiGHS instance alive.

    Columns and rows can be appended between solves; for LPs HiGHS warm
    starts from the previous basis.
    """

    model: LinearModel
    tol: Tolerances = DEFAULT_TOL
    _h: highspy.Highs = field(init=False, repr=False)
    _integer: list[bool] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._h = _new_highs(None)
        self._h.setOptionValue("mip_rel_gap", self.tol.mip)
        self._h.setOptionValue("mip_abs_gap", 1e-9)
        self._h.setOptionValue("mip_feasibility_tolerance", 1e-9)
        self._h.passModel(_to_highs_lp(self.model))
        self._integer = list(self.model.integer)

    @property
    def num_vars(self) -> int:
        return len(self._integer)

    @property
    def num_rows(self) -> int:
        return self._h.getNumRow()

    def add_vars(self, count: int, lb=0.0, ub=INF, cost=0.0) -> np.ndarray:
        lb = np.broadcast_to(np.asarray(lb, float), (count,))
        ub = np.broadcast_to(np.asarray(ub, float), (count,))
        cost = np.broadcast_to(np.asarray(cost, float), (count,))
        start = self.num_vars
        self._h.addCols(count, cost.copy(), np.where(np.isinf(lb), -highspy.kHighsInf, lb),
                        np.where(np.isinf(ub), highspy.kHighsInf, ub), 0,
                        np.zeros(0, np.int32), np.zeros(0, np.int32), np.zeros(0))
        self._integer.extend([False] * count)
        return np.arange(start, start + count)

    def add_rows(self, M: np.ndarray, idx: np.ndarray, lo, hi) -> None:
        M = np.atleast_2d(np.asarray(M, float))
        k = M.shape[0]
        lo = np.broadcast_to(np.asarray(lo, float), (k,))
        hi = np.broadcast_to(np.asarray(hi, float), (k,))
        S = sparse.csr_matrix(M)
        self._h.addRows(k, np.where(np.isinf(lo), -highspy.kHighsInf, lo),
                        np.where(np.isinf(hi), highspy.kHighsInf, hi),
                        S.nnz, S.indptr[:-1].astype(np.int32),
                        np.asarray(idx)[S.indices].astype(np.int32), S.data)

    def solve(self, time_limit: float | None = None) -> SolveOutcome:
        mip = any(self._integer)
        if time_limit is not None:
            self._h.setOptionValue("time_limit", float(max(time_limit, 1e-3)))
        self._h.setOptionValue("solver", "choose" if mip else "simplex")
        t0 = time.perf_counter()
        self._h.run()
        status = self._h.getModelStatus()
        if status == highspy.HighsModelStatus.kUnboundedOrInfeasible:
            self._h.setOptionValue("presolve", "off")
            self._h.run()
            self._h.setOptionValue("presolve", "choose")
        return _extract(self._h, self.model, mip=mip, t0=t0)
