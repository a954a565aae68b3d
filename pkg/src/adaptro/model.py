"""Problem data for two-stage adaptive robust linear optimization.

The canonical problem is::

    min_{x in X} max_{u in U} min_{y >= 0 : A x + B y + C u >= c}  a.x + b.y

with ``U = {u >= 0 : D u <= d}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .backend import INF, ModelBuilder, Sense, Status, BackendError, solve_lp
from .config import DEFAULT_TOL, Tolerances


@dataclass(frozen=True, eq=False)
class UncertaintyPolytope:
    D: np.ndarray
    d_rhs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "D", np.atleast_2d(np.asarray(self.D, float)))
        object.__setattr__(self, "d_rhs", np.asarray(self.d_rhs, float).reshape(-1))

    @property
    def l(self) -> int:
        return self.D.shape[1]

    @property
    def d(self) -> int:
        return self.D.shape[0]

    def inequalities(self) -> tuple[np.ndarray, np.ndarray]:
        """``(G, h)`` with ``U = {u : G u <= h}``; rows are D first, then ``-u <= 0``."""
        return np.vstack([self.D, -np.eye(self.l)]), np.concatenate([self.d_rhs, np.zeros(self.l)])

    def contains(self, u, tol: float = DEFAULT_TOL.feas) -> bool:
        u = np.asarray(u, float)
        return bool(np.all(self.D @ u <= self.d_rhs + tol) and np.all(u >= -tol))

    def is_vertex(self, u, tol: float = DEFAULT_TOL.vertex) -> bool:
        from .backend import is_vertex_of

        G, h = self.inequalities()
        return is_vertex_of(G, h, np.asarray(u, float), tol)

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate-wise min / max over U (inf when unbounded)."""
        lo, hi = np.zeros(self.l), np.zeros(self.l)
        for j in range(self.l):
            for sense, store in ((Sense.MIN, lo), (Sense.MAX, hi)):
                mb = ModelBuilder()
                u = mb.add_vars(self.l)
                if self.d:
                    mb.add_constraints([(self.D, u)], "<=", self.d_rhs)
                e = np.zeros(self.l)
                e[j] = 1.0
                mb.set_objective([(e, u)], sense)
                out = solve_lp(mb.build())
                if out.status is Status.OPTIMAL:
                    store[j] = out.objective
                elif out.status is Status.UNBOUNDED:
                    store[j] = INF if sense is Sense.MAX else -INF
                else:
                    store[j] = np.nan
        return lo, hi


@dataclass(frozen=True, eq=False)
class FirstStageSet:
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    senses: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        lb = np.asarray(self.lb, float).reshape(-1)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", np.asarray(self.ub, float).reshape(-1))
        object.__setattr__(self, "integer", np.asarray(self.integer, bool).reshape(-1))
        G = np.zeros((0, lb.shape[0])) if self.G is None else np.atleast_2d(np.asarray(self.G, float))
        if G.size == 0:
            G = np.zeros((0, lb.shape[0]))
        h = np.zeros(0) if self.h is None else np.asarray(self.h, float).reshape(-1)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "senses", tuple(self.senses) if self.senses else ("<=",) * G.shape[0])

    @property
    def n(self) -> int:
        return self.lb.shape[0]

    @property
    def n_integer(self) -> int:
        return int(self.integer.sum())

    def add_to(self, mb: ModelBuilder, name: str = "x") -> np.ndarray:
        """Declare x in ``mb`` with bounds, integrality and linear constraints."""
        idx = np.empty(self.n, dtype=int)
        for i in range(self.n):
            idx[i] = mb.add_vars(1, lb=self.lb[i], ub=self.ub[i], integer=bool(self.integer[i]), name=f"{name}{i}")[0]
        for sense in ("<=", ">=", "=="):
            rows = [k for k, s in enumerate(self.senses) if s == sense]
            if rows:
                mb.add_constraints([(self.G[rows], idx)], sense, self.h[rows])
        return idx

    def contains(self, x, tol: float = DEFAULT_TOL.feas, check_integrality: bool = True) -> bool:
        x = np.asarray(x, float)
        if np.any(x < self.lb - tol) or np.any(x > self.ub + tol):
            return False
        if check_integrality and np.any(np.abs(x[self.integer] - np.round(x[self.integer])) > 1e-6):
            return False
        for k, s in enumerate(self.senses):
            v = self.G[k] @ x - self.h[k]
            if (s == "<=" and v > tol) or (s == ">=" and v < -tol) or (s == "==" and abs(v) > tol):
                return False
        return True


@dataclass(frozen=True, eq=False)
class TwoStageInstance:
    a: np.ndarray
    b: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    c: np.ndarray
    X: FirstStageSet
    U: UncertaintyPolytope
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), float).reshape(-1))
        for name in ("A", "B", "C"):
            M = np.asarray(getattr(self, name), float)
            object.__setattr__(self, name, M.reshape(M.shape[0], -1) if M.ndim == 2 else np.atleast_2d(M))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def r(self) -> int:
        return self.c.shape[0]

    @property
    def l(self) -> int:
        return self.U.l

    def rhs(self, x, u) -> np.ndarray:
        """``c - A x - C u``: the right-hand side the recourse must cover."""
        return self.c - self.A @ np.asarray(x, float) - self.C @ np.asarray(u, float)


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.where}"


def validate_instance(inst: TwoStageInstance) -> list[Violation]:
    """Check shapes, finiteness, and that X and U are nonempty and bounded."""
    out: list[Violation] = []
    n, m, r = inst.a.shape[0], inst.b.shape[0], inst.c.shape[0]
    l = inst.U.D.shape[1]
    expected = {
        "A": (inst.A, (r, n)),
        "B": (inst.B, (r, m)),
        "C": (inst.C, (r, l)),
    }
    for name, (M, shape) in expected.items():
        if M.shape != shape:
            out.append(Violation("dimension-mismatch", name))
    if inst.U.d_rhs.shape[0] != inst.U.D.shape[0]:
        out.append(Violation("dimension-mismatch", "d_rhs"))
    X = inst.X
    for name in ("lb", "ub", "integer"):
        if getattr(X, name).shape[0] != n:
            out.append(Violation("dimension-mismatch", f"X.{name}"))
    if X.G.shape[1] != n or X.G.shape[0] != X.h.shape[0] or len(X.senses) != X.h.shape[0]:
        out.append(Violation("dimension-mismatch", "X.constraints"))
    if out:
        return out

    for name in ("a", "b", "c", "A", "B", "C"):
        if not np.all(np.isfinite(getattr(inst, name))):
            out.append(Violation("non-finite", name))
    if not (np.all(np.isfinite(inst.U.D)) and np.all(np.isfinite(inst.U.d_rhs))):
        out.append(Violation("non-finite", "U"))
    if any(s not in ("<=", ">=", "==") for s in X.senses):
        out.append(Violation("bad-sense", "X.constraints"))
    if out:
        return out

    for i in range(inst.U.d):
        if not np.any(inst.U.D[i]) and inst.U.d_rhs[i] < 0:
            out.append(Violation("U-degenerate-row", f"row {i}"))
    lo, hi = inst.U.box()
    if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
        out.append(Violation("U-empty", "polytope"))
    else:
        for j in np.nonzero(np.isinf(hi))[0]:
            out.append(Violation("U-unbounded", f"coordinate {j}"))

    if np.any(X.lb > X.ub):
        out.append(Violation("X-empty", "bounds"))
        return out
    for j in range(n):
        for sense in (Sense.MIN, Sense.MAX):
            mb = ModelBuilder()
            xi = X.add_to(mb)
            e = np.zeros(n)
            e[j] = 1.0
            mb.set_objective([(e, xi)], sense)
            model = mb.build()
            relaxed = solve_lp(_relax(model))
            if relaxed.status is Status.INFEASIBLE:
                out.append(Violation("X-empty", "relaxation"))
                return out
            if relaxed.status is Status.UNBOUNDED:
                out.append(Violation("X-unbounded", f"coordinate {j}"))
                break
    return out


def _relax(model):
    from .backend import LinearModel

    return LinearModel(model.obj, model.A, model.row_lo, model.row_hi, model.lb, model.ub,
                       np.zeros_like(model.integer), model.sense, model.offset, model.col_names)


def second_stage_model(inst: TwoStageInstance, x, u):
    mb = ModelBuilder()
    y = mb.add_vars(inst.m, name="y")
    mb.add_constraints([(inst.B, y)], ">=", inst.rhs(x, u))
    mb.set_objective([(inst.b, y)], Sense.MIN, offset=float(inst.a @ np.asarray(x, float)))
    return mb.build()


def second_stage_value(inst: TwoStageInstance, x, u) -> tuple[float, np.ndarray | None]:
    """``a.x + min {b.y : y in Y(x, u)}``; ``(inf, None)`` when Y(x, u) is empty."""
    out = solve_lp(second_stage_model(inst, x, u))
    if out.status is Status.OPTIMAL:
        return out.objective, out.x
    if out.status is Status.INFEASIBLE:
        return INF, None
    if out.status is Status.UNBOUNDED:
        return -INF, None
    raise BackendError(f"second-stage LP ended with status {out.status.value}")


@dataclass
class Scenario:
    u: np.ndarray
    origin: str
    vertex: bool


class ScenarioSet:
    """Ordered, duplicate-free collection of uncertainty realizations."""

    ORIGINS = ("initial", "optimality-cut", "feasibility-cut")

    def __init__(self, U: UncertaintyPolytope, tol: Tolerances = DEFAULT_TOL) -> None:
        self.U = U
        self.tol = tol
        self._items: list[Scenario] = []

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Scenario]:
        return iter(self._items)

    def __getitem__(self, i: int) -> Scenario:
        return self._items[i]

    @property
    def points(self) -> list[np.ndarray]:
        return [s.u for s in self._items]

    def find(self, u) -> int | None:
        u = np.asarray(u, float)
        for i, s in enumerate(self._items):
            if np.max(np.abs(s.u - u), initial=0.0) <= self.tol.dup:
                return i
        return None

    def add(self, u, origin: str = "optimality-cut") -> bool:
        """Append ``u``; returns False (and does nothing) for a duplicate."""
        if origin not in self.ORIGINS:
            raise ValueError(f"unknown scenario origin {origin!r}")
        u = np.asarray(u, float).copy()
        if not self.U.contains(u, self.tol.feas):
            raise ValueError("scenario lies outside the uncertainty set")
        if self.find(u) is not None:
            return False
        self._items.append(Scenario(u, origin, self.U.is_vertex(u, self.tol.vertex)))
        return True


def _interval_U(hi: float = 1.0) -> UncertaintyPolytope:
    return UncertaintyPolytope(D=[[1.0]], d_rhs=[hi])


def tiny1() -> TwoStageInstance:
    """Relatively complete recourse: x + y + u >= 1, optimum 1."""
    return TwoStageInstance(
        a=[1.0], b=[1.0], A=[[1.0]], B=[[1.0]], C=[[1.0]], c=[1.0],
        X=FirstStageSet(lb=[0.0], ub=[2.0], integer=[False]),
        U=_interval_U(),
        meta={"name": "TINY-1", "family": "tiny"},
    )


def tiny2() -> TwoStageInstance:
    """Feasibility-only fixture: rows x - y >= 0, y - u >= 0 with x binary; optimum 1.5 at x = 1."""
    return TwoStageInstance(
        a=[0.5], b=[1.0], A=[[1.0], [0.0]], B=[[-1.0], [1.0]], C=[[0.0], [-1.0]], c=[0.0, 0.0],
        X=FirstStageSet(lb=[0.0], ub=[1.0], integer=[True]),
        U=_interval_U(),
        meta={"name": "TINY-2", "family": "tiny"},
    )
