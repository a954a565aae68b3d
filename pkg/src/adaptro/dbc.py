"""Exact feasibility oracle by dual basis cuts, and the standalone DBC solver.

Dualizing the recourse turns the adversary's decision into a dual vector
``w`` in ``W = {w >= 0 : B'w <= b}`` and the recourse into
``lambda(w) = argmin {d.lambda : C'w + D'lambda >= 0, lambda >= 0}``, which
does not depend on x.  ``lambda(w)`` is piecewise linear: each optimal
basis of the standard-form LP is optimal on a polyhedral cone of w.

The oracle keeps a tree of polyhedral cells of W, each with an affine
policy ``lambda = Z w + z``.  Cells are split along the sign pattern of the
basic variables of an optimal basis found at an interior point.  A "primary"
cell (index 0) is the whole region where that basis stays feasible; there
the basis gives the exact policy, so an unbounded primary cell proves that
x is infeasible.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adversary import AdversaryOutcome
from .am import adversary_step_lp
from .backend import INF, BackendError, ModelBuilder, Sense, Status, solve_lp, solve
from .config import DEFAULT_TOL, Tolerances
from .model import TwoStageInstance

log = logging.getLogger(__name__)


class DbcError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# dual data


@dataclass(frozen=True, eq=False)
class DualProblemData:
    inst: TwoStageInstance

    @property
    def E(self) -> np.ndarray:
        """Rows of W as ``E w <= f`` (nonnegativity is implicit)."""
        return self.inst.B.T

    @property
    def f(self) -> np.ndarray:
        return self.inst.b

    @property
    def D_std(self) -> np.ndarray:
        """Standard-form matrix ``[D', -I]``: ``D_std lam~ = -C'w`` with ``lam~ = (lambda, slack)``."""
        U = self.inst.U
        return np.hstack([U.D.T, -np.eye(U.l)])

    @property
    def d_std(self) -> np.ndarray:
        return np.concatenate([self.inst.U.d_rhs, np.zeros(self.inst.U.l)])


def _complete_basis(M: np.ndarray, basic: list[int]) -> list[int]:
    """Extend a set of independent columns of M to a square nonsingular basis."""
    l = M.shape[0]
    basis = list(basic)
    if len(basis) > l:
        raise DbcError("more basic columns than rows")
    # slack columns first: they are the natural degenerate completion
    order = list(range(M.shape[1] - 1, -1, -1))
    for j in order:
        if len(basis) == l:
            break
        if j in basis:
            continue
        if np.linalg.matrix_rank(M[:, basis + [j]]) == len(basis) + 1:
            basis.append(j)
    if len(basis) < l:
        raise DbcError("could not complete the basis")
    return sorted(basis)


def lambda_lp(dual: DualProblemData, w) -> tuple[np.ndarray, tuple[int, ...]]:
    """Optimal recourse multipliers for fixed w, with the optimal basis.

    Returns ``(lambda, I)`` where ``I`` indexes columns of ``[D', -I]``
    (indices below ``d`` are lambda components, the rest are slacks).
    """
    w = np.asarray(w, float)
    M = dual.D_std
    d = dual.inst.U.d
    rhs = -(dual.inst.C.T @ w)
    mb = ModelBuilder()
    lt = mb.add_vars(M.shape[1], name="lam")
    mb.add_constraints([(M, lt)], "==", rhs)
    mb.set_objective([(dual.d_std, lt)], Sense.MIN)
    out = solve_lp(mb.build())
    if out.status is Status.INFEASIBLE:
        raise DbcError("recourse multiplier LP infeasible; the uncertainty set is empty")
    if out.status is not Status.OPTIMAL:
        raise DbcError(f"recourse multiplier LP ended with status {out.status.value}")
    basic = [j for j, s in enumerate(out.col_basis) if s == "basic"]
    if np.linalg.matrix_rank(M[:, basic]) < len(basic):
        raise DbcError("backend basis is singular")
    I = _complete_basis(M, basic)
    lam_I = np.linalg.solve(M[:, I], rhs)
    lam = np.zeros(M.shape[1])
    lam[I] = lam_I
    return lam[:d].copy(), tuple(I)


def basis_map(dual: DualProblemData, I) -> np.ndarray:
    """``-D_std[:, I]^{-1} C'``: maps w to the basic variable values."""
    M = dual.D_std[:, list(I)]
    return -np.linalg.solve(M, dual.inst.C.T)


def basis_policy(dual: DualProblemData, I) -> np.ndarray:
    """Exact linear policy ``lambda = Z w`` on the region where basis I is feasible."""
    Bt = basis_map(dual, I)
    d = dual.inst.U.d
    Z = np.zeros((d, dual.inst.r))
    for k, j in enumerate(I):
        if j < d:
            Z[j] = Bt[k]
    return Z


# ---------------------------------------------------------------------------
# tree


@dataclass
class PartitionNode:
    id: int
    E: np.ndarray
    f: np.ndarray
    ell: int
    parent: int | None
    children: list[int] = field(default_factory=list)
    basis: tuple[int, ...] | None = None  # basis this node was split with
    source_basis: tuple[int, ...] | None = None  # basis whose exact policy a primary cell carries
    Z: np.ndarray | None = None
    z: np.ndarray | None = None
    tau: float = math.nan
    covered: bool = False  # contained in the primary cell of its own splitting basis
    stuck: bool = False

    @property
    def is_leaf(self) -> bool:
        return not self.children and not self.covered

    def lineage_bases(self, tree: "PartitionTree") -> list[tuple[int, ...]]:
        out, p = [], self.parent
        while p is not None:
            node = tree.nodes[p]
            if node.basis is not None:
                out.append(node.basis)
            p = node.parent
        return out


class PartitionTree:
    """Cells of W.  ``literal_sign`` flips the split direction so that the
    primary cell is ``{D_I^{-1} C'w >= 0}`` instead of ``{lambda_I(w) >= 0}``;
    it exists for comparison only, since that cell need not contain the
    point the basis was computed at.
    """

    def __init__(self, dual: DualProblemData, literal_sign: bool = False) -> None:
        self.dual = dual
        self.literal_sign = literal_sign
        root = PartitionNode(id=1, E=dual.E.copy(), f=dual.f.copy(), ell=-1, parent=None)
        self.nodes: dict[int, PartitionNode] = {1: root}
        self._primary_by_basis: dict[tuple[int, ...], int] = {}
        self._next = 2

    @property
    def root(self) -> PartitionNode:
        return self.nodes[1]

    def leaves(self) -> list[PartitionNode]:
        return [n for n in self.nodes.values() if n.is_leaf]

    def add(self, E, f, ell, parent, source_basis=None, Z=None, z=None) -> PartitionNode:
        node = PartitionNode(id=self._next, E=E, f=f, ell=ell, parent=parent, source_basis=source_basis, Z=Z, z=z)
        self.nodes[node.id] = node
        self.nodes[parent].children.append(node.id)
        self._next += 1
        return node

    def dump(self) -> str:
        lines = ["id\tell\tparent\tbasis\ttau\tchildren"]
        for n in self.nodes.values():
            b = n.basis if n.basis is not None else n.source_basis
            lines.append(f"{n.id}\t{n.ell}\t{n.parent if n.parent is not None else '-'}\t"
                         f"{'-' if b is None else ','.join(map(str, b))}\t{n.tau}\t"
                         f"{','.join(map(str, n.children)) or '-'}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> list[dict]:
        return [{"id": n.id, "ell": n.ell, "parent": n.parent,
                 "basis": None if n.basis is None else list(n.basis),
                 "source_basis": None if n.source_basis is None else list(n.source_basis),
                 "tau": None if not math.isfinite(n.tau) else n.tau,
                 "children": list(n.children), "covered": n.covered}
                for n in self.nodes.values()]


# ---------------------------------------------------------------------------
# robust counterparts


def robust_counterpart(mb: ModelBuilder, E, f, g0, G_terms=(), h0: float = 0.0, h_terms=()) -> np.ndarray:
    """Add ``g(t).w <= h(t) for all w in {w >= 0, E w <= f}`` to ``mb``.

    ``g(t) = g0 + sum G_k t[idx_k]`` and ``h(t) = h0 + sum h_k . t[idx_k]``.
    By LP duality this holds iff some ``mu >= 0`` has ``E'mu >= g(t)`` and
    ``f.mu <= h(t)``.  Returns the indices of the multipliers ``mu``.
    """
    E = np.atleast_2d(np.asarray(E, float))
    f = np.asarray(f, float)
    mu = mb.add_vars(E.shape[0], name="mu")
    # E'mu - G t >= g0
    mb.add_constraints([(E.T, mu)] + [(-np.atleast_2d(G), idx) for G, idx in G_terms], ">=", g0)
    # f.mu - h_k t <= h0
    mb.add_constraints([(f[None, :], mu)] + [(-np.asarray(hk, float)[None, :], idx) for hk, idx in h_terms],
                       "<=", h0)
    return mu


def counterpart_feasible(g, h: float, E, f) -> bool:
    """Does ``g.w <= h`` hold on the whole region ``{w >= 0, E w <= f}``?"""
    mb = ModelBuilder()
    robust_counterpart(mb, E, f, np.asarray(g, float), h0=h)
    mb.set_objective([], Sense.MIN)
    return solve_lp(mb.build()).status is Status.OPTIMAL


def _policy_counterparts(mb, inst, E, f, tau, x_fixed=None, x_idx=None, Z_fixed=None, z_fixed=None):
    """Robust constraints of one cell; returns the (Z, z) indices, or None for a fixed policy.

    The objective row is ``(c - A x + Z'd).w <= tau - a.x - d.z``.  A free
    policy is kept feasible on the cell by ``C'w + D'(Z w + z) >= 0`` and
    ``Z w + z >= 0``.  ``x`` is either a fixed vector or a block of
    variables ``x_idx``.
    """
    r, d = inst.r, inst.U.d
    D, dvec, C = inst.U.D, inst.U.d_rhs, inst.C
    G_x = [] if x_idx is None else [(-inst.A, x_idx)]
    h_x = [] if x_idx is None else [(-inst.a, x_idx)]
    g0 = inst.c.copy()
    h0 = 0.0
    if x_fixed is not None:
        g0 = g0 - inst.A @ x_fixed
        h0 = -float(inst.a @ x_fixed)
    if Z_fixed is not None:
        g0 = g0 + Z_fixed.T @ dvec
        h0 -= float(dvec @ z_fixed)
        robust_counterpart(mb, E, f, g0, G_x, h0, [(np.ones(1), [tau])] + h_x)
        return None
    Zi = mb.add_vars(d * r, lb=-INF, name="Z").reshape(d, r)
    zi = mb.add_vars(d, lb=-INF, name="z")
    flatZ = Zi.reshape(-1)
    # (Z'd)_j = sum_i d_i Z_ij
    G_obj = np.zeros((r, d * r))
    for i in range(d):
        G_obj[np.arange(r), i * r + np.arange(r)] = dvec[i]
    robust_counterpart(mb, E, f, g0, [(G_obj, flatZ)] + G_x, h0,
                       [(np.ones(1), [tau]), (-dvec, zi)] + h_x)
    for i in range(inst.U.l):
        # -(C'_i + sum_k D_ki Z_k).w <= sum_k D_ki z_k
        G = np.zeros((r, d * r))
        for k in range(d):
            G[np.arange(r), k * r + np.arange(r)] = -D[k, i]
        robust_counterpart(mb, E, f, -C[:, i], [(G, flatZ)], 0.0, [(D[:, i], zi)])
    for k in range(d):
        # -Z_k.w <= z_k
        G = np.zeros((r, d * r))
        G[np.arange(r), k * r + np.arange(r)] = -1.0
        e = np.zeros(d)
        e[k] = 1.0
        robust_counterpart(mb, E, f, np.zeros(r), [(G, flatZ)], 0.0, [(e, zi)])
    return Zi, zi


def partition_lp(inst: TwoStageInstance, x, node: PartitionNode) -> tuple[float, np.ndarray | None, np.ndarray | None]:
    """Best affine policy on one cell: ``(tau, Z, z)``, with ``tau = inf`` if none is bounded.

    Primary cells use their exact basis policy, which is optimal pointwise,
    so only the worst-case value has to be computed.
    """
    x = np.asarray(x, float)
    if node.ell == 0:
        tau = cell_sup(inst, x, node)
        return tau, node.Z, node.z
    mb = ModelBuilder()
    tau = mb.add_vars(1, lb=-INF, name="tau")[0]
    Zi, zi = _policy_counterparts(mb, inst, node.E, node.f, tau, x_fixed=x)
    mb.set_objective([(np.ones(1), [tau])], Sense.MIN)
    out = solve_lp(mb.build())
    if out.status is Status.INFEASIBLE:
        return INF, None, None
    if out.status is not Status.OPTIMAL:
        raise BackendError(f"cell LP ended with status {out.status.value}")
    return float(out.objective), out.x[Zi], out.x[zi]


def _cell_objective(inst, x, Z, z) -> tuple[np.ndarray, float]:
    dvec = inst.U.d_rhs
    g = inst.c - inst.A @ x + Z.T @ dvec
    return g, float(inst.a @ x + dvec @ z)


def cell_sup(inst: TwoStageInstance, x, node: PartitionNode, Z=None, z=None) -> float:
    """``a.x + max (c - A x).w + d.(Z w + z)`` over the cell."""
    Z = node.Z if Z is None else Z
    z = node.z if z is None else z
    g, const = _cell_objective(inst, x, Z, z)
    mb = ModelBuilder()
    w = mb.add_vars(inst.r)
    mb.add_constraints([(node.E, w)], "<=", node.f)
    mb.set_objective([(g, w)], Sense.MAX)
    out = solve_lp(mb.build())
    if out.status is Status.UNBOUNDED:
        return INF
    if out.status is not Status.OPTIMAL:
        raise BackendError(f"cell maximization ended with status {out.status.value}")
    return float(out.objective) + const


def cell_argmax(inst, x, node: PartitionNode, Z, z) -> np.ndarray | None:
    g, _ = _cell_objective(inst, x, Z, z)
    mb = ModelBuilder()
    w = mb.add_vars(inst.r)
    mb.add_constraints([(node.E, w)], "<=", node.f)
    mb.set_objective([(g, w)], Sense.MAX)
    out = solve_lp(mb.build())
    return out.x[w] if out.status is Status.OPTIMAL else None


def interior_point(E, f, box: float | None = None, tol: float = DEFAULT_TOL.feas) -> np.ndarray | None:
    """Chebyshev center of ``{w >= 0, E w <= f, w <= R}``; None when the interior is empty.

    The artificial box ``w <= R`` keeps the LP bounded on unbounded cells.
    """
    E = np.atleast_2d(np.asarray(E, float))
    f = np.asarray(f, float)
    r = E.shape[1]
    R = box if box is not None else 100.0 * max(1.0, float(np.max(np.abs(f), initial=0.0)))
    norms = np.linalg.norm(E, axis=1)
    mb = ModelBuilder()
    w = mb.add_vars(r, name="w")
    rho = mb.add_vars(1, name="rho")
    if E.shape[0]:
        mb.add_constraints([(E, w), (norms[:, None], rho)], "<=", f)
    mb.add_constraints([(-np.eye(r), w), (np.ones((r, 1)), rho)], "<=", 0.0)
    mb.add_constraints([(np.eye(r), w), (np.ones((r, 1)), rho)], "<=", R)
    mb.set_objective([(np.ones(1), rho)], Sense.MAX)
    out = solve_lp(mb.build())
    if out.status is not Status.OPTIMAL or out.objective <= tol:
        return None
    return out.x[w]


# ---------------------------------------------------------------------------
# splitting


@dataclass
class Expansion:
    new_ids: list[int]
    primary_id: int | None
    covered: bool
    stuck: bool


def expand_partition(tree: PartitionTree, node: PartitionNode, basis, tol: Tolerances = DEFAULT_TOL) -> Expansion:
    """Split ``node`` along the sign pattern of basis ``basis``.

    The primary cell ``W ∩ {Bt w >= 0}`` hangs off the root; the secondary
    cells ``W^p ∩ {Bt_i w >= 0, i < j, Bt_j w <= 0}`` become children of
    ``node``.  Cells without interior are skipped.  A primary cell already
    produced by the same basis elsewhere is reused rather than duplicated.
    """
    if node.ell == 0:
        raise ValueError("primary cells are never split")
    dual = tree.dual
    basis = tuple(int(i) for i in basis)
    Bt_full = basis_map(dual, basis)
    if tree.literal_sign:
        Bt_full = -Bt_full
    scale = max(1.0, float(np.max(np.abs(Bt_full), initial=0.0)))
    keep = np.linalg.norm(Bt_full, axis=1) > 1e-12 * scale
    Bt = Bt_full[keep]
    node.basis = basis
    new_ids: list[int] = []
    root = tree.root

    primary_id = tree._primary_by_basis.get(basis)
    if primary_id is None:
        E0 = np.vstack([root.E, -Bt]) if Bt.size else root.E.copy()
        f0 = np.concatenate([root.f, np.zeros(Bt.shape[0])])
        if interior_point(E0, f0, tol=tol.feas) is not None:
            child = tree.add(E0, f0, 0, root.id, source_basis=basis, Z=basis_policy(dual, basis),
                             z=np.zeros(dual.inst.U.d))
            tree._primary_by_basis[basis] = child.id
            primary_id = child.id
            new_ids.append(child.id)

    n_secondary = 0
    for j in range(Bt.shape[0]):
        Ej = np.vstack([node.E, -Bt[:j], Bt[j:j + 1]])
        fj = np.concatenate([node.f, np.zeros(j + 1)])
        if interior_point(Ej, fj, tol=tol.feas) is None:
            continue
        child = tree.add(Ej, fj, j + 1, node.id)
        new_ids.append(child.id)
        n_secondary += 1

    covered = n_secondary == 0 and primary_id is not None
    if covered:
        node.covered = True
    stuck = n_secondary == 0 and primary_id is None
    if stuck:
        node.stuck = True
    return Expansion(new_ids, primary_id, covered, stuck)


def unbounded_ray(inst: TwoStageInstance, x, node: PartitionNode, tol: Tolerances = DEFAULT_TOL):
    """Improving ray of an unbounded primary cell and the vertex of U it points to."""
    if node.ell != 0:
        raise ValueError("unbounded rays are only extracted from primary cells")
    x = np.asarray(x, float)
    g, _ = _cell_objective(inst, x, node.Z, node.z)
    mb = ModelBuilder()
    w = mb.add_vars(inst.r, ub=1.0)
    mb.add_constraints([(node.E, w)], "<=", 0.0)
    mb.set_objective([(g, w)], Sense.MAX)
    out = solve_lp(mb.build())
    if out.status is not Status.OPTIMAL or out.objective <= tol.pos:
        raise DbcError(
            f"primary cell {node.id} reported unbounded but the ray problem has value "
            f"{out.objective if out.status is Status.OPTIMAL else out.status.value}; "
            f"ell={node.ell} basis={node.basis}"
        )
    w_ray = np.clip(out.x[w], 0.0, 1.0)
    return w_ray, float(out.objective), adversary_step_lp(inst, x, w_ray, tol=tol)


# ---------------------------------------------------------------------------
# oracle


@dataclass
class F2Result:
    verdict: str  # "feasible" | "infeasible" | "inconclusive"
    tau_star: float
    u: np.ndarray | None
    tree: PartitionTree
    iterations: int
    reason: str = ""


def _evaluate_leaves(inst, x, leaves, cache, jobs):
    todo = [n for n in leaves if n.id not in cache]

    def run(n):
        return n.id, partition_lp(inst, x, n)

    if jobs > 1 and len(todo) > 1:
        with ThreadPoolExecutor(jobs) as ex:
            results = list(ex.map(run, todo))
    else:
        results = [run(n) for n in todo]
    for nid, res in results:
        cache[nid] = res
    for n in leaves:
        n.tau = cache[n.id][0]


def run_f2(inst: TwoStageInstance, x, tree: PartitionTree | None = None, tol: Tolerances = DEFAULT_TOL,
           max_iter: int = 10_000, time_limit: float | None = None, jobs: int = 1) -> F2Result:
    x = np.asarray(x, float)
    tree = tree or PartitionTree(DualProblemData(inst))
    cache: dict[int, tuple] = {}
    t0 = time.perf_counter()
    for it in range(1, max_iter + 1):
        leaves = tree.leaves()
        _evaluate_leaves(inst, x, leaves, cache, jobs)
        tau_star = max(n.tau for n in leaves)
        if tau_star < INF:
            return F2Result("feasible", tau_star, None, tree, it)
        active = [n for n in leaves if n.tau == INF]
        primaries = [n for n in active if n.ell == 0]
        if primaries:
            _, _, u_bar = unbounded_ray(inst, x, primaries[0], tol)
            return F2Result("infeasible", INF, u_bar, tree, it)
        progressed = False
        for node in active:
            if node.stuck:
                continue
            w = interior_point(node.E, node.f, tol=tol.feas)
            if w is None:
                node.stuck = True
                continue
            _, I = lambda_lp(tree.dual, w)
            if I in node.lineage_bases(tree):
                # numerically the interior point sat on an ancestor's boundary
                node.stuck = True
                continue
            exp = expand_partition(tree, node, I, tol)
            progressed = progressed or bool(exp.new_ids) or exp.covered
        if not progressed:
            return F2Result("inconclusive", INF, None, tree, it, reason="cannot partition further")
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            return F2Result("inconclusive", INF, None, tree, it, reason="time limit")
    return F2Result("inconclusive", INF, None, tree, max_iter, reason="iteration limit")


def f2_oracle(inst: TwoStageInstance, x, u_tilde, tol: Tolerances = DEFAULT_TOL,
              tree: PartitionTree | None = None, max_iter: int = 10_000,
              time_limit: float | None = None, jobs: int = 1) -> AdversaryOutcome:
    """Decide robust feasibility of x exactly.

    Feasible: ``value`` is the partition upper bound and ``u_star`` is
    ``u_tilde``.  Infeasible: ``value = inf`` and ``u_star`` is a vertex of U
    with an empty recourse set.  Inconclusive when the tree cannot be
    refined further.
    """
    res = run_f2(inst, x, tree, tol, max_iter, time_limit, jobs)
    info = {"tree": res.tree, "iterations": res.iterations, "reason": res.reason}
    if res.verdict == "infeasible":
        u = res.u
        return AdversaryOutcome(value=INF, u_star=u, w_star=None, vertex_of_U=inst.U.is_vertex(u, tol.vertex),
                                kind="DualBasisCuts", verdict="infeasible", info=info)
    u = np.asarray(u_tilde, float)
    return AdversaryOutcome(value=res.tau_star, u_star=u, w_star=None,
                            vertex_of_U=inst.U.is_vertex(u, tol.vertex), kind="DualBasisCuts",
                            verdict=res.verdict, info=info)


# ---------------------------------------------------------------------------
# standalone solver


@dataclass
class _JointResult:
    status: Status
    x: np.ndarray | None = None
    value: float = math.nan
    policies: dict | None = None


def _joint_problem(inst: TwoStageInstance, leaves, tol: Tolerances, time_limit=None) -> _JointResult:
    """``min a.x + tau`` jointly over x in X and one policy per cell (fixed on primary cells)."""
    mb = ModelBuilder()
    x_idx = inst.X.add_to(mb)
    tau = mb.add_vars(1, lb=-INF, name="tau")[0]
    free = {}
    for n in leaves:
        if n.ell == 0:
            _policy_counterparts(mb, inst, n.E, n.f, tau, x_idx=x_idx, Z_fixed=n.Z, z_fixed=n.z)
        else:
            free[n.id] = _policy_counterparts(mb, inst, n.E, n.f, tau, x_idx=x_idx)
    mb.set_objective([(np.ones(1), [tau])], Sense.MIN)
    out = solve(mb.build(), tol, time_limit)
    if out.status is not Status.OPTIMAL:
        return _JointResult(out.status)
    x = out.x[x_idx].copy()
    x[inst.X.integer] = np.round(x[inst.X.integer])
    pol = {nid: (out.x[Zi], out.x[zi]) for nid, (Zi, zi) in free.items()}
    return _JointResult(Status.OPTIMAL, x, float(out.objective), pol)


def _split_basis(tree: PartitionTree, inst, x, node, Z, z, tol):
    """Basis to split ``node`` with: at the cell's worst-case point, else at an interior point."""
    lineage = node.lineage_bases(tree)
    candidates = []
    if Z is not None:
        w = cell_argmax(inst, x, node, Z, z)
        if w is not None:
            candidates.append(w)
    candidates.append(None)
    for w in candidates:
        if w is None:
            w = interior_point(node.E, node.f, tol=tol.feas)
            if w is None:
                return None
            _, I = lambda_lp(tree.dual, w)
            return None if I in lineage else I
        _, I = lambda_lp(tree.dual, w)
        if I in lineage:
            continue
        if I not in tree._primary_by_basis:
            Bt = basis_map(tree.dual, I)
            E0 = np.vstack([tree.root.E, -Bt])
            f0 = np.concatenate([tree.root.f, np.zeros(Bt.shape[0])])
            if interior_point(E0, f0, tol=tol.feas) is None:
                continue
        return I
    return None


def dbc_solve(inst: TwoStageInstance, epsilon: float = 1e-3, tol: Tolerances = DEFAULT_TOL,
              max_iter: int = 500, time_limit: float = 1000.0, tree: PartitionTree | None = None):
    """Solve the whole problem by refining the partition of W; returns ``(x, value, report)``.

    Upper bound: best piecewise-affine policy over the current cells.
    Lower bound: the same problem over the primary cells only, where the
    policy is exact on a subset of W.
    """
    from .report import RunReport, Termination, ul_gap

    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    t0 = time.perf_counter()
    tree = tree or PartitionTree(DualProblemData(inst))
    rep = RunReport(algorithm="dbc", epsilon=epsilon)
    LB, UB, x_best = -INF, INF, None
    for k in range(1, max_iter + 1):
        remaining = time_limit - (time.perf_counter() - t0)
        leaves = tree.leaves()
        ub = _joint_problem(inst, leaves, tol, remaining)
        primaries = [n for n in leaves if n.ell == 0]
        if primaries:
            lb = _joint_problem(inst, primaries, tol, remaining)
            if lb.status is Status.INFEASIBLE:
                rep.termination = Termination.INFEASIBLE
                rep.message = "no first-stage decision is feasible on the exact cells"
                break
            if lb.status is Status.OPTIMAL:
                LB = max(LB, lb.value)
        else:
            lb = _JointResult(Status.UNBOUNDED)
        if ub.status is Status.LIMIT or lb.status is Status.LIMIT:
            rep.termination = Termination.TIME_LIMIT
            break
        if ub.status is Status.OPTIMAL and ub.value < UB:
            UB, x_best = ub.value, ub.x
        LB = min(LB, UB)
        rep.LB, rep.UB = LB, UB
        rep.record(k, LB, UB, t=time.perf_counter() - t0)
        if ul_gap(LB, UB) <= epsilon:
            rep.termination = Termination.CONVERGED
            break
        # choose cells to split
        if ub.status is Status.OPTIMAL:
            x = ub.x
            taus = {}
            for n in leaves:
                if n.ell == 0:
                    continue
                Z, z = ub.policies[n.id]
                taus[n.id] = cell_sup(inst, x, n, Z, z)
            top = max(taus.values(), default=-INF)
            active = [n for n in leaves if n.id in taus and taus[n.id] >= top - 1e-7 * (1.0 + abs(top))]
            rest = [n for n in leaves if n.id in taus and n not in active]
        else:
            x = lb.x if lb.status is Status.OPTIMAL else None
            active = [n for n in leaves if n.ell != 0]
            rest = []
        progressed = False
        for group in (active, rest):
            for n in group:
                if n.stuck:
                    continue
                Z, z = (ub.policies[n.id] if ub.status is Status.OPTIMAL else (None, None))
                I = _split_basis(tree, inst, x, n, Z, z, tol) if x is not None or Z is None else None
                if I is None:
                    n.stuck = True
                    continue
                exp = expand_partition(tree, n, I, tol)
                progressed = progressed or bool(exp.new_ids) or exp.covered
            if progressed:
                break
        if not progressed:
            rep.termination = Termination.INCONCLUSIVE
            rep.message = "cannot partition further"
            break
        if time.perf_counter() - t0 > time_limit:
            rep.termination = Termination.TIME_LIMIT
            break
    else:
        rep.termination = Termination.ITER_LIMIT
    rep.x = x_best
    rep.value = UB
    rep.LB, rep.UB = LB, UB
    rep.wall_time = time.perf_counter() - t0
    rep.outer_iterations = len(rep.iterations)
    return x_best, UB, rep
