import itertools

import numpy as np
import pytest

from adaptro.bench import gen_location_transportation, gen_lotsizing
from adaptro.model import UncertaintyPolytope
from adaptro.reference import ReferenceTooLarge, enumerate_vertices, exact_solve, exact_worst_case


def _as_set(vs):
    return sorted(tuple(np.round(v, 8)) for v in vs)


def test_interval_vertices(t1):
    assert _as_set(enumerate_vertices(t1.U)) == [(0.0,), (1.0,)]


def test_simplex_vertices():
    U = UncertaintyPolytope(D=[[1.0, 1.0]], d_rhs=[1.0])
    assert _as_set(enumerate_vertices(U)) == [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]


def test_lotsizing_vertices_permutation_invariant():
    U = gen_lotsizing(3, 0).U
    base = _as_set(enumerate_vertices(U))
    for perm in itertools.permutations(range(U.d)):
        P = UncertaintyPolytope(D=U.D[list(perm)], d_rhs=U.d_rhs[list(perm)])
        assert _as_set(enumerate_vertices(P)) == base
    # 0, three unit corners, six corners cut by the budget row
    assert len(base) == 10


def test_vertices_checked_by_linear_objectives():
    U = gen_lotsizing(3, 0).U
    from scipy.optimize import linprog

    verts = np.array(enumerate_vertices(U))
    rng = np.random.default_rng(0)
    for _ in range(20):
        g = rng.standard_normal(3)
        res = linprog(-g, A_ub=U.D, b_ub=U.d_rhs, bounds=[(0, None)] * 3, method="highs")
        assert -res.fun == pytest.approx(np.max(verts @ g), abs=1e-7)


def test_cap():
    U = UncertaintyPolytope(D=np.ones((1, 30)), d_rhs=[1.0])
    with pytest.raises(ReferenceTooLarge, match="instance too large"):
        enumerate_vertices(U, cap=10)


def test_exact_worst_case_examples(t1, t2):
    v, u = exact_worst_case(t1, [0.0])
    assert v == pytest.approx(1.0) and u[0] == 0.0
    v, u = exact_worst_case(t2, [0.0])
    assert v == np.inf and u[0] == 1.0
    v, u = exact_worst_case(t2, [1.0])
    assert v == pytest.approx(1.5) and u[0] == 1.0


def test_exact_solve_examples(t1, t2):
    assert exact_solve(t1)[1] == pytest.approx(1.0)
    x, v = exact_solve(t2)
    assert x[0] == 1.0 and v == pytest.approx(1.5)


def test_exact_solve_loctran_self_consistent():
    inst = gen_location_transportation(2, 2, 0)
    x, v = exact_solve(inst)
    assert np.isfinite(v)
    assert exact_worst_case(inst, x)[0] == pytest.approx(v, rel=1e-8)
