import numpy as np
import pytest

from adaptro.backend import INF
from adaptro.bench import gen_lotsizing
from adaptro.master import MasterInfeasible, MasterProblem, eval_underZ, solve_master
from adaptro.model import FirstStageSet, ScenarioSet, TwoStageInstance, UncertaintyPolytope
from adaptro.reference import enumerate_vertices, exact_solve


def test_tiny1_single_scenario(t1):
    sol = solve_master(t1, [[1.0]])
    assert sol.x[0] == pytest.approx(0.0)
    assert sol.theta == pytest.approx(0.0) and sol.LB == pytest.approx(0.0)


def test_tiny1_both_vertices(t1):
    sol = solve_master(t1, [[1.0], [0.0]])
    assert sol.LB == pytest.approx(1.0)
    assert -1e-9 <= sol.x[0] <= 1.0 + 1e-9


def test_tiny2_both_vertices(t2):
    sol = solve_master(t2, [[0.0], [1.0]])
    assert sol.x[0] == 1.0 and sol.theta == pytest.approx(1.0) and sol.LB == pytest.approx(1.5)


def test_master_solution_satisfies_scenario_rows(t2):
    V = [[0.0], [1.0]]
    sol = solve_master(t2, V)
    for u, y in zip(V, sol.ys):
        assert np.all(t2.A @ sol.x + t2.B @ y + t2.C @ np.array(u) >= t2.c - 1e-7)
        assert t2.b @ y <= sol.theta + 1e-7


def test_master_infeasible_message():
    inst = TwoStageInstance(a=[1.0], b=[1.0], A=[[1.0], [0.0]], B=[[-1.0], [1.0]], C=[[0.0], [-1.0]],
                            c=[0.0, 0.0], X=FirstStageSet(lb=[0.0], ub=[0.5], integer=[False]),
                            U=UncertaintyPolytope(D=[[1.0]], d_rhs=[1.0]))
    with pytest.raises(MasterInfeasible, match="certified by scenario subset V"):
        solve_master(inst, [[1.0]])


@pytest.mark.parametrize("x,V,expected", [([0.0], [[0.0], [1.0]], 1.0), ([2.0], [[0.0]], 2.0)])
def test_eval_underZ_tiny1(t1, x, V, expected):
    assert eval_underZ(t1, x, V) == pytest.approx(expected)


def test_eval_underZ_infeasible(t2):
    assert eval_underZ(t2, [0.0], [[1.0]]) == INF


def test_eval_underZ_matches_monolithic():
    inst = gen_lotsizing(3, 2)
    V = enumerate_vertices(inst.U)[:4]
    x = np.full(3, 20.0)
    # monolithic: master with x pinned through its bounds
    from adaptro.model import FirstStageSet as FS

    pinned = TwoStageInstance(inst.a, inst.b, inst.A, inst.B, inst.C, inst.c,
                              FS(lb=x, ub=x, integer=np.zeros(3, bool)), inst.U)
    assert eval_underZ(inst, x, V, jobs=2) == pytest.approx(solve_master(pinned, V).LB, abs=1e-8)


def test_lower_bound_monotone_and_valid():
    inst = gen_lotsizing(2, 4)
    verts = enumerate_vertices(inst.U)
    _, opt = exact_solve(inst)
    mp = MasterProblem(inst)
    V = ScenarioSet(inst.U)
    prev = -INF
    for u in verts:
        V.add(u)
        mp.sync(V)
        lb = mp.solve().LB
        assert lb >= prev - 1e-9
        assert lb <= opt + 1e-7
        prev = lb
    assert prev == pytest.approx(opt, rel=1e-7)
