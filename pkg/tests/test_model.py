import numpy as np
import pytest

from adaptro.model import (
    FirstStageSet, ScenarioSet, TwoStageInstance, UncertaintyPolytope, second_stage_value,
    validate_instance,
)

from .conftest import linprog_second_stage


def test_fixtures_are_valid(t1, t2):
    assert validate_instance(t1) == []
    assert validate_instance(t2) == []


def test_unbounded_uncertainty_reported(t1):
    bad = TwoStageInstance(t1.a, t1.b, t1.A, t1.B, t1.C, t1.c, t1.X,
                           UncertaintyPolytope(D=np.zeros((0, 1)), d_rhs=np.zeros(0)))
    assert [str(v) for v in validate_instance(bad)] == ["U-unbounded: coordinate 0"]


def test_dimension_mismatch_named(t1):
    bad = TwoStageInstance(t1.a, t1.b, t1.A, t1.B, np.ones((2, 1)), t1.c, t1.X, t1.U)
    assert [str(v) for v in validate_instance(bad)] == ["dimension-mismatch: C"]


def test_empty_uncertainty_set(t1):
    bad = TwoStageInstance(t1.a, t1.b, t1.A, t1.B, t1.C, t1.c, t1.X,
                           UncertaintyPolytope(D=[[1.0]], d_rhs=[-1.0]))
    kinds = {v.kind for v in validate_instance(bad)}
    assert "U-empty" in kinds


def test_empty_first_stage_set(t1):
    X = FirstStageSet(lb=[0.0], ub=[2.0], integer=[False], G=[[1.0]], h=[-1.0])
    bad = TwoStageInstance(t1.a, t1.b, t1.A, t1.B, t1.C, t1.c, X, t1.U)
    assert "X-empty" in {v.kind for v in validate_instance(bad)}


@pytest.mark.parametrize("x,u,expected", [(0, 0, 1.0), (0, 1, 0.0)])
def test_second_stage_value_tiny1(t1, x, u, expected):
    v, y = second_stage_value(t1, [x], [u])
    assert v == pytest.approx(expected)
    assert v == pytest.approx(linprog_second_stage(t1, [x], [u]))


def test_second_stage_tiny1_recourse(t1):
    _, y = second_stage_value(t1, [0.0], [0.0])
    assert y[0] == pytest.approx(1.0)


def test_second_stage_infeasible_tiny2(t2):
    v, y = second_stage_value(t2, [0.0], [0.5])
    assert v == np.inf and y is None
    assert linprog_second_stage(t2, [0.0], [0.5]) == np.inf


def test_scenario_set_dedup_and_membership(t1):
    V = ScenarioSet(t1.U)
    assert V.add([0.0], "initial")
    assert not V.add([1e-10], "optimality-cut")
    assert V.add([1.0], "feasibility-cut")
    assert len(V) == 2 and all(s.vertex for s in V)
    assert not V.add([0.5 + 1e-12], "optimality-cut") or not V[-1].vertex
    with pytest.raises(ValueError):
        V.add([2.0])
    with pytest.raises(ValueError):
        V.add([0.3], "bogus")


def test_polytope_box():
    U = UncertaintyPolytope(D=[[1.0, 1.0]], d_rhs=[1.0])
    lo, hi = U.box()
    assert np.allclose(lo, 0) and np.allclose(hi, 1)
    assert U.is_vertex([1.0, 0.0]) and not U.is_vertex([0.5, 0.5])
