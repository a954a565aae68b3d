import numpy as np
import pytest
from scipy.optimize import linprog

from adaptro.model import FirstStageSet, TwoStageInstance, UncertaintyPolytope, tiny1, tiny2


def linprog_second_stage(inst, x, u):
    """Independent recourse value through scipy's linprog: a.x + min b.y, inf when infeasible."""
    rhs = inst.c - inst.A @ np.asarray(x, float) - inst.C @ np.asarray(u, float)
    res = linprog(inst.b, A_ub=-inst.B, b_ub=-rhs, bounds=[(0, None)] * inst.m, method="highs-ds")
    if res.status == 2:
        return np.inf
    assert res.status == 0, res.message
    return float(inst.a @ x + res.fun)


def tiny1_variant(rng):
    hi = rng.uniform(0.5, 2.0)
    return TwoStageInstance(
        a=[rng.uniform(0.2, 2.0)], b=[rng.uniform(0.2, 2.0)], A=[[1.0]], B=[[1.0]],
        C=[[rng.uniform(0.5, 1.5)]], c=[rng.uniform(0.5, 2.0)],
        X=FirstStageSet(lb=[0.0], ub=[3.0], integer=[False]),
        U=UncertaintyPolytope(D=[[1.0]], d_rhs=[hi]), meta={"family": "tiny1-variant"},
    )


def tiny2_variant(rng):
    hi = rng.uniform(0.5, 2.0)
    return TwoStageInstance(
        a=[rng.uniform(0.1, 1.0)], b=[rng.uniform(0.5, 2.0)], A=[[1.0], [0.0]], B=[[-1.0], [1.0]],
        C=[[0.0], [-1.0]], c=[0.0, 0.0],
        X=FirstStageSet(lb=[0.0], ub=[2.0], integer=[True]),
        U=UncertaintyPolytope(D=[[1.0]], d_rhs=[hi]), meta={"family": "tiny2-variant"},
    )


@pytest.fixture
def t1():
    return tiny1()


@pytest.fixture
def t2():
    return tiny2()


def random_pair(seed):
    """Random instance with complete recourse (a costly slack column) and a point of X."""
    rng = np.random.default_rng(seed)
    n, m, r, l = (int(v) for v in rng.integers(1, 4, 4))
    B = np.hstack([rng.uniform(-1, 1, (r, m)), np.ones((r, 1))])
    b = np.concatenate([rng.uniform(0.1, 2, m), [10.0]])
    U = UncertaintyPolytope(D=np.vstack([np.eye(l), np.ones((1, l))]),
                            d_rhs=np.concatenate([rng.uniform(0.5, 2, l), [rng.uniform(0.5, l)]]))
    inst = TwoStageInstance(a=rng.uniform(0, 1, n), b=b, A=rng.uniform(-1, 1, (r, n)), B=B,
                            C=rng.uniform(-1, 1, (r, l)), c=rng.uniform(-1, 1, r),
                            X=FirstStageSet(lb=np.zeros(n), ub=np.ones(n), integer=np.zeros(n, bool)), U=U,
                            meta={"family": "random", "seed": seed})
    return inst, rng.uniform(0, 1, n)
