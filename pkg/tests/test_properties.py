"""Randomized properties checked against the brute-force reference."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from adaptro.adversary import solve_tildeZ
from adaptro.am import f1_oracle
from adaptro.bench import gen_capacity_linked, gen_lotsizing
from adaptro.dbc import f2_oracle
from adaptro.model import UncertaintyPolytope, second_stage_value
from adaptro.reference import enumerate_vertices, exact_worst_case
from adaptro.report import ul_gap
from adaptro.serialize import instance_from_dict, instance_to_dict

from .conftest import linprog_second_stage, random_pair

SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(finite, finite)
def test_ul_gap_nonnegative_and_symmetric_scale(a, b):
    LB, UB = min(a, b), max(a, b)
    g = ul_gap(LB, UB)
    assert g >= 0
    assert g == pytest.approx((UB - LB) / max(min(abs(LB), abs(UB)), 1.0))


def small_instances():
    return st.integers(0, 10_000).map(random_pair)


@SETTINGS
@given(small_instances())
def test_recourse_value_matches_scipy(pair):
    inst, x = pair
    for u in enumerate_vertices(inst.U):
        ours = second_stage_value(inst, x, u)[0]
        assert ours == pytest.approx(linprog_second_stage(inst, x, u), rel=1e-7, abs=1e-7)


@SETTINGS
@given(small_instances())
def test_tildeZ_equals_vertex_enumeration(pair):
    inst, x = pair
    ref, _ = exact_worst_case(inst, x)
    out = solve_tildeZ(inst, x)
    assert out.value == pytest.approx(ref, rel=1e-6, abs=1e-6)


@SETTINGS
@given(small_instances())
def test_f1_never_exceeds_true_worst_case(pair):
    inst, x = pair
    ref, _ = exact_worst_case(inst, x)
    out = f1_oracle(inst, x, np.zeros(inst.l))
    assert out.value <= ref + 1e-7 * max(1.0, abs(ref))
    assert out.vertex_of_U
    f = out.info["trace"].f
    assert all(b >= a - 1e-9 for a, b in zip(f, f[1:]))


@SETTINGS
@given(small_instances())
def test_f2_agrees_with_reference(pair):
    inst, x = pair
    ref, _ = exact_worst_case(inst, x)
    out = f2_oracle(inst, x, np.zeros(inst.l))
    assert out.verdict == "feasible"
    assert out.value >= ref - 1e-6 * max(1.0, abs(ref))


@SETTINGS
@given(st.integers(2, 4), st.integers(0, 500), st.lists(st.integers(0, 1), min_size=4, max_size=4))
def test_f2_verdicts_on_capacity_linked(N, seed, bits):
    inst = gen_capacity_linked(N, seed)
    x = np.array(bits[:N], float)
    ref, _ = exact_worst_case(inst, x)
    out = f2_oracle(inst, x, np.zeros(N))
    if ref == math.inf:
        assert out.verdict == "infeasible"
        assert second_stage_value(inst, x, out.u_star)[0] == math.inf
    else:
        assert out.verdict == "feasible"


@SETTINGS
@given(st.integers(2, 5), st.integers(0, 2**31))
def test_serialization_round_trip(N, seed):
    inst = gen_lotsizing(N, seed)
    back = instance_from_dict(instance_to_dict(inst))
    assert instance_to_dict(back) == instance_to_dict(inst)
    assert back.C.tobytes() == inst.C.tobytes()


@SETTINGS
@given(st.integers(1, 4), st.integers(0, 1000))
def test_vertices_are_vertices(l, seed):
    rng = np.random.default_rng(seed)
    U = UncertaintyPolytope(D=np.vstack([rng.uniform(0.2, 1.0, (2, l))]), d_rhs=rng.uniform(0.5, 2.0, 2))
    V = enumerate_vertices(U)
    assert all(U.is_vertex(v) for v in V)
    assert any(np.all(v == 0) for v in V)
