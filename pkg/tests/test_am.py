import numpy as np
import pytest

from adaptro.am import adversary_step_lp, f1_oracle, recession_certificate_lp, run_am
from adaptro.bench import gen_capacity_linked
from adaptro.model import second_stage_value


def test_certificate_tiny2_infeasible(t2):
    w, v = recession_certificate_lp(t2, [0.0], [1.0])
    assert v == pytest.approx(1.0) and np.allclose(w, [1.0, 1.0])


def test_certificate_tiny2_feasible(t2):
    assert recession_certificate_lp(t2, [1.0], [1.0])[1] == pytest.approx(0.0, abs=1e-12)


def test_certificate_tiny1_zero(t1):
    w, v = recession_certificate_lp(t1, [0.0], [0.0])
    assert v == pytest.approx(0.0, abs=1e-12) and np.allclose(w, 0.0)


def test_adversary_step_examples(t1, t2):
    assert adversary_step_lp(t2, [0.0], [1.0, 1.0])[0] == pytest.approx(1.0)
    assert adversary_step_lp(t1, [0.0], [1.0])[0] == pytest.approx(0.0)


def test_adversary_step_keeps_previous_vertex_under_ties(t1):
    assert adversary_step_lp(t1, [0.0], [0.0], prev_u=[1.0])[0] == 1.0
    assert adversary_step_lp(t1, [0.0], [0.0], prev_u=[0.0])[0] == 0.0


def test_f1_tiny2_certifies(t2):
    out = f1_oracle(t2, [0.0], [0.0])
    assert out.value == np.inf and out.u_star[0] == pytest.approx(1.0)
    assert out.verdict == "infeasible" and out.vertex_of_U
    assert second_stage_value(t2, [0.0], out.u_star)[0] == np.inf


def test_f1_tiny2_feasible(t2):
    out = f1_oracle(t2, [1.0], [1.0])
    assert out.value == pytest.approx(1.5) and out.u_star[0] == pytest.approx(1.0)
    assert out.verdict is None


def test_f1_tiny1_cannot_certify(t1):
    out = f1_oracle(t1, [0.0], [0.0])
    assert out.value == pytest.approx(1.0) and out.u_star[0] == pytest.approx(0.0)


def test_trace_monotone_and_vertex_final():
    for seed in range(6):
        inst = gen_capacity_linked(3, seed)
        x = np.array([1.0, 0.0, 0.0])
        tr = run_am(inst, x, np.zeros(3))
        assert all(b >= a - 1e-10 for a, b in zip(tr.f, tr.f[1:]))
        assert inst.U.is_vertex(tr.u_final)
        if tr.certificate_positive:
            assert second_stage_value(inst, x, tr.u_final)[0] == np.inf


def test_truncation_flag(t2):
    tr = run_am(t2, [0.0], [0.0], max_rounds=1)
    assert tr.truncated
