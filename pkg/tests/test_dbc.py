import numpy as np
import pytest

from adaptro.bench import gen_capacity_linked, gen_lotsizing
from adaptro.dbc import (
    DbcError, DualProblemData, PartitionNode, PartitionTree, counterpart_feasible, dbc_solve,
    expand_partition, f2_oracle, interior_point, lambda_lp, partition_lp, run_f2, unbounded_ray,
)
from adaptro.model import FirstStageSet, TwoStageInstance, UncertaintyPolytope
from adaptro.reference import exact_solve, exact_worst_case


def test_lambda_lp_tiny2(t2):
    lam, I = lambda_lp(DualProblemData(t2), [1.0, 0.5])
    assert lam[0] == pytest.approx(0.5) and I == (0,)


def test_lambda_lp_degenerate(t2):
    lam, I = lambda_lp(DualProblemData(t2), [1.0, 0.0])
    assert lam[0] == pytest.approx(0.0) and len(I) == 1


def test_lambda_lp_slack_basic(t1):
    lam, I = lambda_lp(DualProblemData(t1), [0.5])
    # columns of [D', -I]: 0 is lambda, 1 is the slack
    assert lam[0] == pytest.approx(0.0) and I == (1,)


def test_robust_counterpart_examples(t2):
    assert counterpart_feasible([1.0, 0.0], 2.0, np.eye(2), np.ones(2))
    assert not counterpart_feasible([0.0, 1.0], 0.5, t2.B.T, t2.b)
    assert not counterpart_feasible([0.0, 0.0], -1.0, np.eye(2), np.ones(2))


def test_partition_lp_root(t1, t2):
    assert partition_lp(t2, [0.0], PartitionTree(DualProblemData(t2)).root)[0] == np.inf
    assert partition_lp(t2, [1.0], PartitionTree(DualProblemData(t2)).root)[0] == pytest.approx(1.5)
    assert partition_lp(t1, [1.0], PartitionTree(DualProblemData(t1)).root)[0] == pytest.approx(1.0)


def test_interior_point_examples(t2):
    w = interior_point(t2.B.T, t2.b)
    assert np.all(w > 0) and (-w[0] + w[1]) < 1
    assert interior_point(np.array([[1.0], [-1.0]]), np.array([0.0, 0.0])) is None
    assert interior_point(np.array([[1.0]]), np.array([1.0]))[0] == pytest.approx(0.5)


def test_expand_tiny2_root(t2):
    tree = PartitionTree(DualProblemData(t2))
    exp = expand_partition(tree, tree.root, (0,))
    assert len(exp.new_ids) == 1
    child = tree.nodes[exp.new_ids[0]]
    assert child.ell == 0 and child.parent == 1
    np.testing.assert_allclose(child.Z, [[0.0, 1.0]])
    assert exp.covered


def test_expand_zero_map_cannot_partition():
    # C = 0 makes the basic variables independent of w
    inst = TwoStageInstance(a=[1.0], b=[1.0], A=[[1.0]], B=[[1.0]], C=[[0.0]], c=[1.0],
                            X=FirstStageSet(lb=[0.0], ub=[2.0], integer=[False]),
                            U=UncertaintyPolytope(D=[[1.0]], d_rhs=[1.0]))
    tree = PartitionTree(DualProblemData(inst))
    exp = expand_partition(tree, tree.root, (1,))
    secondary = [i for i in exp.new_ids if tree.nodes[i].ell > 0]
    assert secondary == []


def test_expand_children_bounded_by_rows():
    inst = gen_lotsizing(3, 0)
    dual = DualProblemData(inst)
    tree = PartitionTree(dual)
    w = interior_point(tree.root.E, tree.root.f)
    _, I = lambda_lp(dual, w)
    exp = expand_partition(tree, tree.root, I)
    assert 1 <= len(exp.new_ids) <= inst.U.l + 1
    for nid in exp.new_ids:
        n = tree.nodes[nid]
        assert interior_point(n.E, n.f) is not None


def test_unbounded_ray_tiny2(t2):
    tree = PartitionTree(DualProblemData(t2))
    res = run_f2(t2, [0.0], tree)
    primary = next(n for n in tree.nodes.values() if n.ell == 0)
    w, v, u = unbounded_ray(t2, [0.0], primary)
    assert np.allclose(w, [1.0, 1.0]) and v == pytest.approx(1.0) and u[0] == pytest.approx(1.0)
    assert res.verdict == "infeasible"


def test_unbounded_ray_nonpositive_is_internal_error(t1):
    node = PartitionNode(id=9, E=t1.B.T, f=t1.b, ell=0, parent=1, Z=np.zeros((1, 1)), z=np.zeros(1))
    with pytest.raises(DbcError, match="ray problem"):
        unbounded_ray(t1, [2.0], node)


def test_f2_examples(t1, t2):
    r = f2_oracle(t2, [0.0], [0.0])
    assert r.verdict == "infeasible" and r.u_star[0] == pytest.approx(1.0) and r.value == np.inf
    r = f2_oracle(t2, [1.0], [1.0])
    assert r.verdict == "feasible" and r.value == pytest.approx(1.5)
    r = f2_oracle(t1, [0.0], [0.0])
    assert r.verdict == "feasible" and r.info["iterations"] == 1


def _lineage_ok(tree):
    for n in tree.nodes.values():
        if n.basis is not None and n.basis in n.lineage_bases(tree):
            return False
    return True


@pytest.mark.parametrize("seed", range(8))
def test_f2_exact_against_reference(seed):
    inst = gen_capacity_linked(2 + seed % 2, seed)
    rng = np.random.default_rng(seed)
    tree = PartitionTree(DualProblemData(inst))
    for _ in range(4):
        x = rng.integers(0, 2, inst.n).astype(float)
        ref, _ = exact_worst_case(inst, x)
        r = f2_oracle(inst, x, np.zeros(inst.l), tree=tree)
        assert r.verdict == ("feasible" if ref < np.inf else "infeasible")
        if r.verdict == "feasible":
            assert r.value >= ref - 1e-6 * (1 + abs(ref))
        else:
            assert exact_worst_case(inst, x, [r.u_star])[0] == np.inf
    assert _lineage_ok(tree)


def test_primary_policy_reused_across_x():
    inst = gen_lotsizing(3, 1)
    tree = PartitionTree(DualProblemData(inst))
    f2_oracle(inst, np.full(3, 20.0), np.zeros(3), tree=tree)
    before = {n.id: n.Z.copy() for n in tree.nodes.values() if n.ell == 0}
    f2_oracle(inst, np.full(3, 3.0), np.zeros(3), tree=tree)
    for nid, Z in before.items():
        assert np.max(np.abs(tree.nodes[nid].Z - Z)) <= 1e-12


def test_tree_dump_lists_nodes(t2):
    r = f2_oracle(t2, [0.0], [0.0])
    text = r.info["tree"].dump()
    assert text.splitlines()[0] == "id\tell\tparent\tbasis\ttau\tchildren"
    assert len(text.splitlines()) == 1 + len(r.info["tree"].nodes)


def test_literal_sign_never_claims_infeasible_x_feasible(t2):
    tree = PartitionTree(DualProblemData(t2), literal_sign=True)
    assert f2_oracle(t2, [0.0], [0.0], tree=tree).verdict != "feasible"


def test_dbc_solve_tiny(t1, t2):
    _, v, rep = dbc_solve(t1, 1e-3)
    assert v == pytest.approx(1.0) and rep.converged
    x, v, rep = dbc_solve(t2, 1e-3)
    assert x[0] == 1.0 and v == pytest.approx(1.5)


def test_dbc_solve_lotsizing():
    inst = gen_lotsizing(3, 0)
    _, ref = exact_solve(inst)
    _, v, rep = dbc_solve(inst, 1e-3)
    assert rep.converged
    assert abs(v - ref) <= 1e-3 * max(1.0, abs(ref))
    lbs = [r.LB for r in rep.iterations]
    assert all(b >= a - 1e-9 for a, b in zip(lbs, lbs[1:]))


def test_dbc_solve_rejects_bad_epsilon(t1):
    with pytest.raises(ValueError):
        dbc_solve(t1, 0.0)
