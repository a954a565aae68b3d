import math

import numpy as np
import pytest

from adaptro.bench import gen_capacity_linked, gen_location_transportation, gen_lotsizing, generate
from adaptro.model import validate_instance
from adaptro.reference import exact_solve


def _same(a, b):
    for f in ("a", "b", "A", "B", "C", "c"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    assert np.array_equal(a.U.D, b.U.D) and np.array_equal(a.U.d_rhs, b.U.d_rhs)
    assert np.array_equal(a.X.ub, b.X.ub) and np.array_equal(a.X.G, b.X.G)


def test_loctran_dimensions():
    inst = gen_location_transportation(10, 10, 0)
    assert inst.n == 20 and inst.X.n_integer == 10
    assert inst.m == 100 and inst.l == 10 and inst.U.d == 11


def test_loctran_single_site_budget():
    inst = gen_location_transportation(1, 1, 0)
    np.testing.assert_allclose(inst.U.D, [[1.0], [1.0]])
    np.testing.assert_allclose(inst.U.d_rhs, [1.0, 0.5])


def test_loctran_ranges_and_coverage():
    inst = gen_location_transportation(4, 5, 7)
    sigma = inst.X.ub[:4]
    assert np.all((200 <= sigma) & (sigma <= 700))
    dmin = inst.c[:5]
    delta = -np.diag(inst.C[:5])
    assert np.all((10 <= dmin) & (dmin <= 500))
    assert np.all(delta >= 0.1 * dmin - 1e-9) and np.all(delta <= 0.5 * dmin + 1e-9)
    assert sigma.sum() >= (dmin + delta).sum()
    assert np.all((1 <= inst.a[4:]) & (inst.a[4:] <= 10)) and np.all((0.1 <= inst.a[:4]) & (inst.a[:4] <= 1))


def test_lotsizing_dimensions():
    inst = gen_lotsizing(5, 0, 20.0)
    assert inst.m == 20 and inst.l == 5 and inst.U.d == 6
    assert inst.U.d_rhs[-1] == pytest.approx(math.sqrt(5) * 20)


def test_lotsizing_budget_two_sites():
    inst = gen_lotsizing(2, 0, 1.0)
    assert inst.U.d_rhs[-1] == pytest.approx(math.sqrt(2))


def test_lotsizing_costs_are_distances():
    inst = gen_lotsizing(4, 3)
    rng = np.random.default_rng(3)
    loc = rng.standard_normal((4, 2))
    assert inst.b[0] == pytest.approx(np.linalg.norm(loc[0] - loc[1]))
    cap = -inst.c[4:]
    assert np.all((cap >= 0) & (cap <= 20 / 3))


@pytest.mark.parametrize("fam,size", [("loctran", (3, 2)), ("lotsizing", (4,)), ("caplinked", (3,))])
def test_determinism_and_validity(fam, size):
    a, b = generate(fam, size, 11), generate(fam, size, 11)
    _same(a, b)
    assert validate_instance(a) == []


def test_generators_reject_bad_sizes():
    with pytest.raises(ValueError):
        gen_lotsizing(1, 0)
    with pytest.raises(ValueError):
        gen_location_transportation(0, 2, 0)
    with pytest.raises(ValueError):
        generate("nope", 2, 0)


@pytest.mark.parametrize("seed", range(20))
def test_loctran_has_feasible_first_stage(seed):
    x, v = exact_solve(gen_location_transportation(2, 2, seed))
    assert np.isfinite(v)


def test_capacity_linked_lacks_complete_recourse():
    inst = gen_capacity_linked(3, 0)
    from adaptro.reference import exact_worst_case

    assert exact_worst_case(inst, np.zeros(3))[0] == np.inf
    assert exact_worst_case(inst, np.ones(3))[0] < np.inf
