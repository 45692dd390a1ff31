import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from optcons.costs import (
    CostFunction,
    cost_from_json,
    eval_gradient,
    global_optimum,
    hessian_bounds,
    make_ensemble,
)
from optcons.errors import ConfigurationError, InvalidRangeError, UnboundedProblemError

ALL_COSTS = [
    CostFunction.quadratic(1.5),
    CostFunction.quadratic(-3.0, 2.5),
    *[CostFunction.example2(i) for i in range(1, 5)],
]
GRID = np.arange(-10.0, 11.0)


@pytest.mark.parametrize("cost", ALL_COSTS, ids=lambda c: f"{c.kind}-{c.center}")
def test_gradient_matches_central_difference(cost):
    h = 1e-5
    for y in GRID:
        fd = (cost(y + h) - cost(y - h)) / (2 * h)
        assert abs(cost.grad(y) - fd) <= 1e-5, y


def test_gradient_examples():
    assert eval_gradient(CostFunction.quadratic(2.0), 2.0) == 0.0
    assert eval_gradient(CostFunction.example2(1), 0.0) == -16.0
    assert eval_gradient(CostFunction.example2(4), 0.0) == 0.0


@given(st.floats(-50, 50))
def test_f4_gradient_is_odd(y):
    f4 = CostFunction.example2(4)
    assert f4.grad(-y) == pytest.approx(-f4.grad(y), abs=1e-12)


def test_f4_value_stable_for_large_arguments():
    assert np.isfinite(CostFunction.example2(4)(1e5))


def test_hessian_bounds_quadratic():
    lo, hi = hessian_bounds(CostFunction.quadratic(4.0, 1.0), -3.0, 7.0, 11)
    assert lo == pytest.approx(1.0, abs=1e-6) and hi == pytest.approx(1.0, abs=1e-6)


def test_hessian_bounds_f1():
    lo, hi = hessian_bounds(CostFunction.example2(1), -10, 10, 2001)
    assert lo == pytest.approx(2.0, abs=1e-4) and hi == pytest.approx(2.0, abs=1e-4)


@pytest.mark.parametrize("i", [2, 3, 4])
def test_hessian_bounds_example2_within_declared(i):
    lo, hi = hessian_bounds(CostFunction.example2(i), -10, 10, 2001)
    assert 1 - 0.05 <= lo <= hi <= 3 + 0.05


@pytest.mark.parametrize("cost", ALL_COSTS, ids=lambda c: c.kind)
def test_second_difference_within_declared_bounds(cost):
    declared = (1.0, 3.0) if cost.kind.startswith("example2") else cost.declared_bounds
    lo, hi = hessian_bounds(cost, -10, 10, 401)
    assert declared[0] - 1e-3 <= lo and hi <= declared[1] + 1e-3


@pytest.mark.parametrize("lo,hi,n", [(1.0, 1.0, 10), (2.0, 1.0, 10), (0.0, 1.0, 2)])
def test_hessian_bounds_bad_range(lo, hi, n):
    with pytest.raises(InvalidRangeError):
        hessian_bounds(CostFunction.quadratic(0.0), lo, hi, n)


def test_optimum_mean_of_quadratics():
    q = [0.3, -1.2, 2.0, 0.7]
    e = make_ensemble([CostFunction.quadratic(c) for c in q])
    assert global_optimum(e) == pytest.approx(np.mean(q), abs=1e-9)


def test_optimum_example2():
    e = make_ensemble([CostFunction.example2(i) for i in range(1, 5)])
    y = global_optimum(e)
    assert y == pytest.approx(3.24, abs=0.01)
    # independent route: bounded scalar minimization of the summed cost
    ref = minimize_scalar(e.total, bounds=(-20, 20), method="bounded", options={"xatol": 1e-10})
    assert y == pytest.approx(ref.x, abs=1e-6)


def test_optimum_single_cost():
    e = make_ensemble([CostFunction("example2_f1")])
    assert global_optimum(e, tol=1e-9) == pytest.approx(8.0, abs=1e-9)
    e = make_ensemble([CostFunction.quadratic(5.0)])
    assert global_optimum(e, tol=1e-8) == pytest.approx(5.0, abs=1e-8)


def test_optimum_residual_below_tol():
    e = make_ensemble([CostFunction.example2(i) for i in range(1, 5)])
    for tol in (1e-4, 1e-8, 1e-10):
        assert abs(e.total_grad(global_optimum(e, tol))) <= tol


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(0.1, 10)), min_size=1, max_size=8), st.randoms())
def test_optimum_permutation_invariant(params, rnd):
    costs = [CostFunction.quadratic(c, w) for c, w in params]
    y = global_optimum(make_ensemble(costs))
    shuffled = list(costs)
    rnd.shuffle(shuffled)
    assert global_optimum(make_ensemble(shuffled)) == y
    weighted_mean = sum(c * w for c, w in params) / sum(w for _, w in params)
    assert y == pytest.approx(weighted_mean, abs=1e-9 * max(1.0, abs(weighted_mean)))


def test_optimum_example2_permutation_bitwise():
    costs = [CostFunction.example2(i) for i in range(1, 5)]
    y = global_optimum(make_ensemble(costs))
    rng = random.Random(3)
    for _ in range(5):
        rng.shuffle(costs)
        assert global_optimum(make_ensemble(costs)) == y


def test_unbounded_problem():
    class Linear:
        def grad(self, y):
            return -1.0

    from optcons.costs import CostEnsemble

    with pytest.raises(UnboundedProblemError):
        global_optimum(CostEnsemble((Linear(),), 1.0, 1.0))


def test_far_optimum_found():
    e = make_ensemble([CostFunction.quadratic(3.0e6)])
    assert global_optimum(e, tol=1e-6) == pytest.approx(3.0e6, abs=1e-6)


def test_bad_tolerance():
    with pytest.raises(InvalidRangeError):
        global_optimum(make_ensemble([CostFunction.quadratic(0.0)]), tol=0.0)


def test_json_entries():
    c = cost_from_json({"kind": "quadratic", "center": 1.5, "weight": 1.0})
    assert c.grad(1.5) == 0.0
    c = cost_from_json({"kind": "example2_f2", "hessian_bounds": [1.0, 3.0]})
    assert c.bounds() == (1.0, 3.0)
    c = cost_from_json({"kind": "quadratic", "center": "initial_output"}, initial_output=0.25)
    assert c.center == 0.25
    with pytest.raises(ConfigurationError):
        cost_from_json({"kind": "cubic"})
    with pytest.raises(ConfigurationError):
        cost_from_json({"kind": "quadratic", "center": "initial_output"})


def test_ensemble_bounds():
    e = make_ensemble([CostFunction.quadratic(0, 0.5), CostFunction.quadratic(0, 2.0)])
    assert (e.l_lower, e.l_upper) == (0.5, 2.0)
    e = make_ensemble([CostFunction.example2(2)])
    assert 0.95 <= e.l_lower <= e.l_upper <= 3.05
