import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vnfscale import lp


def small_model():
    m = lp.LpModel("toy")
    x = m.add_var("x", 0.0, 10.0)
    y = m.add_var("y", 0.0, 10.0)
    m.add_objective({x: 1.0, y: 2.0})
    m.add_row({x: 1.0, y: 1.0}, ">=", 4.0, "cover")
    return m, x, y


def test_minimize_simple():
    m, x, y = small_model()
    sol = lp.solve(m)
    assert sol.status == lp.OPTIMAL
    assert sol.objective_value == pytest.approx(4.0)
    assert sol.value("x") == pytest.approx(4.0)
    assert sol.value("y") == pytest.approx(0.0)


def test_equality_and_bounds():
    m = lp.LpModel("eq")
    x = m.add_var("x", 1.0, 3.0)
    y = m.add_var("y", 0.0, 3.0)
    m.add_objective({y: 1.0})
    m.add_row({x: 1.0, y: 1.0}, "=", 5.0)
    sol = lp.solve(m)
    assert sol.status == lp.OPTIMAL
    assert sol.value("x") == pytest.approx(3.0)
    assert sol.value("y") == pytest.approx(2.0)


def test_infeasible_detected():
    m = lp.LpModel("bad")
    x = m.add_var("x", 0.0, 1.0)
    m.add_row({x: 1.0}, ">=", 2.0)
    assert lp.solve(m).status == lp.INFEASIBLE


def test_unbounded_detected():
    m = lp.LpModel("unb")
    x = m.add_var("x", 0.0, np.inf)
    m.add_objective({x: -1.0})
    assert lp.solve(m).status == lp.UNBOUNDED


def test_duplicate_variable_rejected():
    m = lp.LpModel("dup")
    m.add_var("x")
    with pytest.raises(ValueError):
        m.add_var("x")


def test_bad_bounds_rejected():
    m = lp.LpModel("bounds")
    with pytest.raises(ValueError):
        m.add_var("x", 2.0, 1.0)
    with pytest.raises(ValueError):
        m.add_row({0: 1.0}, "<", 1.0)


def test_objective_constant_carried():
    m = lp.LpModel("const")
    x = m.add_var("x", 0.0, 5.0)
    m.add_objective({x: 1.0}, const=7.0)
    m.add_row({x: 1.0}, ">=", 2.0)
    assert lp.solve(m).objective_value == pytest.approx(9.0)


def test_check_feasibility_flags_violations():
    m, x, y = small_model()
    ok = lp.check_feasibility(m, np.array([4.0, 0.0]))
    assert ok == []
    bad = lp.check_feasibility(m, np.array([1.0, 1.0]))
    assert len(bad) == 1
    assert bad[0].row == 0 and bad[0].amount == pytest.approx(-2.0)
    with pytest.raises(ValueError):
        lp.check_feasibility(m, np.array([1.0]))


def test_free_and_negative_variables():
    m = lp.LpModel("free")
    x = m.add_var("x", -np.inf, np.inf)
    m.add_objective({x: 1.0})
    m.add_row({x: 1.0}, ">=", -5.0)
    sol = lp.solve(m)
    assert sol.value("x") == pytest.approx(-5.0)


def test_solution_consistency_roundtrip():
    m, x, y = small_model()
    sol = lp.solve(m)
    # objective recomputed from the point matches the solver's number
    assert m.objective_value(sol.point) == pytest.approx(sol.objective_value)
    assert lp.check_feasibility(m, sol.point, tol=1e-7) == []


def test_deterministic_vertex():
    # two symmetric optima: repeated solves land on the same vertex
    points = []
    for _ in range(3):
        m = lp.LpModel("tie")
        x = m.add_var("x", 0.0, 1.0)
        y = m.add_var("y", 0.0, 1.0)
        m.add_objective({x: 1.0, y: 1.0})
        m.add_row({x: 1.0, y: 1.0}, ">=", 1.0)
        points.append(tuple(lp.solve(m).point))
    assert points[0] == points[1] == points[2]


def test_lp_format_dump():
    m, x, y = small_model()
    text = lp.lp_format(m)
    assert "Minimize" in text and "Subject To" in text and "Bounds" in text


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.1, 10.0), min_size=2, max_size=6),
       st.floats(0.5, 5.0))
def test_knapsack_relaxation_properties(costs, demand):
    """min c·x subject to sum x >= demand, 0 <= x <= 1: the optimum fills
    the cheapest coordinates first, so the objective is the sum of the
    smallest ceil(demand) costs (with a fractional last one)."""
    if demand > len(costs):
        demand = float(len(costs))
    m = lp.LpModel("greedy")
    for i, _ in enumerate(costs):
        m.add_var("x%d" % i, 0.0, 1.0)
    m.add_objective({i: c for i, c in enumerate(costs)})
    m.add_row({i: 1.0 for i in range(len(costs))}, ">=", demand)
    sol = lp.solve(m)
    assert sol.status == lp.OPTIMAL
    ordered = sorted(costs)
    whole, frac = int(demand), demand - int(demand)
    expect = sum(ordered[:whole]) + (ordered[whole] * frac if frac > 1e-12 else 0.0)
    assert sol.objective_value == pytest.approx(expect, rel=1e-6)
