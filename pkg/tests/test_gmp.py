import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmpopt.constraints import ConstraintFamily, InstanceError, Tabulated, multi_marginal_family
from gmpopt.costs import ConcaveOfSum, ExpressionCost, TabulatedCost, concave_of_sum
from gmpopt.gmp import (
    GmpInstance,
    Solution,
    build_instance,
    martingale_instance,
    multi_marginal_instance,
    plan_from_csv,
    plan_to_csv,
    price_bounds,
    solve_gmp,
    solve_gmp_lexicographic,
    solve_martingale,
    verify_solution,
)
from gmpopt.lp import Status, check_farkas
from gmpopt.measures import DiscreteDistribution, DiscreteMeasure, product_grid
from gmpopt.monotonicity import CompetitorQuery, find_better_competitor, projection_grid
from gmpopt.couplings import quantile_coupling, plans_equal_on_rectangles

from oracles import permutation_coupling_min, vertex_enumeration

SQ = ExpressionCost("(x1 - x2)^2")
MU = DiscreteDistribution([0, 1], [0.5, 0.5])
NU = DiscreteDistribution([0, 2], [0.5, 0.5])


class TestBuildInstance:
    def test_single_point(self):
        inst = build_instance([[0.0]], ExpressionCost("1"), ConstraintFamily(()))
        lp = inst.program()
        assert lp.A.shape == (1, 1) and lp.b.tolist() == [1.0]

    def test_two_by_two_transport(self):
        inst = multi_marginal_instance([MU, NU], SQ)
        assert inst.program().A.shape == (5, 4)

    def test_martingale_two_points(self):
        inst = martingale_instance(
            [DiscreteDistribution.point_mass(0), DiscreteDistribution([-1, 1], [0.5, 0.5])], SQ, constrained=[]
        )
        assert inst.program().A.shape == (2, 2)

    def test_duplicate_points(self):
        with pytest.raises(InstanceError):
            build_instance([[0, 0], [0, 0]], SQ, ConstraintFamily(()))

    def test_undefined_cost(self):
        with pytest.raises(InstanceError):
            build_instance([[0, 0], [1, 1]], TabulatedCost({(0.0, 0.0): 1.0}), ConstraintFamily(()))

    def test_undefined_function(self):
        fam = ConstraintFamily((Tabulated({(0.0, 0.0): 1.0}),))
        with pytest.raises(InstanceError):
            build_instance([[0, 0], [1, 1]], SQ, fam)


class TestSolve:
    def test_single_point(self):
        d = DiscreteDistribution.point_mass(0)
        sol = solve_gmp(multi_marginal_instance([d, d], ExpressionCost("5")))
        assert sol.optimal and sol.objective == 5.0
        assert sol.plan.atoms() == {(0.0, 0.0): 1.0}

    def test_two_by_two(self):
        sol = solve_gmp(multi_marginal_instance([MU, NU], SQ))
        assert sol.objective == pytest.approx(0.5, abs=1e-12)
        assert sol.plan.atoms() == pytest.approx({(0.0, 0.0): 0.5, (1.0, 2.0): 0.5})
        assert sol.certificate.passed and sol.residual <= 1e-12

    def test_martingale_split(self):
        sol = solve_martingale([DiscreteDistribution.point_mass(0), DiscreteDistribution([-1, 1], [0.5, 0.5])], SQ)
        assert sol.objective == pytest.approx(1.0)
        assert sol.plan.atoms() == pytest.approx({(0.0, -1.0): 0.5, (0.0, 1.0): 0.5})

    def test_martingale_infeasible(self):
        marginals = [DiscreteDistribution([-1, 1], [0.5, 0.5]), DiscreteDistribution.point_mass(0)]
        inst = martingale_instance(marginals, SQ)
        sol = solve_martingale(marginals, SQ)
        assert sol.status is Status.INFEASIBLE
        assert sol.diagnostics["convex_order"]["all"] is False
        assert check_farkas(inst.program(), sol.farkas)
        assert verify_solution(inst, sol)["passed"]


class TestLexicographic:
    def test_empty_refinement_is_plain_solve(self):
        inst = multi_marginal_instance([MU, NU], SQ)
        a, b = solve_gmp(inst), solve_gmp_lexicographic(inst, [])
        assert a.plan.atoms() == b.plan.atoms()

    def test_strict_primary_unchanged(self):
        inst = multi_marginal_instance([MU, NU], concave_of_sum("neg_square"))
        a = solve_gmp(inst)
        b = solve_gmp_lexicographic(inst, [ExpressionCost("x1")])
        assert a.plan.atoms() == pytest.approx(b.plan.atoms())

    def test_affine_primary_picks_comonotone(self):
        inst = multi_marginal_instance([MU, NU], concave_of_sum("linear"))
        sol = solve_gmp_lexicographic(inst, [concave_of_sum("neg_square")])
        assert plans_equal_on_rectangles(sol.plan, quantile_coupling([MU, NU]))
        assert sol.diagnostics["stage_values"][0] == pytest.approx(1.5)
        assert verify_solution(inst, sol)["passed"]


class TestSerialization:
    def test_instance_round_trip(self):
        inst = multi_marginal_instance([MU, NU], SQ)
        back = GmpInstance.from_dict(json.loads(json.dumps(inst.to_dict())))
        np.testing.assert_array_equal(back.program().A, inst.program().A)
        np.testing.assert_array_equal(back.cost_values, inst.cost_values)

    def test_solution_round_trip_verifies(self):
        inst = multi_marginal_instance([MU, NU], SQ)
        sol = solve_gmp(inst)
        back = Solution.from_dict(json.loads(json.dumps(sol.to_dict())))
        assert back.objective == sol.objective
        assert verify_solution(inst, back)["passed"]

    def test_tampered_solution_fails(self):
        inst = multi_marginal_instance([MU, NU], SQ)
        data = solve_gmp(inst).to_dict()
        data["plan"]["masses"] = [0.6, 0.4]
        assert not verify_solution(inst, Solution.from_dict(data))["passed"]

    def test_csv_round_trip(self):
        plan = DiscreteMeasure([[0, 0.1], [1, 2]], [0.3, 0.7])
        text = plan_to_csv(plan)
        assert text.splitlines()[0] == "x1,x2,mass"
        assert plan_from_csv(text).atoms() == plan.atoms()


def test_price_bounds_unique_kernel():
    # the mean constraints leave one kernel: -1 -> {-2, 0}, 1 -> {0, 2}, each 1/2
    mu = DiscreteDistribution([-1, 1], [0.5, 0.5])
    nu = DiscreteDistribution([-2, 0, 2], [0.25, 0.5, 0.25])
    low, high = price_bounds(martingale_instance([mu, nu], ExpressionCost("abs(x2 - x1)")))
    assert low.objective == pytest.approx(1.0) and high.objective == pytest.approx(1.0)


def test_price_bounds_match_vertex_enumeration():
    mu = DiscreteDistribution([-1, 1], [0.5, 0.5])
    nu = DiscreteDistribution.uniform([-3, -1, 1, 3])
    inst = martingale_instance([mu, nu], ExpressionCost("x1 * x2^2"))
    low, high = price_bounds(inst)
    lp = inst.program()
    assert low.objective == pytest.approx(vertex_enumeration(lp.A, lp.b, lp.c), abs=1e-9)
    assert high.objective == pytest.approx(-vertex_enumeration(lp.A, lp.b, -lp.c), abs=1e-9)
    assert low.objective < high.objective - 1e-6


@st.composite
def uniform_instances(draw):
    n = draw(st.integers(2, 3))
    m = draw(st.integers(2, 4 if n == 2 else 3))
    supports = [sorted(draw(st.lists(st.integers(-5, 5), min_size=m, max_size=m, unique=True))) for _ in range(n)]
    return supports, draw(st.integers(0, 10_000))


@settings(max_examples=60, deadline=None)
@given(uniform_instances())
def test_matches_permutation_oracle(data):
    supports, seed = data
    rng = np.random.default_rng(seed)
    marginals = [DiscreteDistribution.uniform(s) for s in supports]
    if len(supports) == 2:
        grid = product_grid(supports)
        cost = TabulatedCost(dict(zip(map(tuple, grid.tolist()), rng.normal(size=len(grid)))))
    else:
        # three marginals: extreme points need not be permutations, so use a
        # concave-of-sum cost whose optimum is comonotone
        cost = ConcaveOfSum("neg_square", tuple(rng.uniform(0.2, 2.0, size=3)))
    sol = solve_gmp(multi_marginal_instance(marginals, cost))
    assert sol.objective == pytest.approx(permutation_coupling_min(supports, cost), abs=1e-8)


def test_three_marginals_can_beat_permutations():
    # with a general cost the LP may split mass off the permutation couplings
    rng = np.random.default_rng(3)
    supports = [[0, 1, 2]] * 3
    grid = product_grid(supports)
    found = False
    for _ in range(50):
        cost = TabulatedCost(dict(zip(map(tuple, grid.tolist()), rng.normal(size=len(grid)))))
        sol = solve_gmp(multi_marginal_instance([DiscreteDistribution.uniform(s) for s in supports], cost))
        brute = permutation_coupling_min(supports, cost)
        assert sol.objective <= brute + 1e-9
        found |= sol.objective < brute - 1e-6
    assert found


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_optimal_plans_have_no_better_competitor(seed):
    rng = np.random.default_rng(seed)
    mu = DiscreteDistribution.from_weights(rng.choice(8, 3, replace=False), rng.integers(1, 5, 3))
    nu = DiscreteDistribution.from_weights(rng.choice(8, 3, replace=False), rng.integers(1, 5, 3))
    grid = product_grid([mu.atoms, nu.atoms])
    cost = TabulatedCost(dict(zip(map(tuple, grid.tolist()), rng.normal(size=9))))
    inst = multi_marginal_instance([mu, nu], cost)
    sol = solve_gmp(inst)
    q = CompetitorQuery(sol.plan, projection_grid(sol.plan.points), cost, inst.family, 1e-9)
    assert find_better_competitor(q) is None


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.floats(-100, 100))
def test_constant_shift(seed, shift):
    rng = np.random.default_rng(seed)
    mu = DiscreteDistribution.uniform([0, 1, 3])
    nu = DiscreteDistribution.from_weights([0, 2, 5], [1, 2, 3])
    grid = product_grid([mu.atoms, nu.atoms])
    cost = TabulatedCost(dict(zip(map(tuple, grid.tolist()), rng.normal(size=9))))
    a = solve_gmp(multi_marginal_instance([mu, nu], cost))
    b = solve_gmp(multi_marginal_instance([mu, nu], cost.shifted(shift)))
    assert b.objective == pytest.approx(a.objective + shift, abs=1e-9 * (1 + abs(shift)))
    assert set(a.plan.atoms()) == set(b.plan.atoms())
    for p, w in a.plan.atoms().items():
        assert b.plan.atoms()[p] == pytest.approx(w, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_solutions_are_feasible(seed):
    rng = np.random.default_rng(seed)
    grid = product_grid([[0, 1, 2], [0, 1, 2]])
    fam = multi_marginal_family(
        [DiscreteDistribution.from_weights([0, 1, 2], rng.integers(1, 5, 3))] * 2, grid
    )
    cost = TabulatedCost(dict(zip(map(tuple, grid.tolist()), rng.normal(size=9))))
    sol = solve_gmp(build_instance(grid, cost, fam))
    assert sol.residual <= 1e-9
    assert abs(sol.plan.total_mass - 1) <= 1e-9
