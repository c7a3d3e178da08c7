import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmpopt.continuum import (
    BudgetExceeded,
    MarginalFamily,
    MissingMarginalError,
    Partition,
    compare_with_lp,
    continuum_quantile_plan,
    convergence_table,
    dyadic_partitions,
    pass_cost,
    phi_n,
    restrict_path,
    riemann_sum,
    riemann_sum_h,
)
from gmpopt.couplings import is_monotone_set
from gmpopt.measures import DiscreteDistribution, DiscreteMeasure, marginal

HALF_GRID = dyadic_partitions(1.0, 1)


def two_point_family():
    law = lambda t: DiscreteDistribution.uniform([0.0, t])  # noqa: E731
    return MarginalFamily.from_callable(law, [0.5, 1.0], 1.0)


def spread(t):
    return DiscreteDistribution.uniform([0.0, t, 2 * t])


class TestPartitions:
    def test_depth_zero(self):
        assert dyadic_partitions(2.0, 0).points.tolist() == [0.0, 2.0]

    def test_depth_one(self):
        assert HALF_GRID.points.tolist() == [0.0, 0.5, 1.0]

    def test_depth_two(self):
        assert len(dyadic_partitions(1.0, 2).points) == 5

    def test_nested(self):
        for n in range(5):
            assert dyadic_partitions(1.0, n + 1).refines(dyadic_partitions(1.0, n))

    def test_invalid(self):
        with pytest.raises(ValueError):
            Partition([0.0, 0.0])
        with pytest.raises(ValueError):
            dyadic_partitions(1.0, -1)


class TestRiemannSums:
    def test_constant(self):
        assert riemann_sum(np.ones(8), dyadic_partitions(1.0, 3)) == pytest.approx(1.0)

    def test_step(self):
        assert riemann_sum([0, 1], HALF_GRID) == 0.5

    def test_zero(self):
        assert riemann_sum([0, 0], HALF_GRID) == 0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            riemann_sum([0, 1, 2], HALF_GRID)

    def test_h_constant(self):
        assert riemann_sum_h(np.full(4, 2.0), dyadic_partitions(1.0, 2)) == pytest.approx(-4.0)

    def test_h_zero(self):
        assert riemann_sum_h([0, 0], HALF_GRID) == 0

    def test_h_step(self):
        assert riemann_sum_h([0, 1], HALF_GRID, "neg_square") == -0.5

    def test_unknown_h(self):
        with pytest.raises(ValueError):
            riemann_sum_h([0, 1], HALF_GRID, "no_such_h")

    def test_vectorized(self):
        assert riemann_sum([[0, 1], [2, 2]], HALF_GRID).tolist() == [0.5, 2.0]


class TestPhi:
    parts = [dyadic_partitions(1.0, n) for n in range(4)]

    def test_constant(self):
        assert phi_n(np.full(8, 3.0), self.parts) == pytest.approx(3.0)

    def test_last_only(self):
        path = np.linspace(0, 1, 9)[1:] ** 2
        assert phi_n(path, self.parts, 3) == pytest.approx(riemann_sum(path, self.parts[3]))

    def test_increasing_sums(self):
        # f(t) = -t: right-endpoint sums increase with refinement, so the max is s_N
        path = -self.parts[3].times
        sums = [riemann_sum(restrict_path(path, self.parts[3], p), p) for p in self.parts]
        assert np.all(np.diff(sums) > 0)
        assert phi_n(path, self.parts) == pytest.approx(sums[-1])

    def test_restrict(self):
        path = np.arange(1, 9, dtype=float)
        assert restrict_path(path, self.parts[3], self.parts[1]).tolist() == [4.0, 8.0]

    @settings(max_examples=100)
    @given(st.lists(st.floats(-10, 10), min_size=8, max_size=8))
    def test_nonincreasing_in_n(self, path):
        vals = [phi_n(np.array(path), self.parts, n) for n in range(4)]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


class TestQuantilePlan:
    def test_single_time(self):
        fam = MarginalFamily([1.0], (DiscreteDistribution.uniform([0, 2]),), 1.0)
        plan = continuum_quantile_plan(fam, dyadic_partitions(1.0, 0))
        assert plan.atoms() == {(0.0,): 0.5, (2.0,): 0.5}

    def test_identical_marginals(self):
        d = DiscreteDistribution([1, 2], [0.3, 0.7])
        fam = MarginalFamily([0.5, 1.0], (d, d), 1.0)
        plan = continuum_quantile_plan(fam, HALF_GRID)
        assert np.all(plan.points[:, 0] == plan.points[:, 1])

    def test_two_paths(self):
        plan = continuum_quantile_plan(two_point_family(), HALF_GRID, m=2)
        assert plan.atoms() == {(0.0, 0.0): 0.5, (0.5, 1.0): 0.5}

    def test_missing_marginal(self):
        fam = MarginalFamily([1.0], (DiscreteDistribution.point_mass(0),), 1.0)
        with pytest.raises(MissingMarginalError):
            continuum_quantile_plan(fam, HALF_GRID)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 4), st.integers(0, 10_000))
    def test_marginal_fidelity(self, n, seed):
        rng = np.random.default_rng(seed)
        w = rng.integers(1, 5, 3)
        law = lambda t: DiscreteDistribution.from_weights([0.0, t, 1 + t * t], w)  # noqa: E731
        part = dyadic_partitions(1.0, n)
        fam = MarginalFamily.from_callable(law, part.times, 1.0)
        plan = continuum_quantile_plan(fam, part)
        assert is_monotone_set(plan.points)
        for i, t in enumerate(part.times):
            assert marginal(plan, i) == law(t)


class TestPassCost:
    def test_zero_plan(self):
        assert pass_cost(DiscreteMeasure([[0, 0]], [1.0]), HALF_GRID) == 0

    def test_two_paths(self):
        plan = continuum_quantile_plan(two_point_family(), HALF_GRID, m=2)
        assert pass_cost(plan, HALF_GRID, "neg_square") == pytest.approx(-9 / 32, abs=1e-15)

    def test_single_atom(self):
        assert pass_cost(DiscreteMeasure([[1, 3]], [1.0]), HALF_GRID) == pytest.approx(-4.0)

    @pytest.mark.parametrize("n", range(1, 6))
    def test_closed_form_spread_family(self, n):
        part = dyadic_partitions(1.0, n)
        fam = MarginalFamily.from_callable(spread, part.times, 1.0)
        N = 2**n
        expected = -(5 / 3) * ((N + 1) / (2 * N)) ** 2
        assert pass_cost(continuum_quantile_plan(fam, part), part) == pytest.approx(expected, abs=1e-13)


class TestCompareWithLp:
    def test_two_by_two(self):
        fam = MarginalFamily(
            [0.5, 1.0], (DiscreteDistribution.uniform([0, 1]), DiscreteDistribution.uniform([0, 3])), 1.0
        )
        rep = compare_with_lp(fam, HALF_GRID)
        assert abs(rep.gap) <= 1e-8 and rep.rectangles_equal and rep.certificate_passed

    def test_identical_marginals(self):
        d = DiscreteDistribution.uniform([0, 1, 2])
        rep = compare_with_lp(MarginalFamily([0.5, 1.0], (d, d), 1.0), HALF_GRID)
        assert abs(rep.gap) <= 1e-12
        assert np.all(rep.lp_plan.points[:, 0] == rep.lp_plan.points[:, 1])

    def test_affine_ties_and_refinement(self):
        part = dyadic_partitions(1.0, 2)
        fam = MarginalFamily.from_callable(lambda t: DiscreteDistribution.uniform([0, t]), part.times, 1.0)
        rep = compare_with_lp(fam, part, "linear")
        assert abs(rep.gap) <= 1e-12 and not rep.strictly_concave
        refined = compare_with_lp(fam, part, "linear", refine=True)
        assert refined.rectangles_equal

    def test_budget(self):
        part = dyadic_partitions(1.0, 3)
        fam = MarginalFamily.from_callable(spread, part.times, 1.0)
        with pytest.raises(BudgetExceeded):
            compare_with_lp(fam, part, budget=100)

    def test_to_dict(self):
        rep = compare_with_lp(two_point_family(), HALF_GRID)
        assert set(rep.to_dict()) >= {"lp_objective", "pi_star_cost", "gap", "rectangles_equal"}


def test_convergence_table():
    rows = convergence_table(spread, 1.0, range(1, 5), budget=100)
    assert [r.depth for r in rows] == [1, 2, 3, 4]
    assert rows[0].lp_cost is not None and rows[2].lp_cost is None
    assert rows[0].successive_gap is None
    gaps = [r.successive_gap for r in rows[1:]]
    assert all(a >= b for a, b in zip(gaps, gaps[1:]))
