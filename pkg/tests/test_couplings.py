import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmpopt.couplings import (
    QuantilePlanSpec,
    breakpoint_levels,
    is_monotone_set,
    plans_equal_on_rectangles,
    quantile_coupling,
    rectangle_corners,
    rectangle_gap,
    rectangle_mass,
    stratified_levels,
)
from gmpopt.measures import DiscreteDistribution, DiscreteMeasure, marginal

DIAG = DiscreteMeasure([[0, 0], [1, 1]], [0.5, 0.5])
ANTI = DiscreteMeasure([[0, 1], [1, 0]], [0.5, 0.5])


@st.composite
def distributions(draw, max_atoms=5):
    n = draw(st.integers(1, max_atoms))
    atoms = draw(st.lists(st.integers(-10, 10), min_size=n, max_size=n, unique=True))
    raw = draw(st.lists(st.integers(1, 8), min_size=n, max_size=n))
    return DiscreteDistribution.from_weights(atoms, raw)


class TestQuantileCoupling:
    def test_identical_marginals_on_diagonal(self):
        d = DiscreteDistribution([0, 1, 5], [0.2, 0.3, 0.5])
        plan = quantile_coupling([d, d])
        assert np.all(plan.points[:, 0] == plan.points[:, 1])

    def test_two_by_two(self):
        mu = DiscreteDistribution([0, 1], [0.5, 0.5])
        nu = DiscreteDistribution([0, 2], [0.5, 0.5])
        plan = quantile_coupling(QuantilePlanSpec((mu, nu), [0.25, 0.75]))
        assert plan.atoms() == {(0.0, 0.0): 0.5, (1.0, 2.0): 0.5}

    def test_three_uniform(self):
        d = DiscreteDistribution([0, 1], [0.5, 0.5])
        plan = quantile_coupling(QuantilePlanSpec.stratified([d, d, d], 2))
        assert plan.atoms() == {(0.0, 0.0, 0.0): 0.5, (1.0, 1.0, 1.0): 0.5}

    def test_stratified_levels(self):
        lv, w = stratified_levels(4)
        assert lv.tolist() == [0.125, 0.375, 0.625, 0.875]
        assert w.tolist() == [0.25] * 4

    def test_breakpoints_of_uniform_are_stratified(self):
        d = DiscreteDistribution.uniform([0, 3, 7, 9])
        lv, w = breakpoint_levels([d, d])
        np.testing.assert_allclose(lv, stratified_levels(4)[0])
        np.testing.assert_allclose(w, stratified_levels(4)[1])

    def test_breakpoints_mixed_weights(self):
        a = DiscreteDistribution([0, 1], [0.25, 0.75])
        b = DiscreteDistribution([0, 1], [0.5, 0.5])
        lv, w = breakpoint_levels([a, b])
        np.testing.assert_allclose(w, [0.25, 0.25, 0.5])
        plan = quantile_coupling([a, b])
        assert plan.atoms() == pytest.approx({(0.0, 0.0): 0.25, (1.0, 0.0): 0.25, (1.0, 1.0): 0.5})

    @pytest.mark.parametrize(
        "levels, weights",
        [([0.5, 0.25], None), ([0.25, 0.75], [0.5, 0.6]), ([0.25, 0.75], [1.0]), ([0.5], [0.0])],
    )
    def test_invalid_spec(self, levels, weights):
        d = DiscreteDistribution.point_mass(0)
        with pytest.raises(ValueError):
            QuantilePlanSpec((d,), levels, weights)

    def test_stratified_error_bound(self):
        # non-uniform weights with m stratified levels: each atom off by at most 1/m
        d = DiscreteDistribution([0, 1, 2], [0.1, 0.3, 0.6])
        m = 7
        got = marginal(quantile_coupling(QuantilePlanSpec.stratified([d], m)), 0)
        full = dict(zip(got.atoms.tolist(), got.weights.tolist()))
        for a, w in zip(d.atoms, d.weights):
            assert abs(full.get(a, 0.0) - w) <= 1 / m


@settings(max_examples=150)
@given(st.lists(distributions(), min_size=1, max_size=3))
def test_breakpoint_marginals_exact(marginals):
    plan = quantile_coupling(marginals)
    for axis, d in enumerate(marginals):
        got = marginal(plan, axis)
        np.testing.assert_array_equal(got.atoms, d.atoms)
        np.testing.assert_allclose(got.weights, d.weights, atol=1e-12, rtol=0)


@settings(max_examples=100)
@given(st.integers(1, 6), st.lists(st.lists(st.integers(-9, 9), min_size=6, max_size=6, unique=True), min_size=1, max_size=3))
def test_stratified_uniform_marginals_exact(m, supports):
    marginals = [DiscreteDistribution.uniform(s[:m]) for s in supports]
    plan = quantile_coupling(QuantilePlanSpec.stratified(marginals, m))
    for axis, d in enumerate(marginals):
        assert marginal(plan, axis) == d


@settings(max_examples=100)
@given(st.lists(distributions(), min_size=1, max_size=4))
def test_support_is_monotone(marginals):
    assert is_monotone_set(quantile_coupling(marginals).points)


class TestMonotoneSet:
    def test_chain(self):
        assert is_monotone_set([[0, 0], [1, 1], [2, 5]])

    def test_incomparable(self):
        assert not is_monotone_set([[0, 1], [1, 0]])

    def test_singleton(self):
        assert is_monotone_set([[3, -1]])

    @settings(max_examples=200)
    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=6))
    def test_matches_pairwise_definition(self, pts):
        P = np.array(pts, float)
        pairwise = all(np.all(p <= q) or np.all(q <= p) for p in P for q in P)
        assert is_monotone_set(P) == pairwise


class TestRectangles:
    def test_below(self):
        assert rectangle_mass(DIAG, [-1, -1]) == 0

    def test_above(self):
        assert rectangle_mass(DIAG, [9, 9]) == 1

    def test_strip(self):
        assert rectangle_mass(DIAG, [0, 5]) == 0.5

    def test_same_plan(self):
        assert plans_equal_on_rectangles(DIAG, DIAG)

    def test_diagonal_vs_anti(self):
        assert not plans_equal_on_rectangles(DIAG, ANTI)
        assert rectangle_mass(DIAG, [0, 0]) == 0.5 and rectangle_mass(ANTI, [0, 0]) == 0.0

    def test_merge_representation(self):
        split = DiscreteMeasure([[0, 0], [0, 0], [1, 1]], [0.25, 0.25, 0.5])
        assert plans_equal_on_rectangles(split, DIAG)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            rectangle_mass(DIAG, [0, 0, 0])

    def test_sparse_corners_separate(self, monkeypatch):
        import gmpopt.couplings as cp

        monkeypatch.setattr(cp, "MAX_DENSE_CORNERS", 1)
        assert rectangle_corners(DIAG, ANTI).shape[0] == 4
        assert rectangle_gap(DIAG, ANTI) == 0.5


@settings(max_examples=100)
@given(st.integers(0, 100_000))
def test_sparse_corners_agree_with_dense(seed):
    import gmpopt.couplings as cp

    rng = np.random.default_rng(seed)
    p1 = DiscreteMeasure(rng.integers(0, 3, size=(4, 3)), rng.integers(1, 4, 4) / 10)
    p2 = DiscreteMeasure(rng.integers(0, 3, size=(4, 3)), rng.integers(1, 4, 4) / 10)
    dense = rectangle_gap(p1, p2) > 1e-12
    old = cp.MAX_DENSE_CORNERS
    cp.MAX_DENSE_CORNERS = 0
    try:
        sparse = rectangle_gap(p1, p2) > 1e-12
    finally:
        cp.MAX_DENSE_CORNERS = old
    assert dense == sparse == (p1.atoms() != p2.atoms())
