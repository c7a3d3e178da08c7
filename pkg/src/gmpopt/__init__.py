"""Discrete generalized moment problems, finite-minimality certificates and
comonotone couplings."""

from .measures import (
    DiscreteDistribution,
    DiscreteMeasure,
    TransportPlan,
    cdf,
    convex_order,
    marginal,
    product_grid,
    product_measure,
    quantile,
)
from .constraints import (
    ConstraintFamily,
    ExpressionFunction,
    MarginalIndicator,
    MartingaleIncrement,
    Tabulated,
    evaluate_moment,
    marginal_family,
    martingale_family,
    multi_marginal_family,
    validate_growth_bound,
)
from .costs import ConcaveOfSum, ExpressionCost, TabulatedCost, concave_of_sum, get_profile
from .lp import LinearProgram, LpResult, Status, lexicographic_solve, solve_lp, verify_certificate
from .gmp import (
    GmpInstance,
    Solution,
    build_instance,
    martingale_instance,
    multi_marginal_instance,
    price_bounds,
    solve_gmp,
    solve_gmp_lexicographic,
    solve_martingale,
    verify_solution,
)
from .monotonicity import (
    CompetitorQuery,
    Verdict,
    check_cyclical_monotone,
    find_better_competitor,
    is_finitely_minimal,
    monotone_swap,
)
from .couplings import (
    QuantilePlanSpec,
    is_monotone_set,
    plans_equal_on_rectangles,
    quantile_coupling,
    rectangle_gap,
    rectangle_mass,
)
from .continuum import (
    MarginalFamily,
    Partition,
    compare_with_lp,
    continuum_quantile_plan,
    convergence_table,
    dyadic_partitions,
    pass_cost,
    phi_n,
    riemann_sum,
    riemann_sum_h,
)
from .expression import parse_expression

__version__ = "0.1.0"
