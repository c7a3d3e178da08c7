"""
Classical transport, two ways of checking a plan
================================================

Solve a small two-marginal problem, then check the optimizer with the
measure-competitor test and with the negative-cycle test.
"""

import numpy as np

from gmpopt import (
    DiscreteDistribution,
    ExpressionCost,
    check_cyclical_monotone,
    is_finitely_minimal,
    multi_marginal_instance,
    solve_gmp,
)

mu = DiscreteDistribution([0, 1, 3], [0.2, 0.5, 0.3])
nu = DiscreteDistribution([-1, 2, 4], [0.4, 0.4, 0.2])
cost = ExpressionCost("(x1 - x2)^2")

inst = multi_marginal_instance([mu, nu], cost)
sol = solve_gmp(inst)
print("objective:", sol.objective)
for point, mass in sol.plan.atoms().items():
    print(f"  {point}: {mass:.4f}")
print("certificate passed:", sol.certificate.passed)

# both tests should certify the optimizer
print("competitor search:", is_finitely_minimal(sol.plan, cost, inst.family, k=3).status.value)
print("cycle search:     ", check_cyclical_monotone(sol.plan.points, cost).status.value)

# reversing the order of the second coordinates breaks both
bad = sol.plan.points.copy()
bad[:, 1] = bad[::-1, 1]
verdict = check_cyclical_monotone(bad, cost)
print("reversed support: ", verdict.status.value, "cycle", verdict.witness.indices,
      "saves", np.round(verdict.margin, 6))
