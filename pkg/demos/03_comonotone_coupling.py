"""
Concave costs of a sum pick the comonotone coupling
===================================================

For h strictly concave, the LP optimizer of h(x1 + x2 + x3) equals the
quantile coupling. With h affine every coupling ties and a lexicographic
second stage is needed to single it out.
"""

from gmpopt import (
    DiscreteDistribution,
    concave_of_sum,
    multi_marginal_instance,
    quantile_coupling,
    rectangle_gap,
    solve_gmp,
    solve_gmp_lexicographic,
)

marginals = [
    DiscreteDistribution([0, 1, 4], [0.5, 0.25, 0.25]),
    DiscreteDistribution([-2, 2], [0.5, 0.5]),
    DiscreteDistribution([1, 2, 3], [0.25, 0.25, 0.5]),
]
star = quantile_coupling(marginals)
print("quantile coupling:")
for point, mass in star.atoms().items():
    print(f"  {point}: {mass}")

for h in ["neg_square", "neg_abs_p", "log_shift"]:
    params = {"kappa": 10.0} if h == "log_shift" else {}
    sol = solve_gmp(multi_marginal_instance(marginals, concave_of_sum(h, **params)))
    print(f"{h:10s} LP plan vs quantile coupling, rectangle gap {rectangle_gap(sol.plan, star):.1e}")

inst = multi_marginal_instance(marginals, concave_of_sum("linear"))
plain = solve_gmp(inst)
refined = solve_gmp_lexicographic(inst, [concave_of_sum("neg_square")])
print("affine h, plain solve gap:  ", rectangle_gap(plain.plan, star))
print("affine h, refined solve gap:", rectangle_gap(refined.plan, star))
