"""
Price bounds under a martingale constraint
==========================================

Lower and upper bounds of E|X2 - X1| and of a forward-start payoff over all
martingale couplings of two laws in convex order.
"""

from gmpopt import DiscreteDistribution, ExpressionCost, convex_order, martingale_instance, price_bounds

mu = DiscreteDistribution([-1, 0, 1], [0.25, 0.5, 0.25])
nu = DiscreteDistribution([-3, -1, 0, 1, 3], [0.1, 0.2, 0.4, 0.2, 0.1])
print("convex order holds:", convex_order(mu, nu))

for expr in ["abs(x2 - x1)", "max(x2 - x1, 0)", "(x2 - x1)^2 * x1^2"]:
    low, high = price_bounds(martingale_instance([mu, nu], ExpressionCost(expr)))
    print(f"{expr:22s} in [{low.objective:.4f}, {high.objective:.4f}]")

# swapping the laws leaves nothing feasible; the LP explains why with a Farkas ray
low, _ = price_bounds(martingale_instance([nu, mu], ExpressionCost("abs(x2 - x1)")))
print("reversed pair:", low.status.value, "ray length", len(low.farkas))
