"""
Time marginals on dyadic grids
==============================

mu_t = uniform{0, t, 2t} on [0, 1]. The quantile paths are t -> a t with
a in {0, 1, 2}; on the depth-n grid the expected -(sum f(t_i) dt)^2 is
-(5/3) ((N + 1) / 2N)^2 with N = 2^n. The LP confirms optimality while the
product grid is small.
"""

import csv
import sys

from gmpopt import DiscreteDistribution, convergence_table

law = lambda t: DiscreteDistribution.uniform([0.0, t, 2 * t])  # noqa: E731
rows = convergence_table(law, 1.0, range(1, 7), "neg_square", budget=1000)

writer = csv.writer(sys.stdout, lineterminator="\n")
writer.writerow(["depth", "n_times", "pi_star_cost", "closed_form", "lp_cost", "successive_gap"])
for r in rows:
    N = 2**r.depth
    writer.writerow([r.depth, r.n_times, f"{r.pi_star_cost:.12f}", f"{-(5 / 3) * ((N + 1) / (2 * N)) ** 2:.12f}",
                     "" if r.lp_cost is None else f"{r.lp_cost:.12f}",
                     "" if r.successive_gap is None else f"{r.successive_gap:.3e}"])
