"""Time-indexed marginals on dyadic grids and the concave integral cost.

A path is sampled at the partition points ``t_1 < ... < t_N`` (``t_0`` is
left out, matching the right-endpoint Riemann sum). The quantile plan puts
mass on the paths ``t -> q_t(u)`` for a set of levels ``u``; on each grid it
is compared with the LP optimum of the multi-marginal problem with cost
``h(sum_i f(t_i) (t_i - t_{i-1}))``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import lp as _lp
from .costs import ConcaveOfSum, Profile, get_profile
from .couplings import QuantilePlanSpec, quantile_coupling, rectangle_gap
from .gmp import multi_marginal_instance, solve_gmp, solve_gmp_lexicographic
from .measures import DiscreteDistribution, DiscreteMeasure

TIME_TOL = 1e-12
LP_BUDGET = 10_000


class MissingMarginalError(KeyError):
    pass


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size < 2 or np.any(np.diff(pts) <= 0):
            raise ValueError("a partition needs at least two strictly increasing points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def times(self) -> np.ndarray:
        """Sample times ``t_1 .. t_N``."""
        return self.points[1:]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.points)

    def __len__(self) -> int:
        return self.points.size - 1

    def refines(self, coarser: "Partition") -> bool:
        return all(np.any(np.abs(self.points - t) <= TIME_TOL) for t in coarser.points)


def dyadic_partitions(T: float, n: int) -> Partition:
    """``{k T / 2^n : k = 0..2^n}``; nested in ``n``."""
    if n < 0:
        raise ValueError("depth must be nonnegative")
    return Partition(np.arange(2**n + 1) * (T / 2**n))


@dataclass(frozen=True)
class MarginalFamily:
    times: np.ndarray
    marginals: tuple
    T: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        if times.size != len(self.marginals):
            raise ValueError("one marginal per time")
        if times.size and (times[0] < -TIME_TOL or times[-1] > self.T + TIME_TOL):
            raise ValueError("times must lie in [0, T]")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "marginals", tuple(self.marginals))

    @classmethod
    def from_callable(cls, law: Callable[[float], DiscreteDistribution], times, T: float) -> "MarginalFamily":
        times = np.asarray(times, dtype=float)
        return cls(times, tuple(law(float(t)) for t in times), T)

    def at(self, t: float) -> DiscreteDistribution:
        i = np.flatnonzero(np.abs(self.times - t) <= TIME_TOL)
        if i.size == 0:
            raise MissingMarginalError(f"no marginal given at t={t}")
        return self.marginals[int(i[0])]

    def on(self, part: Partition) -> list[DiscreteDistribution]:
        return [self.at(t) for t in part.times]


def _check_path(path, part: Partition) -> np.ndarray:
    f = np.asarray(path, dtype=float)
    if f.shape[-1] != len(part):
        raise ValueError(f"path has {f.shape[-1]} samples, partition has {len(part)} sample times")
    return f


def riemann_sum(path, part: Partition):
    """``sum_i f(t_i) (t_i - t_{i-1})``; vectorized over leading axes of ``path``."""
    return _check_path(path, part) @ part.increments


def riemann_sum_h(path, part: Partition, h: str | Profile = "neg_square", **params):
    """``sum_i h(f(t_i)) (t_i - t_{i-1})``."""
    prof = get_profile(h, **params)
    return prof(_check_path(path, part)) @ part.increments


def restrict_path(path, fine: Partition, coarse: Partition) -> np.ndarray:
    """Samples of a path on ``fine`` at the sample times of ``coarse``."""
    f = _check_path(path, fine)
    idx = np.searchsorted(fine.times, coarse.times - TIME_TOL)
    if np.any(idx >= fine.times.size) or np.any(np.abs(fine.times[idx] - coarse.times) > TIME_TOL):
        raise ValueError("coarse partition is not contained in the fine one")
    return f[..., idx]


def phi_n(path, partitions: Sequence[Partition], n: int = 0) -> float:
    """``max_{n <= k <= N} s_k(path)`` for nested ``partitions[0..N]``.

    ``path`` is sampled on the finest partition ``partitions[-1]``; coarser
    sums use its restriction. This is the finite-horizon stand-in for
    ``sup_{k >= n} s_k``.
    """
    fine = partitions[-1]
    if not 0 <= n < len(partitions):
        raise IndexError("n outside the available partitions")
    return float(
        max(riemann_sum(restrict_path(path, fine, p), p) for p in partitions[n:])
    )


def continuum_quantile_plan(fam: MarginalFamily, part: Partition, m: int | None = None) -> DiscreteMeasure:
    """Quantile paths ``(q_{t_1}(u), ..., q_{t_N}(u))`` on the partition.

    ``m`` selects ``m`` stratified levels of weight ``1/m``; ``None`` uses
    the breakpoint levels, exact for any discrete marginals.
    """
    marginals = fam.on(part)
    if m is None:
        spec = QuantilePlanSpec(tuple(marginals))
    else:
        spec = QuantilePlanSpec.stratified(marginals, m)
    return quantile_coupling(spec)


def pass_cost(plan: DiscreteMeasure, part: Partition, h: str | Profile = "neg_square", **params) -> float:
    """``sum_atoms mass * h(riemann_sum(path))``."""
    prof = get_profile(h, **params)
    return float(prof(riemann_sum(plan.points, part)) @ plan.masses)


def path_cost(part: Partition, h: str | Profile = "neg_square", **params) -> ConcaveOfSum:
    """The grid cost ``z -> h(sum_i z_i (t_i - t_{i-1}))``."""
    return ConcaveOfSum(get_profile(h, **params), tuple(part.increments))


@dataclass(frozen=True)
class LpComparison:
    n_variables: int
    lp_objective: float
    pi_star_cost: float
    gap: float
    rectangle_gap: float
    rectangles_equal: bool
    strictly_concave: bool
    lp_plan: DiscreteMeasure
    pi_star: DiscreteMeasure
    certificate_passed: bool

    def to_dict(self) -> dict:
        return {
            "n_variables": self.n_variables,
            "lp_objective": self.lp_objective,
            "pi_star_cost": self.pi_star_cost,
            "gap": self.gap,
            "rectangle_gap": self.rectangle_gap,
            "rectangles_equal": self.rectangles_equal,
            "strictly_concave": self.strictly_concave,
            "certificate_passed": self.certificate_passed,
        }


def lp_size(fam: MarginalFamily, part: Partition) -> int:
    return int(np.prod([len(d) for d in fam.on(part)], dtype=float))


def compare_with_lp(
    fam: MarginalFamily,
    part: Partition,
    h: str | Profile = "neg_square",
    feas_tol: float = _lp.FEAS_TOL,
    opt_tol: float = _lp.OPT_TOL,
    rect_tol: float = 1e-8,
    refine: bool = False,
    budget: int = LP_BUDGET,
    **params,
) -> LpComparison:
    """Solve the grid problem by LP and compare it with the quantile plan.

    With ``refine`` the LP optimum is selected lexicographically: after the
    primary cost, ``-s_k^2`` is minimized for the nested dyadic sub-partitions
    ``k = 0, 1, ...`` contained in ``part``, which picks the comonotone plan
    among tied optima when ``h`` is affine.
    """
    size = lp_size(fam, part)
    if size > budget:
        raise BudgetExceeded(
            f"product grid has {size} points (budget {budget}); use a coarser partition"
        )
    prof = get_profile(h, **params)
    marginals = fam.on(part)
    inst = multi_marginal_instance(marginals, ConcaveOfSum(prof, tuple(part.increments)))
    if refine:
        sol = solve_gmp_lexicographic(inst, _refinement_costs(part), feas_tol, opt_tol)
    else:
        sol = solve_gmp(inst, feas_tol, opt_tol)
    if not sol.optimal:  # pragma: no cover - the product grid always admits the independent coupling
        raise _lp.SolverError(f"grid LP ended {sol.status.value}")
    pi_star = continuum_quantile_plan(fam, part)
    star_cost = pass_cost(pi_star, part, prof)
    rgap = rectangle_gap(sol.plan, pi_star)
    return LpComparison(
        n_variables=size,
        lp_objective=sol.objective,
        pi_star_cost=star_cost,
        gap=star_cost - sol.objective,
        rectangle_gap=rgap,
        rectangles_equal=rgap <= rect_tol,
        strictly_concave=prof.strictly_concave,
        lp_plan=sol.plan,
        pi_star=pi_star,
        certificate_passed=bool(sol.certificate.passed),
    )


def _refinement_costs(part: Partition) -> list[ConcaveOfSum]:
    """``-s_k^2`` for every coarser partition found by repeated halving."""
    costs = []
    times = part.times
    pts = part.points
    levels = []
    step = 1
    while step <= len(part):
        sub = pts[::step]
        if sub[-1] == pts[-1]:
            levels.append(sub)
        step *= 2
    for sub in reversed(levels):
        w = np.zeros(times.size)
        idx = np.searchsorted(times, sub[1:] - TIME_TOL)
        w[idx] = np.diff(sub)
        costs.append(ConcaveOfSum(get_profile("neg_square"), tuple(w)))
    return costs


@dataclass(frozen=True)
class ConvergenceRow:
    depth: int
    n_times: int
    pi_star_cost: float
    lp_cost: float | None
    gap: float | None
    successive_gap: float | None

    def as_list(self) -> list:
        return [self.depth, self.n_times, self.pi_star_cost, self.lp_cost, self.gap, self.successive_gap]


def convergence_table(
    law: Callable[[float], DiscreteDistribution],
    T: float,
    depths: Sequence[int],
    h: str | Profile = "neg_square",
    m: int | None = None,
    budget: int = LP_BUDGET,
    **params,
) -> list[ConvergenceRow]:
    """Quantile-plan cost per dyadic depth, with the LP value where affordable."""
    prof = get_profile(h, **params)
    rows = []
    prev = None
    for n in depths:
        part = dyadic_partitions(T, n)
        fam = MarginalFamily.from_callable(law, part.times, T)
        plan = continuum_quantile_plan(fam, part, m)
        cost = pass_cost(plan, part, prof)
        lp_cost = gap = None
        if lp_size(fam, part) <= budget:
            cmp = compare_with_lp(fam, part, prof, budget=budget)
            lp_cost, gap = cmp.lp_objective, cmp.gap
        elif n == depths[0]:
            warnings.warn(f"depth {n}: LP above budget, reporting the quantile plan only")
        succ = None if prev is None else abs(cost - prev)
        rows.append(ConvergenceRow(n, len(part), cost, lp_cost, gap, succ))
        prev = cost
    return rows
