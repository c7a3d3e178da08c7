"""Optimality certificates on finite pieces of a plan.

A finite measure ``alpha`` has a *competitor* ``alpha'`` when both have the
same total mass and the same integral against every test function of the
family; the competitor is *better* when its cost is strictly lower. A plan
whose small sub-measures admit no better competitor is finitely minimal,
which every optimizer of the moment problem has to be. For two marginals
and marginal constraints this reduces to cyclical monotonicity of the
support, checked here independently with Bellman-Ford.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lp as _lp
from .constraints import ConstraintFamily
from .costs import CostSpec
from .measures import DiscreteMeasure, product_grid

IMPROVEMENT_TOL = 1e-9
CYCLE_SLACK = 1e-10
MAX_EXHAUSTIVE = 10_000


class Verdict(str, enum.Enum):
    CERTIFIED = "certified"
    VIOLATED = "violated"


@dataclass(frozen=True)
class CompetitorQuery:
    alpha: DiscreteMeasure
    candidate_points: np.ndarray
    cost: CostSpec
    family: ConstraintFamily
    improvement_tol: float = IMPROVEMENT_TOL

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.candidate_points, dtype=float))
        object.__setattr__(self, "candidate_points", pts)


@dataclass(frozen=True)
class Competitor:
    """A better competitor together with the cost it saves."""

    alpha: DiscreteMeasure
    alpha_prime: DiscreteMeasure
    cost_alpha: float
    cost_alpha_prime: float

    @property
    def margin(self) -> float:
        return self.cost_alpha - self.cost_alpha_prime

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.to_dict(),
            "alpha_prime": self.alpha_prime.to_dict(),
            "cost_alpha": self.cost_alpha,
            "cost_alpha_prime": self.cost_alpha_prime,
            "margin": self.margin,
        }


@dataclass(frozen=True)
class Cycle:
    """Support pairs (by index) whose cyclic reassignment ``x_i -> y_{i+1}`` saves cost."""

    indices: tuple
    pairs: np.ndarray
    original_cost: float
    rerouted_cost: float

    @property
    def margin(self) -> float:
        return self.original_cost - self.rerouted_cost

    def to_dict(self) -> dict:
        return {
            "indices": list(self.indices),
            "pairs": self.pairs.tolist(),
            "original_cost": self.original_cost,
            "rerouted_cost": self.rerouted_cost,
            "margin": self.margin,
        }


@dataclass(frozen=True)
class CertificateVerdict:
    status: Verdict
    witness: Competitor | Cycle | None = None
    margin: float = 0.0
    checked: int = 0
    exhaustive: bool = True
    details: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.status is Verdict.CERTIFIED

    def to_dict(self) -> dict:
        out = {
            "status": self.status.value,
            "margin": self.margin,
            "checked": self.checked,
            "exhaustive": self.exhaustive,
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
        out.update(self.details)
        return out


def projection_grid(points) -> np.ndarray:
    """Product of the per-axis coordinate sets of ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return product_grid([np.unique(pts[:, i]) for i in range(pts.shape[1])])


def _competitor_program(alpha: DiscreteMeasure, cand: np.ndarray, cost_vals, family):
    Mc = family.matrix(cand)
    target = family.matrix(alpha.points) @ alpha.masses if len(family) else np.zeros(0)
    # rows that vanish on the candidates and on alpha carry no information
    live = np.any(Mc != 0, axis=1) | (np.abs(target) > 0)
    A = np.vstack([Mc[live], np.ones((1, cand.shape[0]))])
    b = np.concatenate([target[live], [alpha.total_mass]])
    return _lp.LinearProgram(A, b, cost_vals)


def find_better_competitor(q: CompetitorQuery, feas_tol=_lp.FEAS_TOL, opt_tol=_lp.OPT_TOL):
    """Cheapest competitor of ``q.alpha`` on the candidate points, if it is better.

    Returns a :class:`Competitor` when the LP optimum undercuts
    ``cost(alpha)`` by more than ``improvement_tol * (1 + |cost(alpha)|)``,
    otherwise ``None``.
    """
    alpha = q.alpha
    if len(alpha) == 0:
        return None
    cand = q.candidate_points
    cost_alpha = float(q.cost(alpha.points) @ alpha.masses)
    cost_vals = q.cost(cand)
    program = _competitor_program(alpha, cand, cost_vals, q.family)
    res = _lp.solve_lp(program, feas_tol, opt_tol)
    if not res.optimal:
        raise _lp.SolverError(
            f"competitor LP reported {res.status.value}; alpha itself should be feasible "
            "(are the candidate points a superset of its support?)"
        )
    if res.objective < cost_alpha - q.improvement_tol * (1 + abs(cost_alpha)):
        x = np.where(res.x > 0, res.x, 0.0)
        prime = DiscreteMeasure(cand, x)
        return Competitor(alpha, prime, cost_alpha, float(q.cost(prime.points) @ prime.masses))
    return None


def _subsets(n: int, k: int, trials: int, rng):
    total = math.comb(n, k)
    if total <= MAX_EXHAUSTIVE:
        return itertools.combinations(range(n), k), total, True
    count = min(trials, total)

    def sample():
        seen = set()
        while len(seen) < count:
            s = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
            if s not in seen:
                seen.add(s)
                yield s

    return sample(), count, False


def is_finitely_minimal(
    plan: DiscreteMeasure,
    cost: CostSpec,
    family: ConstraintFamily,
    k: int = 2,
    trials: int = 1000,
    seed: int | None = 0,
    extend: bool = False,
    improvement_tol: float = IMPROVEMENT_TOL,
    feas_tol: float = _lp.FEAS_TOL,
    opt_tol: float = _lp.OPT_TOL,
) -> CertificateVerdict:
    """Search sub-measures of ``plan`` on ``k`` atoms for a better competitor.

    Each sub-measure keeps the plan's masses on its atoms (scaled down when
    the plan has mass above one). Competitors live on the product of the
    sub-measure's coordinate projections, or on the product of the whole
    plan's projections when ``extend`` is set. Only subsets of exactly
    ``min(k, len(plan))`` atoms are tried: a better competitor of a smaller
    sub-measure also improves every sub-measure containing it, because the
    larger candidate grid contains the smaller one.

    All subsets are checked when there are at most ``MAX_EXHAUSTIVE`` of
    them; otherwise ``trials`` distinct random subsets drawn with ``seed``.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    n = len(plan)
    if n == 0:
        return CertificateVerdict(Verdict.CERTIFIED, checked=0)
    scale = 1.0 / plan.total_mass if plan.total_mass > 1 else 1.0
    k_eff = min(k, n)
    rng = np.random.default_rng(seed)
    subsets, planned, exhaustive = _subsets(n, k_eff, trials, rng)
    full_grid = projection_grid(plan.points) if extend else None
    checked = 0
    for idx in subsets:
        alpha = DiscreteMeasure(plan.points[list(idx)], plan.masses[list(idx)] * scale)
        cand = full_grid if extend else projection_grid(alpha.points)
        q = CompetitorQuery(alpha, cand, cost, family, improvement_tol)
        found = find_better_competitor(q, feas_tol, opt_tol)
        checked += 1
        if found is not None:
            return CertificateVerdict(
                Verdict.VIOLATED, found, found.margin, checked, exhaustive,
                {"planned": planned, "subset": list(idx)},
            )
    return CertificateVerdict(Verdict.CERTIFIED, None, 0.0, checked, exhaustive, {"planned": planned})


def check_cyclical_monotone(pairs, cost: CostSpec, slack: float = CYCLE_SLACK) -> CertificateVerdict:
    """Negative-cycle test for c-cyclical monotonicity of a finite set of pairs.

    Edge ``p -> q`` carries ``c(x_p, y_q) - c(x_p, y_p)``; a cycle of negative
    total weight is a cyclic reassignment that lowers the cost. Bellman-Ford
    runs from a virtual source joined to every node with weight zero.
    """
    P = np.atleast_2d(np.asarray(pairs, dtype=float))
    if P.shape[1] != 2:
        raise ValueError("cyclical monotonicity needs two-dimensional points")
    n = P.shape[0]
    if n < 2:
        return CertificateVerdict(Verdict.CERTIFIED, checked=n)
    xs, ys = P[:, 0], P[:, 1]
    cross = np.stack([np.repeat(xs, n), np.tile(ys, n)], axis=1)
    C = cost(cross).reshape(n, n)  # C[p, q] = c(x_p, y_q)
    W = C - np.diag(C)[:, None]
    np.fill_diagonal(W, 0.0)
    eps = slack / n

    dist = np.zeros(n)
    pred = np.full(n, -1)
    updated = -1
    # n + 1 nodes with the virtual source, so n passes settle all shortest paths
    for _ in range(n):
        updated = -1
        for u in range(n):
            cand = dist[u] + W[u]
            cand[u] = np.inf
            better = np.flatnonzero(cand < dist - eps)
            if better.size:
                dist[better] = cand[better]
                pred[better] = u
                updated = int(better[0])
        if updated < 0:
            return CertificateVerdict(Verdict.CERTIFIED, checked=n)

    v = updated
    for _ in range(n):
        if pred[v] < 0:  # pragma: no cover - cannot happen after n passes
            break
        v = int(pred[v])
    cycle = [v]
    u = int(pred[v])
    while u != v and len(cycle) <= n:
        cycle.append(u)
        u = int(pred[u])
    cycle.reverse()  # pred points backwards along edges
    idx = tuple(int(i) for i in cycle)
    nxt = idx[1:] + idx[:1]
    original = float(sum(C[i, i] for i in idx))
    rerouted = float(sum(C[i, j] for i, j in zip(idx, nxt)))
    if original - rerouted <= slack:  # pragma: no cover - tolerance corner
        return CertificateVerdict(Verdict.CERTIFIED, checked=n, details={"borderline": original - rerouted})
    witness = Cycle(idx, P[list(idx)], original, rerouted)
    return CertificateVerdict(Verdict.VIOLATED, witness, witness.margin, n)


def reroute_cost(cycle: Cycle, cost: CostSpec) -> tuple[float, float]:
    """Recompute ``(sum c(x_i, y_i), sum c(x_i, y_{i+1}))`` for a cycle witness."""
    P = cycle.pairs
    nxt = np.roll(P[:, 1], -1)
    orig = float(cost(P).sum())
    rer = float(cost(np.stack([P[:, 0], nxt], axis=1)).sum())
    return orig, rer


def monotone_swap(f, g, subset: Sequence[int] | None = None):
    """Coordinatewise ``max``/``min`` of two points on ``subset`` (all axes if ``None``).

    Returns ``(f', g')`` with ``f' = max(f, g)`` and ``g' = min(f, g)`` on the
    chosen axes and ``f' = f``, ``g' = g`` elsewhere. Each axis keeps its
    pair of values, so the two-point measure keeps its marginals.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ValueError("points must have equal dimension")
    mask = np.zeros(f.shape, dtype=bool)
    if subset is None:
        mask[:] = True
    else:
        mask[list(subset)] = True
    f2 = np.where(mask, np.maximum(f, g), f)
    g2 = np.where(mask, np.minimum(f, g), g)
    return f2, g2
