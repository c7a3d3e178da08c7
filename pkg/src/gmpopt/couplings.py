"""Comonotone (quantile) couplings and their rectangle characterization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measures import DiscreteDistribution, DiscreteMeasure, quantile

BREAKPOINT_TOL = 1e-12
MAX_DENSE_CORNERS = 200_000


def stratified_levels(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints ``(2k - 1) / 2m`` of ``m`` equal cells, each of weight ``1/m``."""
    if m < 1:
        raise ValueError("need at least one level")
    k = np.arange(1, m + 1)
    return (2 * k - 1) / (2 * m), np.full(m, 1.0 / m)


def breakpoint_levels(marginals: Sequence[DiscreteDistribution]) -> tuple[np.ndarray, np.ndarray]:
    """Cells cut at every marginal's CDF values; returns (midpoints, cell lengths).

    Every quantile function is constant on each cell, so the coupling built on
    these levels has exactly the prescribed marginals.
    """
    cuts = np.concatenate([[0.0, 1.0]] + [d.cumulative for d in marginals])
    cuts = np.unique(np.clip(cuts, 0.0, 1.0))
    keep = np.concatenate(([True], np.diff(cuts) > BREAKPOINT_TOL))
    cuts = cuts[keep]
    cuts[-1] = 1.0
    return 0.5 * (cuts[:-1] + cuts[1:]), np.diff(cuts)


@dataclass(frozen=True)
class QuantilePlanSpec:
    """Marginals plus the quantile levels at which they are evaluated jointly.

    Leaving ``levels`` unset selects the breakpoint levels of the marginals,
    which are exact for any discrete marginals and coincide with the ``m``
    stratified midpoints when all marginals are uniform on ``m`` atoms.
    """

    marginals: tuple
    levels: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if not self.marginals:
            raise ValueError("need at least one marginal")
        if self.levels is None:
            lv, w = breakpoint_levels(self.marginals)
        else:
            lv = np.asarray(self.levels, dtype=float)
            w = (
                np.full(lv.size, 1.0 / lv.size)
                if self.weights is None
                else np.asarray(self.weights, dtype=float)
            )
            if lv.shape != w.shape:
                raise ValueError("levels and weights differ in length")
            if np.any(np.diff(lv) <= 0):
                raise ValueError("levels must be strictly increasing")
            if np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
                raise ValueError("level weights must be positive and sum to 1")
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "weights", w)

    @classmethod
    def stratified(cls, marginals, m: int) -> "QuantilePlanSpec":
        lv, w = stratified_levels(m)
        return cls(tuple(marginals), lv, w)


def quantile_coupling(spec: QuantilePlanSpec | Sequence[DiscreteDistribution]) -> DiscreteMeasure:
    """Law of ``(q_1(U), ..., q_n(U))`` with ``U`` on the spec's levels."""
    if not isinstance(spec, QuantilePlanSpec):
        spec = QuantilePlanSpec(tuple(spec))
    cols = [np.atleast_1d(quantile(d, spec.levels)) for d in spec.marginals]
    return DiscreteMeasure(np.stack(cols, axis=1), spec.weights)


def is_monotone_set(points) -> bool:
    """True iff the points form a chain for the componentwise order.

    Sorting lexicographically puts any chain in increasing order, so it is
    enough to check that consecutive sorted points are ordered.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] <= 1:
        return True
    order = np.lexsort(pts.T[::-1])
    s = pts[order]
    return bool(np.all(s[1:] >= s[:-1]))


def rectangle_mass(plan: DiscreteMeasure, a) -> float:
    """Mass of the lower orthant ``{z : z_i <= a_i for all i}``."""
    a = np.asarray(a, dtype=float).ravel()
    if len(plan) == 0:
        return 0.0
    if a.size != plan.dim:
        raise ValueError("corner dimension does not match the plan")
    inside = np.all(plan.points <= a, axis=1)
    return float(plan.masses[inside].sum())


def _orthant_masses(plan: DiscreteMeasure, corners: np.ndarray, chunk: int = 4096) -> np.ndarray:
    out = np.empty(corners.shape[0])
    for s in range(0, corners.shape[0], chunk):
        c = corners[s : s + chunk]
        inside = np.all(plan.points[None, :, :] <= c[:, None, :], axis=2)
        out[s : s + chunk] = inside @ plan.masses
    return out


def rectangle_corners(p1: DiscreteMeasure, p2: DiscreteMeasure) -> np.ndarray:
    """Corners for the rectangle comparison of two plans.

    The full product of the per-axis coordinate unions when it is small;
    otherwise the union of both supports. The smaller set still separates
    distinct measures: a componentwise-minimal atom of the difference is
    the only atom of the difference inside its own orthant.
    """
    pts = np.vstack([p1.points, p2.points])
    axes = [np.unique(pts[:, i]) for i in range(pts.shape[1])]
    size = int(np.prod([len(a) for a in axes], dtype=float))
    if size <= MAX_DENSE_CORNERS:
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)
    return np.unique(pts, axis=0)


def rectangle_gap(p1: DiscreteMeasure, p2: DiscreteMeasure) -> float:
    """Largest difference of lower-orthant masses over the comparison corners."""
    if len(p1) == 0 and len(p2) == 0:
        return 0.0
    if len(p1) and len(p2) and p1.dim != p2.dim:
        raise ValueError("plans have different dimensions")
    corners = rectangle_corners(p1, p2)
    return float(np.max(np.abs(_orthant_masses(p1, corners) - _orthant_masses(p2, corners))))


def plans_equal_on_rectangles(p1: DiscreteMeasure, p2: DiscreteMeasure, tol: float = 1e-9) -> bool:
    return rectangle_gap(p1, p2) <= tol
