"""Test-function families ``F`` on a finite grid.

Every test function stores a centering constant, so a probability ``P`` is
admissible when ``integral(f dP) = 0`` for all ``f`` in the family. On a
finite grid the continuous bounded test classes are replaced by indicator
generating sets, which span the same constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .expression import Expression, parse_expression
from .measures import DiscreteDistribution, DiscreteMeasure

COORD_TOL = 1e-12


class InstanceError(ValueError):
    """A family or instance that is inconsistent with its grid."""


class EvaluationError(ValueError):
    """A test function evaluated outside its domain."""


def _key(p) -> tuple:
    return tuple(float(v) for v in np.atleast_1d(p))


class TestFunction:
    """Base class. ``values(points)`` returns ``raw(points) - center``."""

    __test__ = False  # keep pytest from collecting this as a test class
    center: float = 0.0

    def raw(self, pts: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def values(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.raw(pts) - self.center

    def __call__(self, point) -> float:
        return float(self.values(np.atleast_2d(point))[0])


@dataclass(frozen=True)
class MarginalIndicator(TestFunction):
    """``1{z_axis = atom} - center``; with ``center = mu_axis({atom})``."""

    axis: int
    atom: float
    center: float = 0.0

    def raw(self, pts):
        if self.axis >= pts.shape[1]:
            raise EvaluationError(f"axis {self.axis} out of range for dimension {pts.shape[1]}")
        return (np.abs(pts[:, self.axis] - self.atom) <= COORD_TOL).astype(float)

    def to_dict(self):
        return {"kind": "marginal_indicator", "axis": self.axis, "atom": self.atom, "center": self.center}


@dataclass(frozen=True)
class MartingaleIncrement(TestFunction):
    """``(z_{l+1} - z_l) * 1{(z_1..z_l) = prefix}`` with ``l = len(prefix)``.

    Coordinates are 1-based in this formula; in array terms the increment is
    ``z[l] - z[l-1]`` and the prefix is ``z[:l]``.
    """

    prefix: tuple
    center: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "prefix", _key(self.prefix))
        if len(self.prefix) < 1:
            raise InstanceError("martingale prefix must have length >= 1")

    @property
    def level(self) -> int:
        return len(self.prefix)

    def raw(self, pts):
        l = self.level
        if l >= pts.shape[1]:
            raise EvaluationError(f"level {l} needs dimension > {l}, got {pts.shape[1]}")
        match = np.all(np.abs(pts[:, :l] - np.asarray(self.prefix)) <= COORD_TOL, axis=1)
        return np.where(match, pts[:, l] - pts[:, l - 1], 0.0)

    def to_dict(self):
        return {"kind": "martingale_increment", "prefix": list(self.prefix), "center": self.center}


@dataclass(frozen=True)
class Tabulated(TestFunction):
    """Explicit values on a finite point set; evaluating elsewhere is an error."""

    table: Mapping
    center: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "table", {_key(k): float(v) for k, v in self.table.items()})

    def raw(self, pts):
        try:
            return np.array([self.table[_key(p)] for p in pts], dtype=float)
        except KeyError as exc:
            raise EvaluationError(f"tabulated function undefined at {exc.args[0]}") from None

    def to_dict(self):
        return {
            "kind": "tabulated",
            "points": [list(k) for k in self.table],
            "values": list(self.table.values()),
            "center": self.center,
        }


@dataclass(frozen=True)
class ExpressionFunction(TestFunction):
    source: str
    center: float = 0.0
    expr: Expression = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "expr", parse_expression(self.source))

    def raw(self, pts):
        return np.asarray(self.expr(pts), dtype=float)

    def to_dict(self):
        return {"kind": "expression", "expr": self.source, "center": self.center}


@dataclass(frozen=True)
class ConstraintFamily:
    """A finite generating set of test functions plus a growth bound ``g``.

    ``growth_bound`` is a table ``{point: g(point)}``; ``None`` means ``g = 1``.
    """

    functions: tuple = ()
    growth_bound: Mapping | None = None

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        if self.growth_bound is not None:
            object.__setattr__(
                self, "growth_bound", {_key(k): float(v) for k, v in self.growth_bound.items()}
            )

    def __len__(self) -> int:
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __add__(self, other: "ConstraintFamily") -> "ConstraintFamily":
        gb = self.growth_bound if self.growth_bound is not None else other.growth_bound
        return ConstraintFamily(self.functions + other.functions, gb)

    def matrix(self, points) -> np.ndarray:
        """Row ``k`` holds ``f_k - center_k`` evaluated at every point."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.functions:
            return np.zeros((0, pts.shape[0]))
        return np.vstack([f.values(pts) for f in self.functions])

    def g(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.growth_bound is None:
            return np.ones(pts.shape[0])
        try:
            return np.array([self.growth_bound[_key(p)] for p in pts])
        except KeyError as exc:
            raise EvaluationError(f"growth bound undefined at {exc.args[0]}") from None

    def to_dict(self) -> dict:
        out = {"functions": [f.to_dict() for f in self.functions]}
        if self.growth_bound is not None:
            out["growth_bound"] = {
                "points": [list(k) for k in self.growth_bound],
                "values": list(self.growth_bound.values()),
            }
        return out

    @classmethod
    def from_dict(cls, data) -> "ConstraintFamily":
        if isinstance(data, list):
            data = {"functions": data}
        funcs = tuple(function_from_dict(d) for d in data.get("functions", ()))
        gb = data.get("growth_bound")
        if gb is not None:
            gb = dict(zip(map(tuple, gb["points"]), gb["values"]))
        return cls(funcs, gb)


def function_from_dict(d: dict) -> TestFunction:
    kind = d.get("kind")
    center = float(d.get("center", 0.0))
    if kind == "marginal_indicator":
        return MarginalIndicator(int(d["axis"]), float(d["atom"]), center)
    if kind == "martingale_increment":
        return MartingaleIncrement(tuple(d["prefix"]), center)
    if kind == "tabulated":
        return Tabulated(dict(zip(map(tuple, d["points"]), d["values"])), center)
    if kind == "expression":
        return ExpressionFunction(d["expr"], center)
    raise InstanceError(f"unknown test function kind {kind!r}")


def _grid_array(grid) -> np.ndarray:
    pts = np.asarray(grid, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    return pts


def marginal_family(
    dist: DiscreteDistribution, axis: int, grid=None
) -> ConstraintFamily:
    """Indicators ``1{z_axis = a} - dist({a})`` for every atom ``a``."""
    funcs = tuple(MarginalIndicator(axis, float(a), float(w)) for a, w in zip(dist.atoms, dist.weights))
    if grid is not None:
        pts = _grid_array(grid)
        _check_support(pts[:, axis], dist, axis)
    return ConstraintFamily(funcs)


def _check_support(coords, dist, axis):
    idx = np.searchsorted(dist.atoms, coords - COORD_TOL)
    idx = np.minimum(idx, len(dist) - 1)
    off = np.abs(dist.atoms[idx] - coords) > COORD_TOL
    if np.any(off):
        bad = coords[np.flatnonzero(off)[0]]
        raise InstanceError(f"grid coordinate {bad} on axis {axis} is not an atom of its marginal")


def multi_marginal_family(marginals: Sequence[DiscreteDistribution], grid) -> ConstraintFamily:
    """Generating set for the multi-marginal constraints on ``grid``.

    One centered indicator per axis and atom, so ``sum_i len(marginals[i])``
    functions in total.
    """
    pts = _grid_array(grid)
    if pts.shape[1] != len(marginals):
        raise InstanceError(f"grid dimension {pts.shape[1]} != {len(marginals)} marginals")
    fam = ConstraintFamily()
    for axis, dist in enumerate(marginals):
        fam = fam + marginal_family(dist, axis, pts)
    return fam


def martingale_family(grid) -> ConstraintFamily:
    """Increment functions for every level and every prefix present in ``grid``."""
    pts = _grid_array(grid)
    n = pts.shape[1]
    if n < 2:
        raise InstanceError("martingale constraints need dimension >= 2")
    funcs = []
    for level in range(1, n):
        prefixes = np.unique(pts[:, :level], axis=0)
        funcs.extend(MartingaleIncrement(tuple(p)) for p in prefixes)
    return ConstraintFamily(tuple(funcs))


def evaluate_moment(f: TestFunction, m: DiscreteMeasure) -> float:
    """``sum_i mass_i * (f(point_i) - center)``."""
    if len(m) == 0:
        return 0.0
    return float(f.values(m.points) @ m.masses)


@dataclass(frozen=True)
class GrowthReport:
    bounds: tuple  # a_f per function, None where undefined
    ok: bool

    def failures(self) -> list[int]:
        return [i for i, a in enumerate(self.bounds) if a is None]


def validate_growth_bound(family: ConstraintFamily, grid) -> GrowthReport:
    """Compute ``a_f = max |f| / g`` over the grid for every function.

    A point with ``g = 0`` and ``f != 0`` leaves ``a_f`` undefined (``None``)
    and fails the report.
    """
    pts = _grid_array(grid)
    g = family.g(pts)
    if np.any(g < 0):
        raise InstanceError("growth bound must be nonnegative")
    bounds = []
    for f in family.functions:
        vals = np.abs(f.values(pts))
        if np.any((g == 0) & (vals > 0)):
            bounds.append(None)
            continue
        pos = g > 0
        bounds.append(float(np.max(vals[pos] / g[pos], initial=0.0)))
    return GrowthReport(tuple(bounds), all(a is not None for a in bounds))
