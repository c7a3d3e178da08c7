"""Cost functions on grid points and the concave profiles ``h``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .expression import Expression, parse_expression


class CostError(ValueError):
    pass


@dataclass(frozen=True)
class Profile:
    """A named scalar function ``h`` with a flag for strict concavity."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    strictly_concave: bool
    params: tuple = ()

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(all="ignore"):
            out = self.func(s)
        if not np.all(np.isfinite(out)):
            raise CostError(f"h={self.name} is not finite on the given arguments")
        return out

    def to_dict(self) -> dict:
        return {"h": self.name, "params": dict(self.params)}


def _neg_square(**_):
    return lambda s: -(s**2), True


def _neg_abs_p(p=1.5, **_):
    if p <= 1:
        raise CostError("neg_abs_p needs p > 1 to be strictly concave")
    return lambda s: -np.abs(s) ** p, True


def _log_shift(kappa=1.0, **_):
    return lambda s: np.where(s + kappa > 0, np.log(np.maximum(s + kappa, 1e-300)), np.nan), True


def _linear(slope=1.0, intercept=0.0, **_):
    return lambda s: slope * s + intercept, False


def _neg_exp(rate=1.0, **_):
    return lambda s: -np.exp(rate * s), rate != 0


_PROFILES = {
    "neg_square": _neg_square,
    "neg_abs_p": _neg_abs_p,
    "log_shift": _log_shift,
    "linear": _linear,
    "neg_exp": _neg_exp,
}


def get_profile(name: str, **params) -> Profile:
    """Look up a built-in ``h`` by id, e.g. ``get_profile("neg_abs_p", p=1.5)``."""
    if isinstance(name, Profile):
        return name
    try:
        factory = _PROFILES[name]
    except KeyError:
        raise CostError(f"unknown h id {name!r}; known: {sorted(_PROFILES)}") from None
    func, strict = factory(**params)
    return Profile(name, func, strict, tuple(sorted(params.items())))


def profile_names() -> list[str]:
    return sorted(_PROFILES)


class CostSpec:
    """Base class: ``cost(points)`` maps an ``(N, d)`` array to ``N`` values."""

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.asarray(self._evaluate(pts), dtype=float)
        if not np.all(np.isfinite(out)):
            raise CostError("cost is not finite on every point")
        return out

    def _evaluate(self, pts):  # pragma: no cover - abstract
        raise NotImplementedError

    def shifted(self, constant: float) -> "CostSpec":
        return ShiftedCost(self, float(constant))

    def negated(self) -> "CostSpec":
        return ScaledCost(self, -1.0)


@dataclass(frozen=True)
class TabulatedCost(CostSpec):
    """Cost given by a table ``{point_tuple: value}``; undefined elsewhere."""

    table: Mapping

    def __post_init__(self):
        clean = {tuple(float(v) for v in np.atleast_1d(k)): float(val) for k, val in self.table.items()}
        object.__setattr__(self, "table", clean)

    def _evaluate(self, pts):
        try:
            return np.array([self.table[tuple(float(v) for v in p)] for p in pts])
        except KeyError as exc:
            raise CostError(f"tabulated cost undefined at {exc.args[0]}") from None

    def to_dict(self) -> dict:
        return {"kind": "tabulated", "points": [list(k) for k in self.table], "values": list(self.table.values())}


@dataclass(frozen=True)
class ExpressionCost(CostSpec):
    """Cost written as an arithmetic expression in ``x1 .. xn``."""

    source: str
    expr: Expression = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "expr", parse_expression(self.source))

    def _evaluate(self, pts):
        return self.expr(pts)

    def to_dict(self) -> dict:
        return {"kind": "expression", "expr": self.source}


@dataclass(frozen=True)
class ConcaveOfSum(CostSpec):
    """``z -> h(sum_i weights_i * z_i)``; ``weights=None`` means all ones."""

    h: Profile
    weights: tuple | None = None

    def __post_init__(self):
        if not isinstance(self.h, Profile):
            object.__setattr__(self, "h", get_profile(self.h))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def strictly_concave(self) -> bool:
        return self.h.strictly_concave

    def linear_part(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.weights is None:
            return pts.sum(axis=1)
        if len(self.weights) != pts.shape[1]:
            raise CostError(f"{len(self.weights)} weights for points of dimension {pts.shape[1]}")
        return pts @ np.asarray(self.weights)

    def _evaluate(self, pts):
        return self.h(self.linear_part(pts))

    def to_dict(self) -> dict:
        out = {"kind": "concave_of_sum", **self.h.to_dict()}
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out


@dataclass(frozen=True)
class ShiftedCost(CostSpec):
    base: CostSpec
    constant: float

    def _evaluate(self, pts):
        return self.base(pts) + self.constant

    def to_dict(self) -> dict:
        return {"kind": "shifted", "base": cost_to_dict(self.base), "constant": self.constant}


@dataclass(frozen=True)
class ScaledCost(CostSpec):
    base: CostSpec
    factor: float

    def _evaluate(self, pts):
        return self.factor * self.base(pts)

    def to_dict(self) -> dict:
        return {"kind": "scaled", "base": cost_to_dict(self.base), "factor": self.factor}


@dataclass(frozen=True)
class FunctionCost(CostSpec):
    """Wrap a vectorized Python callable (not serializable)."""

    func: Callable

    def _evaluate(self, pts):
        return self.func(pts)


def tabulate(cost: CostSpec, points) -> TabulatedCost:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return TabulatedCost(dict(zip(map(tuple, pts.tolist()), cost(pts).tolist())))


def cost_to_dict(cost: CostSpec) -> dict:
    if not hasattr(cost, "to_dict"):
        raise CostError(f"{type(cost).__name__} cannot be serialized")
    return cost.to_dict()


def cost_from_dict(data) -> CostSpec:
    """Inverse of :func:`cost_to_dict`; a bare string is read as an expression."""
    if isinstance(data, str):
        return ExpressionCost(data)
    kind = data.get("kind")
    if kind == "expression":
        return ExpressionCost(data["expr"])
    if kind == "tabulated":
        return TabulatedCost(dict(zip(map(tuple, data["points"]), data["values"])))
    if kind == "concave_of_sum":
        h = get_profile(data["h"], **data.get("params", {}))
        return ConcaveOfSum(h, data.get("weights"))
    if kind == "shifted":
        return ShiftedCost(cost_from_dict(data["base"]), float(data["constant"]))
    if kind == "scaled":
        return ScaledCost(cost_from_dict(data["base"]), float(data["factor"]))
    raise CostError(f"unknown cost kind {kind!r}")


def concave_of_sum(h: str = "neg_square", weights: Sequence[float] | None = None, **params) -> ConcaveOfSum:
    return ConcaveOfSum(get_profile(h, **params), weights)
