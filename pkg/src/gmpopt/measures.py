"""Finitely supported distributions on the line and measures on product grids."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ATOM_TOL = 1e-12
WEIGHT_TOL = 1e-12


class DegenerateMeasureError(ValueError):
    """Raised when an operation needs positive total mass and gets none."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _merge_sorted(atoms: np.ndarray, weights: np.ndarray, tol: float):
    """Merge consecutive sorted atoms closer than ``tol``, summing weights."""
    if atoms.size == 0:
        return atoms, weights
    keep = np.concatenate(([True], np.diff(atoms) > tol))
    groups = np.cumsum(keep) - 1
    merged_w = np.bincount(groups, weights=weights)
    return atoms[keep], merged_w


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """A probability law on finitely many real atoms.

    Atoms are sorted on construction and atoms within ``1e-12`` of each other
    are merged, so two distributions describing the same law have identical
    arrays. Zero-weight atoms are kept out.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if atoms.shape != weights.shape:
            raise ValueError("atoms and weights must have the same length")
        if atoms.size == 0:
            raise ValueError("a distribution needs at least one atom")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(weights))):
            raise ValueError("atoms and weights must be finite")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL * max(1, atoms.size):
            raise ValueError(f"weights sum to {weights.sum()!r}, not 1")
        order = np.argsort(atoms, kind="stable")
        atoms, weights = _merge_sorted(atoms[order], weights[order], ATOM_TOL)
        pos = weights > 0
        object.__setattr__(self, "atoms", _frozen(atoms[pos].copy()))
        object.__setattr__(self, "weights", _frozen(weights[pos].copy()))

    @classmethod
    def from_weights(cls, atoms: Sequence[float], weights: Sequence[float]) -> "DiscreteDistribution":
        """Build a distribution after normalizing nonnegative ``weights``."""
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if total <= 0:
            raise DegenerateMeasureError("weights have zero total")
        return cls(atoms, w / total)

    @classmethod
    def uniform(cls, atoms: Sequence[float]) -> "DiscreteDistribution":
        atoms = np.asarray(atoms, dtype=float)
        return cls(atoms, np.full(atoms.size, 1.0 / atoms.size))

    @classmethod
    def point_mass(cls, x: float) -> "DiscreteDistribution":
        return cls([x], [1.0])

    def __len__(self) -> int:
        return self.atoms.size

    def __repr__(self) -> str:
        body = ", ".join(f"{w:.6g}@{a:.6g}" for a, w in zip(self.atoms, self.weights))
        return f"DiscreteDistribution({body})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return (
            self.atoms.shape == other.atoms.shape
            and np.allclose(self.atoms, other.atoms, rtol=0, atol=ATOM_TOL)
            and np.allclose(self.weights, other.weights, rtol=0, atol=WEIGHT_TOL)
        )

    __hash__ = None

    @property
    def cumulative(self) -> np.ndarray:
        """CDF values at the atoms, with the last entry pinned to exactly 1."""
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        return cum

    def mean(self) -> float:
        return float(self.weights @ self.atoms)

    def potential(self, k) -> np.ndarray:
        """``k -> sum_i w_i |x_i - k|``, vectorized over ``k``."""
        k = np.asarray(k, dtype=float)
        return np.abs(self.atoms[None, :] - k.reshape(-1, 1)) @ self.weights

    def to_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteDistribution":
        return cls.from_weights(data["atoms"], data["weights"])


def quantile(dist: DiscreteDistribution, u):
    """Left-continuous generalized inverse ``inf{y : F(y) >= u}``.

    ``u`` may be a scalar or an array; every entry must lie in the open
    interval (0, 1).
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0) | (u_arr >= 1)) or np.any(np.isnan(u_arr)):
        raise ValueError("quantile levels must lie strictly inside (0, 1)")
    idx = np.searchsorted(dist.cumulative, u_arr, side="left")
    idx = np.minimum(idx, len(dist) - 1)
    out = dist.atoms[idx]
    return float(out) if np.ndim(out) == 0 else out


def cdf(dist: DiscreteDistribution, y):
    """Right-continuous CDF: total weight of atoms ``<= y``."""
    y_arr = np.asarray(y, dtype=float)
    idx = np.searchsorted(dist.atoms, y_arr, side="right")
    cum = np.concatenate(([0.0], dist.cumulative))
    out = cum[idx]
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """A nonnegative measure on finitely many points of ``R^d``.

    Points are stored as an ``(N, d)`` array. Duplicate points are merged and
    atoms with zero mass are dropped, so the representation is canonical up
    to ordering. A measure with total mass one doubles as a transport plan.
    """

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float).ravel()
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1) if masses.size != 1 else pts.reshape(1, -1)
        if pts.ndim != 2 or pts.shape[0] != masses.size:
            raise ValueError("points must be an (N, d) array matching masses")
        if pts.shape[0] and pts.shape[1] < 1:
            raise ValueError("points must have dimension >= 1")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(masses))):
            raise ValueError("points and masses must be finite")
        if np.any(masses < 0):
            raise ValueError("masses must be nonnegative")
        keep = masses > 0
        pts, masses = pts[keep], masses[keep]
        if pts.shape[0] > 1:
            uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
            if uniq.shape[0] < pts.shape[0]:
                masses = np.bincount(inverse.ravel(), weights=masses, minlength=uniq.shape[0])
                pts = uniq
        object.__setattr__(self, "points", _frozen(np.ascontiguousarray(pts)))
        object.__setattr__(self, "masses", _frozen(masses.copy()))

    @classmethod
    def from_atoms(cls, atoms: dict | Iterable, dim: int | None = None) -> "DiscreteMeasure":
        """Build from ``{point_tuple: mass}`` or an iterable of ``(point, mass)``."""
        items = list(atoms.items()) if isinstance(atoms, dict) else list(atoms)
        if not items:
            return cls.empty(dim or 1)
        pts = np.array([np.atleast_1d(np.asarray(p, dtype=float)) for p, _ in items])
        return cls(pts, [m for _, m in items])

    @classmethod
    def empty(cls, dim: int) -> "DiscreteMeasure":
        return cls(np.zeros((0, dim)), np.zeros(0))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def __len__(self) -> int:
        return self.masses.size

    def __repr__(self) -> str:
        body = ", ".join(
            f"{m:.6g}@{tuple(float(v) for v in p)}" for p, m in zip(self.points, self.masses)
        )
        return f"DiscreteMeasure({body})"

    def atoms(self) -> dict:
        """``{point_tuple: mass}`` view, convenient for assertions."""
        return {tuple(float(v) for v in p): float(m) for p, m in zip(self.points, self.masses)}

    def scaled(self, factor: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, self.masses * factor)

    def normalized(self) -> "DiscreteMeasure":
        total = self.total_mass
        if total <= 0:
            raise DegenerateMeasureError("cannot normalize a measure with zero mass")
        return self.scaled(1.0 / total)

    def combine(self, other: "DiscreteMeasure", a: float = 1.0, b: float = 1.0) -> "DiscreteMeasure":
        """The measure ``a * self + b * other`` (``a``, ``b`` >= 0)."""
        if len(self) and len(other) and self.dim != other.dim:
            raise ValueError("dimension mismatch")
        pts = np.vstack([self.points, other.points]) if len(other) else self.points
        if not len(self):
            pts = other.points
        masses = np.concatenate([a * self.masses, b * other.masses])
        return DiscreteMeasure(pts, masses)

    def restrict(self, index) -> "DiscreteMeasure":
        """Sub-measure on the atoms selected by ``index`` (masses inherited)."""
        index = np.asarray(index)
        return DiscreteMeasure(self.points[index], self.masses[index])

    def to_dict(self) -> dict:
        return {"points": self.points.tolist(), "masses": self.masses.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteMeasure":
        pts = np.asarray(data["points"], dtype=float)
        masses = np.asarray(data["masses"], dtype=float)
        if masses.size == 0:
            return cls.empty(pts.shape[1] if pts.ndim == 2 else 1)
        return cls(pts.reshape(masses.size, -1), masses)


# Probability-normalized measures are what the optimizers return.
TransportPlan = DiscreteMeasure


def marginal(m: DiscreteMeasure, axis: int, return_mass: bool = False):
    """Pushforward of the normalized ``m`` under the coordinate projection.

    With ``return_mass=True`` the total mass before normalization is returned
    as a second value.
    """
    if not 0 <= axis < m.dim:
        raise IndexError(f"axis {axis} out of range for dimension {m.dim}")
    total = m.total_mass
    if len(m) == 0 or total <= 0:
        raise DegenerateMeasureError("marginal of a zero measure is undefined")
    dist = DiscreteDistribution(m.points[:, axis], m.masses / total)
    return (dist, total) if return_mass else dist


def product_measure(dists: Sequence[DiscreteDistribution]) -> DiscreteMeasure:
    """Independent coupling: masses are products of the factor weights."""
    grids = np.meshgrid(*[d.atoms for d in dists], indexing="ij")
    wgrids = np.meshgrid(*[d.weights for d in dists], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    masses = np.prod(np.stack([w.ravel() for w in wgrids], axis=1), axis=1)
    return DiscreteMeasure(pts, masses)


def product_grid(supports: Sequence[Sequence[float]]) -> np.ndarray:
    """Cartesian product of 1-d supports as an ``(N, d)`` array, last axis fastest."""
    grids = np.meshgrid(*[np.asarray(s, dtype=float) for s in supports], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def convex_order(mu: DiscreteDistribution, nu: DiscreteDistribution, tol: float = 1e-9) -> bool:
    """True iff ``mu`` precedes ``nu`` in the convex order (up to ``tol``).

    Means must agree and the potential ``k -> E|X - k|`` of ``mu`` must stay
    below that of ``nu``. The potential of ``nu`` is linear between its atoms
    while the potential of ``mu`` is convex, so it is enough to compare at the
    atoms of ``nu`` and at the two means.
    """
    m_mu, m_nu = mu.mean(), nu.mean()
    if abs(m_mu - m_nu) > tol:
        return False
    ks = np.concatenate([nu.atoms, [m_mu, m_nu]])
    return bool(np.all(mu.potential(ks) <= nu.potential(ks) + tol))
