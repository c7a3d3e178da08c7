"""Discrete generalized moment problem.

Minimize ``integral(c dP)`` over probability measures ``P`` on a finite grid
with ``integral(f dP) = 0`` for every test function ``f`` of a family. The
LP has one column per grid point, one row per test function and a final
total-mass row.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lp as _lp
from .constraints import (
    ConstraintFamily,
    EvaluationError,
    InstanceError,
    evaluate_moment,
    martingale_family,
    multi_marginal_family,
    marginal_family,
)
from .costs import CostError, CostSpec, cost_from_dict, cost_to_dict
from .measures import DiscreteDistribution, DiscreteMeasure, convex_order, product_grid


class InternalError(RuntimeError):
    """A solver outcome that cannot occur for a valid instance."""


@dataclass(frozen=True, eq=False)
class GmpInstance:
    grid: np.ndarray
    cost: CostSpec
    family: ConstraintFamily
    cost_values: np.ndarray = field(repr=False)
    moment_matrix: np.ndarray = field(repr=False)

    @property
    def n_points(self) -> int:
        return self.grid.shape[0]

    @property
    def dim(self) -> int:
        return self.grid.shape[1]

    def program(self, cost_values=None) -> _lp.LinearProgram:
        """The LP: family rows (rhs 0) followed by the mass row (rhs 1)."""
        A = np.vstack([self.moment_matrix, np.ones((1, self.n_points))])
        b = np.zeros(A.shape[0])
        b[-1] = 1.0
        c = self.cost_values if cost_values is None else cost_values
        return _lp.LinearProgram(A, b, c)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.tolist(),
            "cost": cost_to_dict(self.cost),
            "family": self.family.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GmpInstance":
        return build_instance(
            data["grid"], cost_from_dict(data["cost"]), ConstraintFamily.from_dict(data.get("family", []))
        )


def build_instance(grid, cost: CostSpec, family: ConstraintFamily) -> GmpInstance:
    """Validate the grid and tabulate cost and test functions on it."""
    pts = np.asarray(grid, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.shape[0] == 0:
        raise InstanceError("grid is empty")
    if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
        raise InstanceError("grid points must be distinct")
    try:
        cvals = cost(pts)
        M = family.matrix(pts)
    except (EvaluationError, CostError) as exc:
        raise InstanceError(str(exc)) from exc
    pts.setflags(write=False)
    return GmpInstance(pts, cost, family, cvals, M)


@dataclass(frozen=True, eq=False)
class Solution:
    status: _lp.Status
    plan: DiscreteMeasure | None = None
    objective: float | None = None
    residual: float | None = None
    lp_result: _lp.LpResult | None = field(default=None, repr=False)
    certificate: _lp.CertificateReport | None = None
    farkas: np.ndarray | None = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is _lp.Status.OPTIMAL

    def to_dict(self) -> dict:
        out = {"status": self.status.value, "diagnostics": self.diagnostics}
        if self.optimal:
            out.update(
                objective=self.objective,
                residual=self.residual,
                plan=self.plan.to_dict(),
                certificate=self.certificate.to_dict(),
                lp=self.lp_result.to_dict(),
            )
        if self.farkas is not None:
            out["farkas"] = self.farkas.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Solution":
        status = _lp.Status(data["status"])
        plan = DiscreteMeasure.from_dict(data["plan"]) if "plan" in data else None
        lp_result = _lp.LpResult.from_dict(data["lp"]) if "lp" in data else None
        cert = _lp.CertificateReport(**data["certificate"]) if "certificate" in data else None
        farkas = np.asarray(data["farkas"]) if "farkas" in data else None
        return cls(
            status,
            plan,
            data.get("objective"),
            data.get("residual"),
            lp_result,
            cert,
            farkas,
            data.get("diagnostics", {}),
        )


def plan_from_vector(grid, x) -> DiscreteMeasure:
    x = np.where(np.asarray(x) > 0, x, 0.0)
    return DiscreteMeasure(grid, x)


def moment_residual(family: ConstraintFamily, plan: DiscreteMeasure) -> float:
    """Largest ``|integral(f dplan)|`` over the family."""
    return max((abs(evaluate_moment(f, plan)) for f in family.functions), default=0.0)


def _finish(instance, result, feas_tol, opt_tol, diagnostics=None) -> Solution:
    diagnostics = dict(diagnostics or {})
    if result.status is _lp.Status.INFEASIBLE:
        return Solution(result.status, lp_result=result, farkas=result.farkas, diagnostics=diagnostics)
    if result.status is _lp.Status.UNBOUNDED:
        raise InternalError("bounded feasible set reported as unbounded")
    cert = _lp.verify_certificate(result.program, result, feas_tol, opt_tol)
    plan = plan_from_vector(instance.grid, result.x)
    objective = float(instance.cost_values @ result.x)
    return Solution(
        result.status,
        plan,
        objective,
        moment_residual(instance.family, plan),
        result,
        cert,
        diagnostics=diagnostics,
    )


def solve_gmp(
    instance: GmpInstance,
    feas_tol: float = _lp.FEAS_TOL,
    opt_tol: float = _lp.OPT_TOL,
) -> Solution:
    """Minimize the instance cost over admissible probability measures on its grid."""
    result = _lp.solve_lp(instance.program(), feas_tol, opt_tol)
    return _finish(instance, result, feas_tol, opt_tol)


def solve_gmp_lexicographic(
    instance: GmpInstance,
    refinement_costs: Sequence[CostSpec] = (),
    feas_tol: float = _lp.FEAS_TOL,
    opt_tol: float = _lp.OPT_TOL,
) -> Solution:
    """Minimize the instance cost, then each refinement cost over the previous minimizers."""
    if not refinement_costs:
        return solve_gmp(instance, feas_tol, opt_tol)
    base = instance.program()
    objectives = [instance.cost_values] + [np.asarray(c(instance.grid)) for c in refinement_costs]
    result = _lp.lexicographic_solve(base.A, base.b, objectives, feas_tol, opt_tol)
    diag = {}
    if result.optimal:
        diag["stage_values"] = list(result.stage_values)
        try:
            diag["refinement_costs"] = [cost_to_dict(c) for c in refinement_costs]
        except CostError:
            pass
    return _finish(instance, result, feas_tol, opt_tol, diag)


def verify_solution(
    instance: GmpInstance,
    solution: Solution,
    feas_tol: float = _lp.FEAS_TOL,
    opt_tol: float = _lp.OPT_TOL,
) -> dict:
    """Re-check a (possibly deserialized) solution without solving anything.

    The plan's moment residuals, mass and objective are recomputed and the LP
    certificate is checked against the instance's own program. Lexicographic
    solutions are checked against the stacked program of their stages.
    """
    if not solution.optimal:
        if solution.farkas is None:
            return {"passed": False, "reason": "no Farkas ray"}
        ok = _lp.check_farkas(instance.program(), solution.farkas)
        return {"passed": ok, "farkas": ok}
    plan = solution.plan
    residual = moment_residual(instance.family, plan)
    mass_err = abs(plan.total_mass - 1.0)
    pts = plan.points
    objective = float(instance.cost(pts) @ plan.masses) if len(plan) else 0.0
    obj_err = abs(objective - solution.objective)
    res = solution.lp_result
    program = instance.program()
    refinements = solution.diagnostics.get("refinement_costs")
    if res is not None and refinements:
        objectives = [instance.cost_values] + [
            np.asarray(cost_from_dict(d)(instance.grid)) for d in refinements
        ]
        pinned = np.vstack(objectives[:-1])
        program = _lp.LinearProgram(
            np.vstack([program.A, pinned]),
            np.concatenate([program.b, np.asarray(res.stage_values[:-1])]),
            objectives[-1],
        )
    cert = _lp.verify_certificate(program, res, feas_tol, opt_tol) if res is not None else None
    passed = (
        residual <= feas_tol * 10
        and mass_err <= feas_tol * 10
        and obj_err <= opt_tol * (1 + abs(objective))
        and (cert is None or cert.passed)
    )
    return {
        "passed": bool(passed),
        "residual": residual,
        "mass_error": mass_err,
        "objective_error": obj_err,
        "certificate": cert.to_dict() if cert is not None else None,
    }


# --- instance builders -------------------------------------------------------


def multi_marginal_instance(marginals: Sequence[DiscreteDistribution], cost: CostSpec) -> GmpInstance:
    """Transport instance on the product of the marginal supports."""
    grid = product_grid([d.atoms for d in marginals])
    return build_instance(grid, cost, multi_marginal_family(marginals, grid))


def martingale_instance(
    marginals: Sequence[DiscreteDistribution],
    cost: CostSpec,
    constrained: Sequence[int] | None = None,
) -> GmpInstance:
    """Martingale transport on the product grid of the marginal supports.

    ``constrained`` picks which time marginals are imposed (default: all of
    them, i.e. martingale optimal transport); ``[n-1]`` imposes only the
    terminal law, ``[0]`` only the initial one.
    """
    grid = product_grid([d.atoms for d in marginals])
    fam = martingale_family(grid)
    axes = range(len(marginals)) if constrained is None else constrained
    for axis in axes:
        fam = fam + marginal_family(marginals[axis], axis, grid)
    return build_instance(grid, cost, fam)


def convex_order_diagnostic(marginals: Sequence[DiscreteDistribution], tol: float = 1e-9) -> dict:
    """Convex order between consecutive marginals, the feasibility criterion."""
    pairs = [
        {"from": i, "to": i + 1, "convex_order": convex_order(marginals[i], marginals[i + 1], tol),
         "mean_gap": marginals[i + 1].mean() - marginals[i].mean()}
        for i in range(len(marginals) - 1)
    ]
    return {"consecutive": pairs, "all": all(p["convex_order"] for p in pairs)}


def solve_martingale(
    marginals: Sequence[DiscreteDistribution],
    cost: CostSpec,
    feas_tol: float = _lp.FEAS_TOL,
    opt_tol: float = _lp.OPT_TOL,
) -> Solution:
    """Martingale optimal transport; infeasible outcomes carry the convex-order check."""
    inst = martingale_instance(marginals, cost)
    sol = solve_gmp(inst, feas_tol, opt_tol)
    if not sol.optimal:
        diag = dict(sol.diagnostics, convex_order=convex_order_diagnostic(marginals))
        sol = Solution(sol.status, lp_result=sol.lp_result, farkas=sol.farkas, diagnostics=diag)
    return sol


def price_bounds(
    instance: GmpInstance,
    feas_tol: float = _lp.FEAS_TOL,
    opt_tol: float = _lp.OPT_TOL,
) -> tuple[Solution, Solution]:
    """Lower and upper bound of ``integral(c dP)`` over the admissible set.

    The upper bound solves the problem for ``-c``; its ``objective`` is
    reported for ``c`` itself.
    """
    low = solve_gmp(instance, feas_tol, opt_tol)
    neg = build_instance(instance.grid, instance.cost.negated(), instance.family)
    high = solve_gmp(neg, feas_tol, opt_tol)
    if high.optimal:
        high = Solution(
            high.status,
            high.plan,
            -high.objective,
            high.residual,
            high.lp_result,
            high.certificate,
            diagnostics={"maximized": True},
        )
    return low, high


def plan_to_csv(plan: DiscreteMeasure) -> str:
    """One atom per row: coordinates followed by mass."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([f"x{i + 1}" for i in range(plan.dim)] + ["mass"])
    for p, m in zip(plan.points, plan.masses):
        writer.writerow([repr(float(v)) for v in p] + [repr(float(m))])
    return out.getvalue()


def plan_from_csv(text: str) -> DiscreteMeasure:
    rows = list(csv.reader(io.StringIO(text)))
    body = [[float(v) for v in r] for r in rows[1:] if r]
    if not body:
        return DiscreteMeasure.empty(max(len(rows[0]) - 1, 1))
    arr = np.array(body)
    return DiscreteMeasure(arr[:, :-1], arr[:, -1])
