"""Dense two-phase revised simplex for ``min c.x  s.t.  A x = b, x >= 0``.

The grid LPs produced by the rest of the package are small (at most a few
thousand columns and a few dozen rows), so the basis matrix is refactorized
from scratch at every pivot. Pricing is Dantzig's rule; after a run of
degenerate pivots the solver falls back to Bland's rule until the objective
moves again.
"""

from __future__ import annotations

import contextlib
import contextvars
import enum
import io
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-11
DEGENERACY_LIMIT = 50


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class SolverError(RuntimeError):
    """Iteration cap hit or a singular basis; should not happen on valid input."""


@dataclass(frozen=True)
class LinearProgram:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        c = np.asarray(self.c, dtype=float).ravel()
        if A.size == 0:
            A = A.reshape(b.size, c.size)
        if A.shape != (b.size, c.size):
            raise ValueError(f"inconsistent shapes A{A.shape}, b{b.shape}, c{c.shape}")
        for name, arr in (("A", A), ("b", b), ("c", c)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def shape(self):
        return self.A.shape

    def dump(self) -> str:
        """Plain-text diagnostic listing: one ``A | b`` row per line, then ``c``."""
        out = io.StringIO()
        out.write(f"# {self.A.shape[0]} rows x {self.A.shape[1]} columns\n")
        for row, rhs in zip(self.A, self.b):
            out.write(" ".join(f"{v:.17g}" for v in row) + f" | {rhs:.17g}\n")
        out.write("c: " + " ".join(f"{v:.17g}" for v in self.c) + "\n")
        return out.getvalue()


@dataclass(frozen=True)
class LpResult:
    status: Status
    x: np.ndarray | None = None
    objective: float | None = None
    y: np.ndarray | None = None
    basis: tuple = ()
    farkas: np.ndarray | None = None
    iterations: int = 0
    stage_values: tuple = ()
    program: LinearProgram | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def to_dict(self) -> dict:
        out = {"status": self.status.value, "iterations": self.iterations}
        if self.x is not None:
            out["objective"] = self.objective
            out["x"] = self.x.tolist()
            out["y"] = self.y.tolist()
            out["basis"] = list(self.basis)
        if self.farkas is not None:
            out["farkas"] = self.farkas.tolist()
        if self.stage_values:
            out["stage_values"] = list(self.stage_values)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "LpResult":
        status = Status(data["status"])
        arr = lambda key: np.asarray(data[key], dtype=float) if key in data else None
        return cls(
            status=status,
            x=arr("x"),
            objective=data.get("objective"),
            y=arr("y"),
            basis=tuple(data.get("basis", ())),
            farkas=arr("farkas"),
            iterations=data.get("iterations", 0),
            stage_values=tuple(data.get("stage_values", ())),
        )


# Every solve_lp call made inside ``recording()`` is appended to the active list.
_recorder: contextvars.ContextVar[list | None] = contextvars.ContextVar("lp_recorder", default=None)


@contextlib.contextmanager
def recording():
    """Collect ``(LinearProgram, LpResult)`` pairs produced while active."""
    log: list = []
    token = _recorder.set(log)
    try:
        yield log
    finally:
        _recorder.reset(token)


class _Simplex:
    """Revised simplex on ``min c.x, A x = b, x >= 0`` from a feasible basis."""

    def __init__(self, A, b, c, basis, opt_tol, max_iter):
        self.A, self.b, self.c = A, b, c
        self.basis = list(basis)
        self.opt_tol = opt_tol
        self.max_iter = max_iter
        self.iterations = 0

    def factor(self):
        B = self.A[:, self.basis]
        try:
            lu = lu_factor(B, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover
            raise SolverError(f"basis factorization failed: {exc}") from exc
        if np.min(np.abs(np.diag(lu[0]))) < 1e-14:
            raise SolverError("singular basis")
        return lu

    def state(self):
        lu = self.factor()
        xb = lu_solve(lu, self.b, check_finite=False)
        y = lu_solve(lu, self.c[self.basis], trans=1, check_finite=False)
        return lu, xb, y

    def run(self):
        """Pivot to optimality. Returns ``"optimal"`` or ``("unbounded", j)``."""
        n = self.A.shape[1]
        degenerate_run = 0
        bland = False
        while True:
            if self.iterations >= self.max_iter:
                raise SolverError(f"iteration cap {self.max_iter} reached")
            lu, xb, y = self.state()
            d = self.c - self.A.T @ y
            d[self.basis] = 0.0
            candidates = np.flatnonzero(d < -self.opt_tol)
            if candidates.size == 0:
                return "optimal"
            if bland:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmin(d[candidates])])
            u = lu_solve(lu, self.A[:, j], check_finite=False)
            rows = np.flatnonzero(u > PIVOT_TOL)
            if rows.size == 0:
                return ("unbounded", j)
            ratios = np.maximum(xb[rows], 0.0) / u[rows]
            theta = ratios.min()
            ties = rows[ratios <= theta + 1e-12 * max(1.0, theta)]
            if bland:
                r = int(min(ties, key=lambda i: self.basis[i]))
            else:
                r = int(ties[np.argmax(u[ties])])
            self.basis[r] = j
            self.iterations += 1
            if theta <= 1e-12:
                degenerate_run += 1
                if degenerate_run >= DEGENERACY_LIMIT:
                    bland = True
            else:
                degenerate_run = 0
                bland = False
            if n == 0:  # pragma: no cover
                return "optimal"


def _remove_artificials(A_full, n, basis, m):
    """Pivot zero-level artificials out of the basis; report redundant rows.

    Returns the cleaned basis (artificial positions replaced by structural
    columns where possible) and the list of basis positions that remain
    artificial, whose rows are linear combinations of the others.
    """
    basis = list(basis)
    redundant = []
    for pos in range(m):
        if basis[pos] < n:
            continue
        B = A_full[:, basis]
        e = np.zeros(m)
        e[pos] = 1.0
        row = np.linalg.solve(B.T, e) @ A_full[:, :n]
        row[[j for j in basis if j < n]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > 1e-9:
            basis[pos] = j
        else:
            redundant.append(pos)
    return basis, redundant


def solve_lp(
    lp: LinearProgram,
    feas_tol: float = FEAS_TOL,
    opt_tol: float = OPT_TOL,
    max_iter: int | None = None,
) -> LpResult:
    """Solve ``lp`` by the two-phase revised simplex method.

    An optimal result carries the dual vector ``y`` (``A.T @ y <= c`` up to
    ``opt_tol``); an infeasible one carries a Farkas ray ``y`` with
    ``A.T @ y <= 0`` and ``b @ y > 0``.
    """
    A, b, c = lp.A, lp.b, lp.c
    m, n = A.shape
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    sign = np.where(b < 0, -1.0, 1.0)
    As = A * sign[:, None]
    bs = b * sign

    zero_rows = ~np.any(np.abs(As) > 0, axis=1)
    bad = zero_rows & (np.abs(bs) > feas_tol)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        ray = np.zeros(m)
        ray[i] = sign[i]
        return _record(lp, LpResult(Status.INFEASIBLE, farkas=ray))
    live = np.flatnonzero(~zero_rows)
    As, bs = As[live], bs[live]
    ml = live.size

    if ml == 0:
        # No binding rows: x = 0 is feasible, unbounded if some c_j < 0.
        if np.any(c < -opt_tol):
            return _record(lp, LpResult(Status.UNBOUNDED))
        x = np.zeros(n)
        res = LpResult(Status.OPTIMAL, x=x, objective=0.0, y=np.zeros(m), program=lp)
        return _record(lp, res)

    # Phase 1: artificials on every live row.
    A1 = np.hstack([As, np.eye(ml)])
    c1 = np.concatenate([np.zeros(n), np.ones(ml)])
    ph1 = _Simplex(A1, bs, c1, range(n, n + ml), opt_tol * 1e-2, max_iter)
    ph1.run()
    _, xb, y1 = ph1.state()
    infeas = float(c1[ph1.basis] @ xb)
    if infeas > feas_tol * max(1.0, float(np.abs(bs).max())):
        ray = np.zeros(m)
        ray[live] = y1 * sign[live]
        return _record(lp, LpResult(Status.INFEASIBLE, farkas=ray, iterations=ph1.iterations))

    basis, redundant = _remove_artificials(A1, n, ph1.basis, ml)
    keep_pos = [p for p in range(ml) if p not in redundant]
    drop_rows = {basis[p] - n for p in redundant}
    rows = np.array([i for i in range(ml) if i not in drop_rows], dtype=int)
    basis = [basis[p] for p in keep_pos]
    A2, b2 = As[rows], bs[rows]

    # price tighter than opt_tol so the returned duals pass verify_certificate
    # with room for round-off in the recomputed reduced costs
    ph2 = _Simplex(A2, b2, c, basis, opt_tol * 1e-2, max_iter)
    outcome = ph2.run()
    iters = ph1.iterations + ph2.iterations
    if outcome != "optimal":
        return _record(lp, LpResult(Status.UNBOUNDED, iterations=iters))

    _, xb, y2 = ph2.state()
    x = np.zeros(n)
    x[ph2.basis] = xb
    y = np.zeros(m)
    y[live[rows]] = y2 * sign[live[rows]]
    res = LpResult(
        Status.OPTIMAL,
        x=x,
        objective=float(c @ x),
        y=y,
        basis=tuple(int(j) for j in ph2.basis),
        iterations=iters,
        program=lp,
    )
    return _record(lp, res)


def _record(lp, result):
    log = _recorder.get()
    if log is not None:
        log.append((lp, result))
    return result


def lexicographic_solve(
    A,
    b,
    objectives: Sequence,
    feas_tol: float = FEAS_TOL,
    opt_tol: float = OPT_TOL,
) -> LpResult:
    """Minimize ``objectives[0]``, then ``objectives[1]`` over its minimizers, etc.

    Each finished stage is pinned by appending the equality row
    ``objectives[k] . x = v_k``. The returned result belongs to the final
    stacked program (available as ``result.program``) and reports the value of
    every objective at the final point in ``stage_values``.
    """
    if len(objectives) == 0:
        raise ValueError("need at least one objective")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    objs = [np.asarray(o, dtype=float) for o in objectives]
    rows, rhs = [A], [b]
    result = None
    for k, obj in enumerate(objs):
        lp = LinearProgram(np.vstack(rows), np.concatenate(rhs), obj)
        result = solve_lp(lp, feas_tol, opt_tol)
        if not result.optimal:
            return result
        rows.append(obj[None, :])
        rhs.append(np.array([result.objective]))
    values = tuple(float(o @ result.x) for o in objs)
    return replace(result, stage_values=values)


@dataclass(frozen=True)
class CertificateReport:
    passed: bool
    primal_residual: float
    negativity: float
    dual_violation: float
    gap: float
    complementarity: float
    objective_mismatch: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_certificate(
    lp: LinearProgram,
    result: LpResult,
    feas_tol: float = FEAS_TOL,
    opt_tol: float = OPT_TOL,
) -> CertificateReport:
    """Re-check an optimal result against ``lp`` from scratch.

    Primal feasibility, sign of ``x``, dual feasibility of the reduced costs,
    complementary slackness and the duality gap ``|c.x - b.y|`` (relative to
    ``1 + |c.x|``) are all recomputed here; the reported objective must agree
    with ``c.x`` to the same tolerance.
    """
    if result.status is not Status.OPTIMAL or result.x is None or result.y is None:
        nan = float("nan")
        return CertificateReport(False, nan, nan, nan, nan, nan, nan)
    x = np.asarray(result.x, dtype=float)
    y = np.asarray(result.y, dtype=float)
    scale_b = max(1.0, float(np.abs(lp.b).max(initial=0.0)))
    primal = float(np.abs(lp.A @ x - lp.b).max(initial=0.0))
    neg = float(max(0.0, -x.min(initial=0.0)))
    d = lp.c - lp.A.T @ y
    dual = float(max(0.0, -d.min(initial=0.0)))
    value = float(lp.c @ x)
    gap = abs(value - float(lp.b @ y))
    comp = float(np.abs(np.clip(x, 0, None) * d).max(initial=0.0))
    mismatch = abs(value - float(result.objective))
    rel = 1.0 + abs(value)
    passed = (
        primal <= feas_tol * scale_b
        and neg <= feas_tol
        and dual <= opt_tol
        and gap <= opt_tol * rel
        and comp <= opt_tol * rel
        and mismatch <= opt_tol * rel
    )
    return CertificateReport(passed, primal, neg, dual, gap, comp, mismatch)


def check_farkas(lp: LinearProgram, ray, tol: float = 1e-9) -> bool:
    """True iff ``ray`` proves infeasibility: ``A.T ray <= tol`` and ``b.ray > tol``."""
    ray = np.asarray(ray, dtype=float)
    return bool(np.all(lp.A.T @ ray <= tol) and lp.b @ ray > tol)
