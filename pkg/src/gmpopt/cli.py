"""Command-line front end.

Exit codes: 0 success, 1 a Violated verdict or an infeasible instance,
2 bad input, 3 numerical failure. File formats are described in
``docs/formats.md``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import lp as _lp
from .constraints import ConstraintFamily, EvaluationError, InstanceError
from .continuum import BudgetExceeded, MarginalFamily, MissingMarginalError, convergence_table
from .costs import CostError, cost_from_dict, get_profile
from .couplings import QuantilePlanSpec, quantile_coupling
from .expression import ExpressionError, parse_expression
from .gmp import (
    GmpInstance,
    InternalError,
    Solution,
    build_instance,
    convex_order_diagnostic,
    martingale_instance,
    plan_to_csv,
    price_bounds,
    solve_gmp,
)
from .measures import DegenerateMeasureError, DiscreteDistribution, DiscreteMeasure
from .monotonicity import (
    CompetitorQuery,
    check_cyclical_monotone,
    find_better_competitor,
    is_finitely_minimal,
    projection_grid,
)

EXIT_OK, EXIT_VIOLATED, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(ValueError):
    pass


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from exc


def _emit(payload, out):
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def _write(path, text):
    Path(path).write_text(text, encoding="utf-8")


def _dists(data) -> list[DiscreteDistribution]:
    if isinstance(data, dict):
        data = data["marginals"]
    return [DiscreteDistribution.from_dict(d) for d in data]


def _plan(data) -> DiscreteMeasure:
    if "plan" in data:
        data = data["plan"]
    return DiscreteMeasure.from_dict(data)


def cmd_solve(args) -> int:
    inst = GmpInstance.from_dict(_read_json(args.instance))
    sol = solve_gmp(inst, args.feas_tol, args.opt_tol)
    _emit(sol.to_dict(), args.out)
    if sol.optimal and args.csv:
        _write(args.csv, plan_to_csv(sol.plan))
    return EXIT_OK if sol.optimal else EXIT_VIOLATED


def cmd_check_monotone(args) -> int:
    data = _read_json(args.input)
    if "pairs" in data:
        pairs = np.asarray(data["pairs"], dtype=float)
    else:
        pairs = _plan(data).points
    verdict = check_cyclical_monotone(pairs, cost_from_dict(data["cost"]), args.max_cycle_slack)
    _emit(verdict.to_dict(), args.out)
    return EXIT_OK if verdict.certified else EXIT_VIOLATED


def cmd_competitor_search(args) -> int:
    data = _read_json(args.instance)
    cost = cost_from_dict(data["cost"])
    family = ConstraintFamily.from_dict(data.get("family", []))
    if args.alpha:
        alpha = _plan(_read_json(args.alpha))
        cand = (
            np.asarray(_read_json(args.candidates), dtype=float)
            if args.candidates
            else projection_grid(alpha.points)
        )
        q = CompetitorQuery(alpha, cand, cost, family, args.improve_tol)
        found = find_better_competitor(q, args.feas_tol, args.opt_tol)
        payload = {"status": "violated" if found else "certified"}
        if found:
            payload["witness"] = found.to_dict()
        _emit(payload, args.out)
        return EXIT_VIOLATED if found else EXIT_OK
    if not args.plan:
        raise InputError("competitor-search needs --plan or --alpha")
    plan = _plan(_read_json(args.plan))
    verdict = is_finitely_minimal(
        plan, cost, family, args.k, args.trials, args.seed, args.extend,
        args.improve_tol, args.feas_tol, args.opt_tol,
    )
    _emit(verdict.to_dict(), args.out)
    return EXIT_OK if verdict.certified else EXIT_VIOLATED


def cmd_quantile_coupling(args) -> int:
    marginals = _dists(_read_json(args.marginals))
    spec = (
        QuantilePlanSpec.stratified(marginals, args.levels)
        if args.levels
        else QuantilePlanSpec(tuple(marginals))
    )
    plan = quantile_coupling(spec)
    if args.csv:
        _write(args.csv, plan_to_csv(plan))
    if args.out or not args.csv:
        _emit(plan.to_dict(), args.out)
    return EXIT_OK


def _family_law(data):
    """A ``t -> DiscreteDistribution`` map from a family JSON document."""
    if "atoms" in data:
        atoms = [parse_expression(str(a), variables=("t",)) for a in data["atoms"]]
        weights = data.get("weights", [1.0] * len(atoms))

        def law(t):
            vals = [float(a(np.array([t]))) for a in atoms]
            return DiscreteDistribution.from_weights(vals, weights)

        return law
    fam = MarginalFamily(
        data["times"], tuple(DiscreteDistribution.from_dict(d) for d in data["marginals"]), data["T"]
    )
    return fam.at


def cmd_pass_demo(args) -> int:
    data = _read_json(args.family) if args.family else {"T": 1.0, "atoms": ["0", "t", "2*t"]}
    T = float(args.T if args.T is not None else data.get("T", 1.0))
    law = _family_law(data)
    profile = get_profile(args.h, **(json.loads(args.h_params) if args.h_params else {}))
    rows = convergence_table(
        law, T, range(args.min_depth, args.depth + 1), profile, args.levels, args.budget
    )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["depth", "n_times", "pi_star_cost", "lp_cost", "gap", "successive_gap"])
    for r in rows:
        w.writerow(["" if v is None else repr(v) for v in r.as_list()])
    if args.out:
        _write(args.out, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_mot(args) -> int:
    data = _read_json(args.instance)
    marginals = _dists(data["marginals"])
    cost = cost_from_dict(data["cost"])
    constrained = data.get("constrained")
    inst = martingale_instance(marginals, cost, constrained)
    if "family" in data:
        extra = ConstraintFamily.from_dict(data["family"])
        inst = build_instance(inst.grid, cost, inst.family + extra)
    low, high = price_bounds(inst, args.feas_tol, args.opt_tol)
    payload = {
        "lower": low.to_dict(),
        "upper": high.to_dict(),
        "convex_order": convex_order_diagnostic(marginals),
    }
    _emit(payload, args.out)
    return EXIT_OK if low.optimal else EXIT_VIOLATED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gmpopt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def tolerances(sp):
        sp.add_argument("--feas-tol", type=float, default=_lp.FEAS_TOL)
        sp.add_argument("--opt-tol", type=float, default=_lp.OPT_TOL)
        sp.add_argument("--improve-tol", type=float, default=1e-9)
        sp.add_argument("--max-cycle-slack", type=float, default=1e-10)
        sp.add_argument("--out", help="write JSON here instead of stdout")

    sp = sub.add_parser("solve", help="solve a moment-problem instance")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--csv", help="also write the plan as CSV")
    tolerances(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("check-monotone", help="cyclical monotonicity of a set of pairs")
    sp.add_argument("--input", required=True)
    tolerances(sp)
    sp.set_defaults(func=cmd_check_monotone)

    sp = sub.add_parser("competitor-search", help="look for better competitors")
    sp.add_argument("--instance", required=True, help="JSON with cost and family")
    sp.add_argument("--plan", help="plan or solution JSON to certify")
    sp.add_argument("--alpha", help="single finite measure to test")
    sp.add_argument("--candidates", help="JSON list of candidate points for --alpha")
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--extend", action="store_true", help="use the plan's full projection grid")
    tolerances(sp)
    sp.set_defaults(func=cmd_competitor_search)

    sp = sub.add_parser("quantile-coupling", help="comonotone coupling of marginals")
    sp.add_argument("--marginals", required=True)
    sp.add_argument("--levels", type=int, help="number of stratified levels (default: breakpoints)")
    sp.add_argument("--csv")
    tolerances(sp)
    sp.set_defaults(func=cmd_quantile_coupling)

    sp = sub.add_parser("pass-demo", help="convergence table over dyadic depths")
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--min-depth", type=int, default=1)
    sp.add_argument("--levels", type=int)
    sp.add_argument("--h", default="neg_square")
    sp.add_argument("--h-params", help='JSON object, e.g. {"p": 1.5}')
    sp.add_argument("--family")
    sp.add_argument("--T", type=float)
    sp.add_argument("--budget", type=int, default=10_000)
    tolerances(sp)
    sp.set_defaults(func=cmd_pass_demo)

    sp = sub.add_parser("mot", help="martingale transport price bounds")
    sp.add_argument("--instance", required=True)
    tolerances(sp)
    sp.set_defaults(func=cmd_mot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        InputError, InstanceError, EvaluationError, CostError, ExpressionError,
        DegenerateMeasureError, MissingMarginalError, BudgetExceeded, KeyError, TypeError, ValueError,
    ) as exc:
        print(f"gmpopt {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (_lp.SolverError, InternalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"gmpopt {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
