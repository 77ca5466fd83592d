"""Command-line front end.

    agnostic harness   --input wine.csv --response Quality --out out/ --plot
    agnostic select    --input wine.csv --response Quality --selector lasso
    agnostic conformal --input d.csv --response y --x-new 0.1,2,3 [--lambda-path]
    agnostic bound     --C 1 --L 1 --n 100 --p 5 --delta 0.1 [--verify --reps 500]

Exit status: 0 ok, 1 data error, 2 numerical failure, 3 bad flags.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import report
from .conformal import (GridSpec, PredictorSpec, ConformalError, choose_lambda_by_length,
                        conformal_interval, path_intervals)
from .data import DataError, load_csv, standardize
from .harness import (HarnessConfig, HarnessError, InfeasibleLevel, StageError,
                      median_risk_interval, run_harness)
from .riskbound import DGPS, BoundHypothesisError, BoundInputs, excess_risk_bound, verify_bound
from .selectors import (SelectionError, SelectorSpec, UnknownSelector, forward_stepwise,
                        lasso_path, select)

EXIT_DATA, EXIT_NUMERIC, EXIT_FLAGS = 1, 2, 3


class FlagError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise FlagError(message)


def _alpha(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser():
    p = _Parser(prog="agnostic", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("--input", required=True, help="CSV file with a header row")
            sp.add_argument("--response", required=True, help="response column name")
        sp.add_argument("--alpha", type=_alpha, default=0.05)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default="out", help="output directory")

    def selector_flags(sp):
        sp.add_argument("--selector", choices=["stepwise", "lasso"], default="stepwise")
        sp.add_argument("--lambda-rule", choices=["cv", "conformal", "fixed"], default="cv")
        sp.add_argument("--lambda", dest="lam", type=float, default=None)
        sp.add_argument("--max-steps", type=int, default=None)
        sp.add_argument("--no-standardize", action="store_true")

    h = sub.add_parser("harness", help="split, select, and infer on the second half")
    common(h)
    selector_flags(h)
    h.add_argument("--no-bonferroni", action="store_true")
    h.add_argument("--risk-scale", choices=["absolute", "squared"], default="absolute")
    h.add_argument("--covariance", choices=["robust", "classical"], default="robust")
    h.add_argument("--coefficients", choices=["d1", "d2"], default="d1")
    h.add_argument("--plot", action="store_true", help="write intervals.svg")

    s = sub.add_parser("select", help="run a selector on the whole input")
    common(s)
    selector_flags(s)

    c = sub.add_parser("conformal", help="full conformal prediction interval at a new point")
    common(c)
    c.set_defaults(alpha=0.1)
    g = c.add_mutually_exclusive_group(required=True)
    g.add_argument("--x-new", help="comma-separated predictor values")
    g.add_argument("--x-new-csv", help="one-row CSV with the predictor columns")
    c.add_argument("--predictor", default="ols",
                   help="ols | mean | subset:NAME,NAME | lasso:LAMBDA")
    c.add_argument("--grid-points", type=int, default=1000)
    c.add_argument("--max-doublings", type=int, default=10)
    c.add_argument("--lambda-path", action="store_true",
                   help="choose the lasso penalty by interval length")
    c.add_argument("--k-lambdas", type=int, default=50)

    b = sub.add_parser("bound", help="l1-ball excess-risk bound")
    common(b, needs_input=False)
    b.add_argument("--C", dest="c_max", type=float, required=True)
    b.add_argument("--L", dest="l1_budget", type=float, required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--p", type=int, required=True)
    b.add_argument("--delta", type=float, required=True)
    b.add_argument("--verify", action="store_true")
    b.add_argument("--reps", type=int, default=500)
    b.add_argument("--dgp", choices=sorted(DGPS), default="bounded-sign")
    b.add_argument("--holdout", type=_positive_int, default=50_000)
    return p


def _selector_spec(args):
    return SelectorSpec(kind=args.selector, max_steps=args.max_steps, lam=args.lam,
                        lambda_rule=args.lambda_rule, seed=args.seed)


def cmd_harness(args, out):
    data = load_csv(args.input, args.response)
    config = HarnessConfig(alpha=args.alpha, bonferroni=not args.no_bonferroni,
                           risk_scale=args.risk_scale, covariance=args.covariance,
                           standardize=not args.no_standardize, coefficients=args.coefficients)
    res = run_harness(data, _selector_spec(args), args.alpha, args.seed, config)
    report.write_selection(out / "selection.tsv", res.model)
    risk_rows = [res.risk.risk, res.risk.null_risk]
    try:
        risk_rows.append(median_risk_interval(res.split.d2, res.model, args.alpha, args.risk_scale))
    except InfeasibleLevel:
        pass
    report.write_intervals(out / "risk.tsv", risk_rows)
    infl = list(res.inflation.per_variable.values()) if res.inflation else []
    report.write_intervals(out / "inflation.tsv", infl)
    report.write_intervals(out / "projected.tsv", res.projected.intervals)
    if args.plot:
        report.write_interval_svg(out / "intervals.svg", infl, res.projected.intervals[1:])
    r, r0 = res.risk.risk, res.risk.null_risk
    print(f"selected: {', '.join(res.model.selected_names) or '(none)'}")
    print(f"risk {r.estimate:.4f} ({r.lower:.4f}, {r.upper:.4f}); "
          f"null {r0.estimate:.4f} ({r0.lower:.4f}, {r0.upper:.4f})")


def cmd_select(args, out):
    data = load_csv(args.input, args.response)
    if not args.no_standardize:
        data, _, _ = standardize(data, data)
    spec = _selector_spec(args)
    if spec.kind == "stepwise":
        model, trace = forward_stepwise(data, spec.max_steps)
        report.write_cp_trace(out / "cp_trace.tsv", trace, data.names)
    else:
        model = select(data, spec)
        path = model.diagnostics.get("path") or lasso_path(data, spec.k_lambdas,
                                                           spec.lambda_min_ratio)
        report.write_lasso_path(out / "lasso_path.tsv", path, data.names)
    report.write_selection(out / "selection.tsv", model)
    print(f"selected: {', '.join(model.selected_names) or '(none)'}")


def _parse_predictor(text, names):
    if text == "ols":
        return PredictorSpec.ols_full()
    if text == "mean":
        return PredictorSpec.intercept_only()
    kind, _, arg = text.partition(":")
    if kind == "subset":
        cols = [c for c in arg.split(",") if c]
        missing = [c for c in cols if c not in names]
        if missing:
            raise FlagError(f"unknown columns in --predictor: {missing}")
        return PredictorSpec.ols_subset(names.index(c) for c in cols)
    if kind == "lasso":
        try:
            return PredictorSpec.lasso(float(arg))
        except ValueError:
            raise FlagError(f"bad lasso penalty in --predictor: {arg!r}") from None
    raise FlagError(f"unknown --predictor {text!r}")


def _one_row_csv(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            header, row = list(csv.reader(fh))[:2]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except ValueError:
        raise DataError(f"{path}: expected a header and one data row") from None
    try:
        return {h.strip(): float(v) for h, v in zip(header, row)}
    except ValueError:
        raise DataError(f"{path}: non-numeric value in the data row") from None


def _x_new(args, data):
    if args.x_new is not None:
        try:
            vals = [float(v) for v in args.x_new.split(",")]
        except ValueError:
            raise FlagError(f"--x-new must be comma-separated numbers, got {args.x_new!r}") from None
    else:
        rows = _one_row_csv(args.x_new_csv)
        missing = [n for n in data.names if n not in rows]
        if missing:
            raise DataError(f"{args.x_new_csv}: missing columns {missing}")
        vals = [rows[n] for n in data.names]
    if len(vals) != data.p or not np.all(np.isfinite(vals)):
        raise FlagError(f"x_new needs {data.p} finite values, got {len(vals)}")
    return np.array(vals)


def cmd_conformal(args, out):
    data = load_csv(args.input, args.response)
    x_new = _x_new(args, data)
    if args.grid_points < 16 or args.max_doublings < 0:
        raise FlagError("--grid-points must be >= 16 and --max-doublings >= 0")
    grid = GridSpec(points=args.grid_points, max_doublings=args.max_doublings)
    if args.lambda_path:
        path = lasso_path(data, args.k_lambdas)
        results = path_intervals(data, x_new, args.alpha, path.lambdas, grid)
        lam, result = choose_lambda_by_length(data, x_new, args.alpha, path, grid, results)
        lengths = [float("inf") if r is None else r.length for r in results]
        report.write_tsv(out / "lambda_choice.tsv", ("lambda", "length", "l1_norm", "chosen"),
                         [(l, ln, nrm, int(l == lam))
                          for l, ln, nrm in zip(path.lambdas, lengths, path.l1_norms)])
    else:
        result = conformal_interval(data, x_new, args.alpha,
                                    _parse_predictor(args.predictor, list(data.names)), grid)
    report.write_conformal(out / "pvalues.tsv", out / "interval.tsv", result)
    print(f"interval ({result.lo:.6g}, {result.hi:.6g}) length {result.length:.6g}")


def cmd_bound(args, out):
    try:
        inputs = BoundInputs(args.c_max, args.l1_budget, args.n, args.p, args.delta)
    except ValueError as exc:
        raise FlagError(str(exc)) from None
    print(report.fmt(excess_risk_bound(inputs)))
    if args.verify:
        if args.reps < 100:
            raise FlagError(f"--reps must be at least 100, got {args.reps}")
        rep = verify_bound(args.dgp, inputs, args.reps, args.seed, args.holdout)
        report.write_bound_check(out / "boundcheck.tsv", rep)
        print(f"violation_rate {report.fmt(rep.violation_rate)} over {rep.reps} reps")


COMMANDS = {"harness": cmd_harness, "select": cmd_select, "conformal": cmd_conformal,
            "bound": cmd_bound}


def _exit_code(exc):
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (FlagError, UnknownSelector)):
        return EXIT_FLAGS
    if isinstance(exc, (DataError, BoundHypothesisError, OSError)):
        return EXIT_DATA
    if isinstance(exc, (SelectionError, HarnessError, ConformalError, ArithmeticError,
                        np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    return None


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except FlagError as exc:
        print(f"agnostic: error: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    out = Path(args.out)
    try:
        COMMANDS[args.command](args, out)
    except Exception as exc:
        code = _exit_code(exc)
        if code is None:
            raise
        print(f"agnostic {args.command}: {exc}", file=sys.stderr)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
