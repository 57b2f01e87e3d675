"""Command-line interface.

Four subcommands: ``estimate`` (one fit, JSON out), ``select`` (score-based
lambda choice: chosen-model JSON plus a per-lambda CSV table and figure),
``rates`` (Monte Carlo rate study: CSV report plus JSON summary and figure),
and ``simulate`` (draw a synthetic dataset to CSV).

Exit codes: 0 success, 2 when the solver did not converge (the flagged
result is still written), 1 for input errors — each with a single-line
diagnostic on stderr.  Every command is deterministic given its flags and
``--seed``.
"""

import argparse
import os
import sys

import numpy as np

from .errors import (DataFormatError, DegenerateColumn, NonConvergence,
                     NotPositiveDefinite)
from .estimators import TARGETS, EstimatorConfig, estimate
from .io import (read_data_csv, write_data_csv, write_rate_csv,
                 write_rate_json, write_result_json, write_selection_csv)
from .linalg import is_positive_definite, sample_covariance
from .penalties import parse_penalty
from .plots import save_rate_figure, save_selection_figure
from .simulation import (RateExperiment, gen_truth, parse_truth,
                         replicate_seed, run_rate_experiment, sample_gaussian)
from .solvers import SolverOptions
from .tuning import select_lambda


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract reserves 2 for
    non-convergence, so remap usage problems to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fail(message):
    print(f"error: {message}", file=sys.stderr)
    return 1


def _strip_ext(path, ext):
    return path[: -len(ext)] if path.endswith(ext) else path


def _parse_grid(text):
    """``lo:hi:k`` -> k log-spaced values from lo to hi inclusive."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ValueError(f"cannot parse grid {text!r}; expected lo:hi:k")
    try:
        lo, hi, k = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValueError(f"cannot parse grid {text!r}; expected lo:hi:k") from None
    if not (0.0 < lo <= hi) or k < 1:
        raise ValueError(f"grid {text!r} needs 0 < lo <= hi and k >= 1")
    if k == 1:
        return (lo,)
    return tuple(float(x) for x in np.geomspace(lo, hi, k))


def _parse_int_list(text):
    try:
        vals = tuple(int(x) for x in str(text).split(","))
    except ValueError:
        raise ValueError(f"cannot parse integer list {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise ValueError(f"integer list {text!r} must be positive")
    return vals


def _config_from_args(args):
    pen = parse_penalty(args.penalty)
    if args.lam is not None:
        pen = pen.with_lambda(args.lam)
    solver = SolverOptions(tol=args.tol, max_sweeps=args.max_sweeps)
    return EstimatorConfig(penalty=pen, target=args.target,
                           lla_iters=args.lla_iters, solver=solver)


def cmd_estimate(args):
    try:
        cfg = _config_from_args(args)
        Y = read_data_csv(args.infile)
        S = sample_covariance(Y)
    except (DataFormatError, ValueError, OSError) as exc:
        return _fail(exc)
    if cfg.penalty.lam is None:
        return _fail("no lambda given: pass --lambda or embed it in --penalty")
    if cfg.penalty.lam == 0.0 and not is_positive_definite(S):
        return _fail("singular sample covariance requires lambda > 0")
    code = 0
    try:
        result = estimate(S, cfg)
    except NonConvergence as exc:
        result = exc.result
        code = 2
        print(f"warning: {exc}", file=sys.stderr)
    except (NotPositiveDefinite, DegenerateColumn, ValueError) as exc:
        return _fail(exc)
    try:
        write_result_json(result, args.out)
    except OSError as exc:
        return _fail(exc)
    return code


def cmd_select(args):
    try:
        cfg = _config_from_args(args)
        Y = read_data_csv(args.infile)
        S = sample_covariance(Y)
        grid = _parse_grid(args.grid) if args.grid else None
        sel = select_lambda(S, Y.shape[0], cfg, grid=grid)
    except (DataFormatError, ValueError, OSError,
            NotPositiveDefinite, DegenerateColumn) as exc:
        return _fail(exc)
    base = _strip_ext(args.out, ".json")
    try:
        write_result_json(sel.best_result, args.out)
        write_selection_csv(sel.table, base + "_path.csv")
        save_selection_figure(sel, base + "_path.png")
    except OSError as exc:
        return _fail(exc)
    print(f"lambda={sel.best_lambda!r}")
    return 0


def cmd_rates(args):
    try:
        pen = parse_penalty(args.penalty)
        if args.lam is not None:
            pen = pen.with_lambda(args.lam)
        solver = SolverOptions(tol=args.tol, max_sweeps=args.max_sweeps)
        cfg = EstimatorConfig(penalty=pen, target=args.target,
                              lla_iters=args.lla_iters, solver=solver)
        p_values = _parse_int_list(args.p_values)
        n_values = _parse_int_list(args.n_values)
        truth = parse_truth(args.truth, p=p_values[0], seed=args.seed,
                            unit_diagonal=args.unit_diagonal)
        grid = _parse_grid(args.grid) if args.grid else None
        if grid is not None:
            rule = "bic"
        elif pen.lam is not None:
            rule = "fixed"
        else:
            rule = "oracle"
        exp = RateExperiment(truth=truth, n_values=n_values, p_values=p_values,
                             replicates=args.replicates, config=cfg,
                             seed=args.seed, lambda_rule=rule,
                             oracle_c=args.oracle_c, grid=grid)
        report = run_rate_experiment(exp, workers=args.workers)
    except (ValueError, NotPositiveDefinite) as exc:
        return _fail(exc)
    base = _strip_ext(args.out, ".csv")
    try:
        write_rate_csv(report, args.out)
        write_rate_json(report, base + "_summary.json")
        save_rate_figure(report, base + ".png")
    except OSError as exc:
        return _fail(exc)
    print(f"slope={report.slope!r} stderr={report.slope_stderr!r}")
    return 0


def cmd_simulate(args):
    try:
        spec = parse_truth(args.truth, p=args.p, seed=args.seed,
                           unit_diagonal=args.unit_diagonal)
        truth = gen_truth(spec)
        Y = sample_gaussian(truth.Sigma, args.n,
                            replicate_seed(args.seed, args.n, args.p, 0))
        write_data_csv(Y, args.out)
    except (ValueError, NotPositiveDefinite, OSError) as exc:
        return _fail(exc)
    return 0


def _add_estimator_flags(p):
    p.add_argument("--target", choices=TARGETS, default="precision",
                   help="matrix to estimate (default: precision)")
    p.add_argument("--penalty", required=True,
                   help="penalty spec: family[:lambda[:a]], family in l1|scad|hard")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="penalty level; overrides a lambda embedded in --penalty")
    p.add_argument("--tol", type=float, default=1e-6,
                   help="solver convergence tolerance (default: 1e-6)")
    p.add_argument("--max-sweeps", type=int, default=500,
                   help="solver sweep/iteration cap (default: 500)")
    p.add_argument("--lla-iters", type=int, default=3,
                   help="local-linear-approximation rounds (default: 3)")


def _add_truth_flags(p):
    p.add_argument("--truth", required=True,
                   help="truth spec: tridiag:OFFDIAG | sparse:DENSITY:MAGNITUDE | ar1:PHI")
    p.add_argument("--unit-diagonal", action="store_true",
                   help="rescale the truth so the covariance diagonal is 1")
    p.add_argument("--seed", type=int, default=0, help="experiment seed (default: 0)")


def build_parser():
    parser = _Parser(prog="sparsecov",
                     description="Sparse covariance/precision estimation by "
                                 "penalized likelihood.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("estimate", help="fit one model and write it as JSON")
    _add_estimator_flags(p)
    p.add_argument("--in", dest="infile", required=True, metavar="PATH",
                   help="input observations CSV (rows = observations)")
    p.add_argument("--out", required=True, metavar="PATH", help="output JSON path")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("select", help="choose lambda by score over a grid")
    _add_estimator_flags(p)
    p.add_argument("--grid", default=None, metavar="LO:HI:K",
                   help="log-spaced lambda grid (default: automatic)")
    p.add_argument("--in", dest="infile", required=True, metavar="PATH",
                   help="input observations CSV")
    p.add_argument("--out", required=True, metavar="PATH",
                   help="chosen-model JSON path; the per-lambda table and figure "
                        "are written next to it as *_path.csv / *_path.png")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("rates", help="Monte Carlo error-rate study over an (n, p) grid")
    _add_estimator_flags(p)
    _add_truth_flags(p)
    p.add_argument("--n-values", required=True, metavar="N1,N2,...",
                   help="comma-separated sample sizes")
    p.add_argument("--p-values", required=True, metavar="P1,P2,...",
                   help="comma-separated dimensions")
    p.add_argument("--replicates", type=int, default=20,
                   help="replicates per (n, p) cell (default: 20)")
    p.add_argument("--oracle-c", type=float, default=1.0,
                   help="lambda = c * sqrt(log p / n) when neither --lambda "
                        "nor --grid is given (default: 1.0)")
    p.add_argument("--grid", default=None, metavar="LO:HI:K",
                   help="per-replicate score-based selection over this grid")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="parallel worker processes (default: available cores)")
    p.add_argument("--out", required=True, metavar="PATH",
                   help="report CSV path; the JSON summary and figure are "
                        "written next to it as *_summary.json / *.png")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("simulate", help="draw one synthetic dataset to CSV")
    _add_truth_flags(p)
    p.add_argument("--p", type=int, required=True, help="dimension")
    p.add_argument("--n", type=int, required=True, help="number of observations")
    p.add_argument("--out", required=True, metavar="PATH", help="output CSV path")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
