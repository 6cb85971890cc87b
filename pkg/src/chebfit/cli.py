"""Command-line entry point: ``chebfit <command> ...``.

Exit status is 0 on success, 2 for configuration or input errors and 3 when
a solver fails.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .designs import EllipticalDesign
from .estimators import (LassoConfig, fit_chebyshev_irls, fit_chebyshev_lasso, fit_chebyshev_lp,
                         fit_constrained_ls, fit_lasso_cd, fit_ols)
from .experiments import RUNNERS, make_design, rate_axis, run_containment
from .linalg import RankDeficientError
from .lp import SolverFailure
from .model import read_dataset
from .output import emit_csv, emit_svg_scatter, emit_table, emit_timings, fmt_real, write_manifest
from .theory import example_bound

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
METHODS = ("linf", "irls", "cls", "cheb-lasso", "lasso", "ols")
BOUND_FAMILIES = ("gaussian", "rademacher", "sphere", "orthonormal", "elliptical", "general_moment", "density")


def _globals(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=d, help="override the run seed")
    parser.add_argument("--jobs", type=int, default=argparse.SUPPRESS if suppress else 1,
                        help="worker processes for replications (default 1)")
    parser.add_argument("--out-dir", type=Path, default=d, help="output directory (overrides the config)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chebfit", description="Chebyshev regression experiments and fits.")
    _globals(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, suppress=True)
    for name, help_ in (("rate", "mean error curves over an (n, p) grid"),
                        ("lasso-compare", "oracle-tuned Chebyshev LASSO vs LASSO"),
                        ("ols-vs-cheb", "error decay in n for the Chebyshev fit and OLS"),
                        ("containment", "ball-in-hull failure frequency vs its bound")):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("--config", required=True, type=Path)
    b = sub.add_parser("bounds", parents=[common], help="print theoretical rate bounds")
    b.add_argument("--design", required=True, choices=BOUND_FAMILIES)
    b.add_argument("--n", required=True, type=int, nargs="+")
    b.add_argument("--p", required=True, type=int, nargs="+")
    b.add_argument("--gamma", type=float, default=0.1)
    b.add_argument("--L", type=float, default=3.0)
    b.add_argument("--a", type=float, default=2.0)
    b.add_argument("--C", type=float, help="moment constant (general_moment)")
    b.add_argument("--lambda-min", type=float, help="smallest eigenvalue of E XX^T (general_moment)")
    b.add_argument("--xi", type=float, help="ball radius (density)")
    b.add_argument("--upsilon", type=float, help="covering radius (density)")
    b.add_argument("--format", choices=("text", "csv"), default="text")
    f = sub.add_parser("fit", parents=[common], help="fit one estimator to a CSV dataset")
    f.add_argument("--data", required=True, type=Path)
    f.add_argument("--method", required=True, choices=METHODS)
    f.add_argument("--a", type=float, help="noise radius (cls)")
    f.add_argument("--lambda", dest="lam", type=float, help="penalty (cheb-lasso, lasso)")
    f.add_argument("--out", required=True, type=Path)
    return ap


def _prepare(args):
    cfg, text = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out_dir is not None:
        changes["output_dir"] = args.out_dir
    try:
        cfg = dataclasses.replace(cfg, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.experiment != args.command:
        raise ConfigError(f"{args.config}: kind = {cfg.experiment} but the command is {args.command}")
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, text, out


def _cmd_experiment(args) -> int:
    cfg, text, out = _prepare(args)
    if cfg.experiment == "containment":
        rows = run_containment(cfg, args.jobs)
        emit_table(rows, out / "containment.csv")
        write_manifest(out / "manifest.txt", text, cfg.seed, {"experiment": cfg.experiment})
        for r in rows:
            print(f"p={r['p']:<3d} m={r['m']:<6d} failure={r['empirical_failure']:.4f} "
                  f"(se {r['std_error']:.4f})  bound={r['bound']:.4g}")
        return EXIT_OK
    res = RUNNERS[cfg.experiment](cfg, args.jobs)
    for msg in res.failures:
        print(f"aborted {msg}", file=sys.stderr)
    if not res.records:
        print("every cell was aborted", file=sys.stderr)
        return EXIT_SOLVER
    emit_csv(res.records, out / "records.csv")
    emit_timings(res.records, out / "timings.csv")
    emit_table(res.summary, out / "summary.csv")
    extra = {"experiment": cfg.experiment, "aborted_cells": len(res.failures)}
    for name, fit in sorted(res.fits.items()):
        extra[f"fit_{name}"] = ", ".join(f"{k}={fmt_real(v) if isinstance(v, float) else v}"
                                         for k, v in fit.items())
        print(f"{name}: slope={fit['slope']:.4f} intercept={fit['intercept']:.4f} R^2={fit['r2']:.4f} "
              f"vs {fit['x_axis']}")
    if cfg.experiment == "rate":
        emit_svg_scatter(res.summary, rate_axis(cfg.design), out / "rate.svg", title=f"{cfg.design} design")
    if cfg.experiment == "lasso-compare":
        print(f"{'n':>5} {'s':>4} {'estimator':>11} {'mean l1 error':>14}")
        for r in res.summary:
            print(f"{r['n']:>5} {r['s']:>4} {r['estimator_tag']:>11} {r['mean_l1_error']:>14.4f}")
    write_manifest(out / "manifest.txt", text, cfg.seed, extra)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    params = {k: v for k, v in (("C", args.C), ("lambda_min", args.lambda_min), ("xi", args.xi),
                                ("upsilon", args.upsilon)) if v is not None}
    rows = []
    for p in args.p:
        for n in args.n:
            if args.design in ("gaussian", "rademacher", "sphere", "orthonormal"):
                fam = make_design(args.design, p)
            elif args.design == "elliptical":
                fam = EllipticalDesign.chi(p)
            else:
                fam = args.design
            rep = example_bound(fam, n, args.gamma, args.L, args.a, p=p, **params)
            c = rep.components
            rows.append({"design": args.design, "p": p, "n": n, "bound_value": rep.bound_value,
                         "failure_probability": rep.failure_probability, "xi": c["xi"],
                         "m_required": c["m_required"], "L": c["L"], "gamma": c["gamma"]})
    if args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(rows[0].keys())
        for r in rows:
            w.writerow([fmt_real(v) if isinstance(v, float) else v for v in r.values()])
    else:
        head = f"{'design':<14} {'p':>4} {'n':>7} {'bound':>12} {'fail_prob':>10} {'xi':>10} {'m_required':>11}"
        print(head)
        for r in rows:
            print(f"{r['design']:<14} {r['p']:>4} {r['n']:>7} {r['bound_value']:>12.5g} "
                  f"{r['failure_probability']:>10.4f} {r['xi']:>10.5g} {r['m_required']:>11.1f}")
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        emit_table(rows, args.out_dir / "bounds.csv")
    return EXIT_OK


def _cmd_fit(args) -> int:
    try:
        ds = read_dataset(args.data)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.data}: {exc.strerror}") from None
    m = args.method
    if m in ("cheb-lasso", "lasso") and args.lam is None:
        raise ConfigError(f"--lambda is required for {m}")
    if m == "cls" and args.a is None:
        raise ConfigError("--a is required for cls")
    if m == "linf":
        fit = fit_chebyshev_lp(ds)
    elif m == "irls":
        fit = fit_chebyshev_irls(ds)
    elif m == "cls":
        fit = fit_constrained_ls(ds, args.a)
    elif m == "cheb-lasso":
        fit = fit_chebyshev_lasso(ds, LassoConfig(args.lam))
    elif m == "lasso":
        fit = fit_lasso_cd(ds, LassoConfig(args.lam))
    else:
        fit = fit_ols(ds)
    rows = [{"term": f"x{j + 1}", "estimate": float(b)} for j, b in enumerate(fit.beta_hat)]
    rows.append({"term": "a_hat", "estimate": fit.a_hat})
    emit_table(rows, args.out)
    print(f"{fit.estimator_tag}: status={fit.status} iterations={fit.iterations} a_hat={fit.a_hat:.10g}")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bounds":
            return _cmd_bounds(args)
        if args.command == "fit":
            return _cmd_fit(args)
        return _cmd_experiment(args)
    except (SolverFailure, RankDeficientError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
