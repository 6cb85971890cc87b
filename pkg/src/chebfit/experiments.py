"""Seeded Monte-Carlo experiments: rate curves, LASSO comparison, OLS vs Chebyshev, containment.

Every replication is an independent task keyed by ``(cell, rep)``; its data
come from streams derived from ``(seed, cell, rep)`` only, so the record
table is the same whether tasks run sequentially or in a process pool.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .designs import (GaussianDesign, HalfOnes, OrthonormalDesign, RademacherDesign, SparseSigned, SphereDesign,
                      UniformNoise, make_dataset, triangular_noise)
from .estimators import (chebyshev_lasso_path, fit_chebyshev_lp, fit_ols, lasso_lambda_grid, lasso_path_glmnet)
from .geometry import estimate_containment_probability
from .lp import SolverFailure
from .model import critical_report
from .output import ExperimentRecord, axis_values, line_fit
from .theory import containment_constants, containment_prob_bound

log = logging.getLogger(__name__)

EXPERIMENTS = ("rate", "lasso-compare", "ols-vs-cheb", "containment")
DESIGNS = ("gaussian", "rademacher", "sphere", "orthonormal")
NOISES = ("uniform", "triangular")


@dataclass(frozen=True)
class LambdaGridSpec:
    """count equispaced penalties in [low_mult, high_mult] * sqrt(log p / n^exponent)."""

    count: int = 6
    low_mult: float = 0.1
    high_mult: float = 2.0
    exponent: float = 0.4

    def values(self, n: int, p: int) -> np.ndarray:
        base = math.sqrt(math.log(p) / n ** self.exponent)
        return np.linspace(self.low_mult * base, self.high_mult * base, self.count)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    design: str = "gaussian"
    noise: str = "uniform"
    a: float = 2.0
    n_grid: tuple[int, ...] = (30, 40, 50, 60, 70, 80, 90, 100, 110)
    p_grid: tuple[int, ...] = (4, 8, 12, 16, 20)
    s_grid: tuple[int, ...] = (4, 10)
    reps: int = 100
    seed: int = 0
    lambda_grid: LambdaGridSpec = field(default_factory=LambdaGridSpec)
    lasso_grid_count: int = 100
    lasso_grid_ratio: float = 1e-4
    p_offset: int = 1000
    """LassoCompare dimension is p_offset + s."""
    m_grid: tuple[int, ...] = (300, 400, 600)
    trials: int = 200
    directions: int | None = None
    cell_budget_s: float | None = None
    output_dir: Path = Path("out")

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}; choose from {DESIGNS}")
        if self.noise not in NOISES:
            raise ValueError(f"unknown noise {self.noise!r}; choose from {NOISES}")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError("a must be finite and positive")
        for name in ("n_grid", "p_grid"):
            g = getattr(self, name)
            if not g or min(g) < 1:
                raise ValueError(f"{name} must be a nonempty list of positive counts")
        if self.experiment == "lasso-compare" and (not self.s_grid or min(self.s_grid) < 0):
            raise ValueError("s_grid must be a nonempty list of sparsities")
        if self.experiment == "containment" and (not self.m_grid or min(self.m_grid) < 1):
            raise ValueError("m_grid must be a nonempty list of positive counts")
        if self.reps < 1 or self.trials < 1:
            raise ValueError("reps and trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[ExperimentRecord]
    summary: list[dict]
    fits: dict = field(default_factory=dict)
    """Regression statistics keyed by name (slope, intercept, r2)."""
    failures: list[str] = field(default_factory=list)
    """One line per aborted cell."""


def make_design(name: str, p: int):
    if name == "gaussian":
        return GaussianDesign.identity(p)
    if name == "rademacher":
        return RademacherDesign(p)
    if name == "sphere":
        return SphereDesign(p)
    if name == "orthonormal":
        return OrthonormalDesign.standard(p)
    raise ValueError(f"unknown design {name!r}")


def make_noise(name: str, a: float):
    if name == "uniform":
        return UniformNoise(a)
    if name == "triangular":
        return triangular_noise(a)
    raise ValueError(f"unknown noise {name!r}")


def _record(ds, fit, n, p, s, rep, lam, wall_ms, slack=True) -> ExperimentRecord:
    d = fit.beta_hat - ds.truth.beta_star
    ms = critical_report(ds, fit.beta_hat).min_slack if slack else math.nan
    return ExperimentRecord(n, p, s, rep, fit.estimator_tag, float(np.linalg.norm(d)), float(np.abs(d).sum()),
                            float(fit.a_hat), float(lam), float(ms), wall_ms)


# -- tasks (module level so they pickle) --------------------------------------------

def _rate_task(cfg: ExperimentConfig, cell: int, n: int, p: int, rep: int) -> list[ExperimentRecord]:
    ds = make_dataset(make_design(cfg.design, p), HalfOnes(), make_noise(cfg.noise, cfg.a), n, cfg.seed, (cell, rep))
    t0 = time.perf_counter()
    fit = fit_chebyshev_lp(ds)
    ms = 1e3 * (time.perf_counter() - t0)
    return [_record(ds, fit, n, p, 0, rep, math.nan, ms)]


def _ols_task(cfg: ExperimentConfig, cell: int, n: int, p: int, rep: int) -> list[ExperimentRecord]:
    ds = make_dataset(make_design(cfg.design, p), HalfOnes(), make_noise(cfg.noise, cfg.a), n, cfg.seed, (cell, rep))
    out = []
    for fitter in (fit_chebyshev_lp, fit_ols):
        t0 = time.perf_counter()
        fit = fitter(ds)
        ms = 1e3 * (time.perf_counter() - t0)
        out.append(_record(ds, fit, n, p, 0, rep, math.nan, ms, slack=fitter is fit_chebyshev_lp))
    return out


def _best_l1(fits, beta_star):
    errs = [float(np.abs(f.beta_hat - beta_star).sum()) for f in fits]
    return fits[int(np.argmin(errs))]


def _lasso_task(cfg: ExperimentConfig, cell: int, n: int, s: int, rep: int) -> list[ExperimentRecord]:
    p = cfg.p_offset + s
    ds = make_dataset(make_design(cfg.design, p), SparseSigned(s), make_noise(cfg.noise, cfg.a), n, cfg.seed,
                      (cell, rep))
    t0 = time.perf_counter()
    cheb = _best_l1(chebyshev_lasso_path(ds, cfg.lambda_grid.values(n, p)), ds.truth.beta_star)
    t1 = time.perf_counter()
    grid = lasso_lambda_grid(ds.X, ds.y, cfg.lasso_grid_count, cfg.lasso_grid_ratio)
    lasso = _best_l1(lasso_path_glmnet(ds, grid), ds.truth.beta_star)
    t2 = time.perf_counter()
    return [_record(ds, cheb, n, p, s, rep, cheb.extra["lam"], 1e3 * (t1 - t0)),
            _record(ds, lasso, n, p, s, rep, lasso.extra["lam"], 1e3 * (t2 - t1), slack=False)]


def _guarded(args):
    fn, cfg, cell, a, b, rep = args
    try:
        return fn(cfg, cell, a, b, rep), None
    except (SolverFailure, np.linalg.LinAlgError) as exc:
        return [], f"{type(exc).__name__}: {exc}"


def _run_cells(cfg: ExperimentConfig, fn, cells: list[tuple[int, int]], jobs: int):
    """Run every (cell, rep) task and drop cells with a failure or over budget."""
    tasks = [(fn, cfg, ci, a, b, rep) for ci, (a, b) in enumerate(cells) for rep in range(cfg.reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_guarded, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))
    else:
        results = [_guarded(t) for t in tasks]
    records: list[ExperimentRecord] = []
    failures: list[str] = []
    for ci, (a, b) in enumerate(cells):
        chunk = results[ci * cfg.reps: (ci + 1) * cfg.reps]
        errs = [(rep, e) for rep, (_, e) in enumerate(chunk) if e is not None]
        recs = [r for rs, _ in chunk for r in rs]
        if errs:
            msg = f"cell {ci} ({a}, {b}): rep {errs[0][0]} failed: {errs[0][1]}"
            log.warning("aborting %s", msg)
            failures.append(msg)
            continue
        spent = sum(r.wall_ms for r in recs) / 1e3
        if cfg.cell_budget_s is not None and spent > cfg.cell_budget_s:
            msg = f"cell {ci} ({a}, {b}): {spent:.1f} s exceeds the budget of {cfg.cell_budget_s:g} s"
            log.warning("aborting %s", msg)
            failures.append(msg)
            continue
        records.extend(recs)
    records.sort(key=ExperimentRecord.sort_key)
    return records, failures


def summarize(records: list[ExperimentRecord]) -> list[dict]:
    """Mean errors per (n, p, s, estimator); a pure fold of the record table."""
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for r in sorted(records, key=ExperimentRecord.sort_key):
        groups.setdefault((r.n, r.p, r.s, r.estimator_tag), []).append(r)
    rows = []
    for (n, p, s, tag), rs in sorted(groups.items()):
        rows.append({"n": n, "p": p, "s": s, "estimator_tag": tag, "reps": len(rs),
                     "mean_l2_error": float(np.mean([r.l2_error for r in rs])),
                     "mean_l1_error": float(np.mean([r.l1_error for r in rs])),
                     "mean_a_hat": float(np.mean([r.a_hat for r in rs]))})
    return rows


def rate_axis(design: str) -> str:
    """p sqrt(p)/n for the sphere, p/n otherwise."""
    return "p*sqrt(p)/n" if design == "sphere" else "p/n"


def run_rate_curve(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Mean Chebyshev l2 error over the (n, p) grid and its regression on the rate axis."""
    if cfg.design not in ("gaussian", "rademacher", "sphere", "orthonormal"):
        raise ValueError("rate curves need a gaussian, rademacher, sphere or orthonormal design")
    if any(p % 2 for p in cfg.p_grid):
        raise ValueError("the +-1 coefficient pattern needs even p")
    cells = [(n, p) for p in cfg.p_grid for n in cfg.n_grid]
    records, failures = _run_cells(cfg, _rate_task, cells, jobs)
    summary = summarize(records)
    fits = {}
    if len(summary) >= 2:
        axis = rate_axis(cfg.design)
        x = axis_values(axis, [r["n"] for r in summary], [r["p"] for r in summary])
        lf = line_fit(x, [r["mean_l2_error"] for r in summary])
        fits["rate"] = {"x_axis": axis, "slope": lf.slope, "intercept": lf.intercept, "r2": lf.r2}
    return ExperimentResult(cfg, records, summary, fits, failures)


def run_ols_vs_cheb(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Slopes of log mean l2 error against log n for the Chebyshev fit and OLS at fixed p."""
    p = cfg.p_grid[0]
    cells = [(n, p) for n in cfg.n_grid]
    records, failures = _run_cells(cfg, _ols_task, cells, jobs)
    summary = summarize(records)
    fits = {}
    for tag in ("linf", "ols"):
        rows = [r for r in summary if r["estimator_tag"] == tag]
        if len(rows) >= 2:
            lf = line_fit(np.log([r["n"] for r in rows]), np.log([r["mean_l2_error"] for r in rows]))
            fits[tag] = {"x_axis": "log n", "slope": lf.slope, "intercept": lf.intercept, "r2": lf.r2}
    return ExperimentResult(cfg, records, summary, fits, failures)


def run_lasso_compare(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Oracle-tuned Chebyshev LASSO vs coordinate-descent LASSO over the (n, s) grid."""
    if cfg.design != "gaussian":
        raise ValueError("the LASSO comparison uses the Gaussian design")
    cells = [(n, s) for n in cfg.n_grid for s in cfg.s_grid]
    records, failures = _run_cells(cfg, _lasso_task, cells, jobs)
    summary = summarize(records)
    return ExperimentResult(cfg, records, summary, {}, failures)


def _containment_task(args):
    design_name, p, m, xi, trials, seed, directions, cell = args
    est = estimate_containment_probability(make_design(design_name, p), m, xi, trials, seed, directions, (cell,))
    return est


def run_containment(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """Empirical containment-failure frequency against the theoretical bound for each (p, m)."""
    cells = []
    for p in cfg.p_grid:
        design = make_design(cfg.design, p)
        c = containment_constants(design)
        for m in cfg.m_grid:
            cells.append((p, m, c, containment_prob_bound(c.xi, c.rho, c.upsilon, p, m)))
    args = [(cfg.design, p, m, c.xi, cfg.trials, cfg.seed, cfg.directions, ci) for ci, (p, m, c, _) in enumerate(cells)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            ests = list(pool.map(_containment_task, args))
    else:
        ests = [_containment_task(a) for a in args]
    rows = []
    for (p, m, c, bound), est in zip(cells, ests):
        rows.append({"design": cfg.design, "p": p, "m": m, "xi": c.xi, "rho": c.rho, "upsilon": c.upsilon,
                     "empirical_failure": est.probability, "std_error": est.std_error, "trials": est.trials,
                     "exact": est.exact, "bound": bound})
    return rows


RUNNERS = {"rate": run_rate_curve, "lasso-compare": run_lasso_compare, "ols-vs-cheb": run_ols_vs_cheb}
