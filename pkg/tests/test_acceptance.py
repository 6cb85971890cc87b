"""One test per acceptance criterion, each at its pinned tolerance.

Every test appends a (label, ok, detail) line to REPORT before asserting; the
conftest hook prints the lines at the end of the run.
"""

import math
import time

import numpy as np
import pytest
from scipy import optimize

from chebfit.cli import main
from chebfit.designs import (GaussianDesign, OrthonormalDesign, RademacherDesign, UniformNoise, sample_design,
                             sample_noise)
from chebfit.estimators import fit_chebyshev_irls, fit_chebyshev_lp
from chebfit.experiments import ExperimentConfig, run_lasso_compare, run_ols_vs_cheb, run_rate_curve
from chebfit.geometry import Containment, ball_in_hull_2d, estimate_containment_probability
from chebfit.model import Dataset, Truth, critical_report
from chebfit.theory import (containment_constants, containment_prob_bound, minimax_risk_mc,
                            minimax_risk_orthonormal, order_stat_tail_bound)
from oracles import order_stat_tail_frequency

REPORT: list[tuple[str, bool, str]] = []


def report(label, ok, detail):
    REPORT.append((str(label), bool(ok), detail))
    assert ok, f"criterion {label}: {detail}"


# -- 1. exact solver cases ------------------------------------------------------------------

def test_criterion_01_exact_cases():
    t0 = time.perf_counter()
    y = np.array([3.0, -1.5, 7.25, 0.5, 2.0])
    mid = fit_chebyshev_lp(Dataset(np.ones((5, 1)), y)).beta_hat[0]
    err_mid = abs(mid - (y.max() + y.min()) / 2)
    X = sample_design(GaussianDesign.identity(4), 12, seed=1)
    beta = np.array([1.0, -2.0, 0.5, 3.0])
    err_rec = float(np.max(np.abs(fit_chebyshev_lp(Dataset(X, X @ beta)).beta_hat - beta)))
    dt = time.perf_counter() - t0
    report(1, err_mid <= 1e-9 and err_rec <= 1e-9 and dt < 1.0,
           f"|midrange err|={err_mid:.2e}, recovery err={err_rec:.2e}, {dt:.2f} s")


# -- 2./3. cross-solver agreement and the critical inequality ------------------------------------

def _instances():
    out = []
    for k in range(100):
        p = 1 + k % 5
        n = 10 + (7 * k) % 91
        X = sample_design(GaussianDesign.identity(p), n, seed=k)
        eps = sample_noise(UniformNoise(1.0), n, seed=k)
        beta = np.where(np.arange(p) % 2, -1.0, 1.0)
        out.append(Dataset(X, X @ beta + eps, Truth(beta, 1.0, eps)))
    return out


def _grid_oracle(ds, center, half=0.15, pts=None):
    """Min of max |y - X b| over a regular grid around center."""
    p = ds.p
    pts = pts or {1: 301, 2: 61, 3: 21, 4: 11, 5: 7}[p]
    axes = [c + np.linspace(-half, half, pts) for c in center]
    G = np.array(np.meshgrid(*axes, indexing="ij")).reshape(p, -1).T
    best = np.inf
    for blk in np.array_split(G, max(1, G.shape[0] // 4000)):
        best = min(best, float(np.min(np.max(np.abs(ds.y[None, :] - blk @ ds.X.T), axis=1))))
    return best


@pytest.fixture(scope="module")
def instance_fits():
    return [(ds, fit_chebyshev_lp(ds), fit_chebyshev_irls(ds)) for ds in _instances()]


def test_criterion_02_cross_solver(instance_fits):
    t0 = time.perf_counter()
    worst_gap, worst_grid, worst_highs = 0.0, -np.inf, 0.0
    for ds, lp, irls in instance_fits:
        worst_gap = max(worst_gap, abs(irls.a_hat - lp.a_hat))
        # grid centred on the OLS fit, an independent starting point
        ols = np.linalg.lstsq(ds.X, ds.y, rcond=None)[0]
        worst_grid = max(worst_grid, lp.a_hat - min(_grid_oracle(ds, ols), _grid_oracle(ds, ds.truth.beta_star)))
        n, p = ds.X.shape
        A = np.block([[ds.X, -np.ones((n, 1))], [-ds.X, -np.ones((n, 1))]])
        res = optimize.linprog(np.r_[np.zeros(p), 1.0], A_ub=A, b_ub=np.r_[ds.y, -ds.y],
                               bounds=[(None, None)] * p + [(0, None)], method="highs")
        worst_highs = max(worst_highs, abs(res.fun - lp.a_hat))
    dt = time.perf_counter() - t0
    report(2, worst_gap <= 1e-6 and worst_grid <= 1e-6 and worst_highs <= 1e-6 and dt < 60,
           f"max |a_irls - a_lp|={worst_gap:.2e}, max(a_lp - grid)={worst_grid:.2e}, "
           f"max |a_lp - highs|={worst_highs:.2e}, {dt:.1f} s (100 instances)")


FIG1 = dict(n_grid=tuple(range(30, 111, 10)), p_grid=(4, 8, 12, 16, 20), a=2.0, reps=100, seed=0)


@pytest.fixture(scope="module")
def rate_runs():
    out = {}
    for design in ("gaussian", "rademacher", "sphere"):
        t0 = time.perf_counter()
        res = run_rate_curve(ExperimentConfig(experiment="rate", design=design, **FIG1))
        out[design] = (res, time.perf_counter() - t0)
    return out


def test_criterion_03_critical_inequality(instance_fits, rate_runs):
    slack, excess, count = np.inf, -np.inf, 0
    for ds, lp, _ in instance_fits:
        slack = min(slack, critical_report(ds, lp.beta_hat).min_slack)
        excess = max(excess, lp.a_hat - ds.truth.a)
        count += 1
    for res, _ in rate_runs.values():
        for r in res.records:
            slack = min(slack, r.min_slack)
            excess = max(excess, r.a_hat - 2.0)
            count += 1
    report(3, slack >= -1e-9 and excess <= 1e-12,
           f"min slack={slack:.3e}, max(a_hat - a)={excess:.3e} over {count} fits")


# -- 4. rate curves -------------------------------------------------------------------------------

def test_criterion_04_rate_curves(rate_runs):
    parts, ok = [], True
    for design, (res, dt) in rate_runs.items():
        fit = res.fits["rate"]
        ok &= fit["r2"] >= 0.95 and not res.failures and dt < 600
        parts.append(f"{design} R^2={fit['r2']:.4f} vs {fit['x_axis']} ({dt:.0f} s)")
    report(4, ok, "; ".join(parts))


# -- 5. LASSO comparison table--------------------------------------------------------------------------------

REFERENCE_L1 = {"cheb-lasso": {(600, 4): 1.06, (600, 10): 3.4, (800, 4): 0.83, (800, 10): 2.4},
          "lasso": {(600, 4): 1.53, (600, 10): 3.7, (800, 4): 1.32, (800, 10): 3.11}}


def _table(res):
    return {(r["estimator_tag"], r["n"], r["s"]): r["mean_l1_error"] for r in res.summary}


def test_criterion_05_smoke_dominance():
    t0 = time.perf_counter()
    res = run_lasso_compare(ExperimentConfig(experiment="lasso-compare", a=5.0, n_grid=(600,), s_grid=(4,),
                                             reps=10, seed=0))
    dt = time.perf_counter() - t0
    t = _table(res)
    c, l = t[("cheb-lasso", 600, 4)], t[("lasso", 600, 4)]
    report("5 (smoke)", c < l and dt < 300, f"n=600 s=4 10 reps: cheb-lasso {c:.3f} < lasso {l:.3f}, {dt:.0f} s")


@pytest.mark.slow
def test_criterion_05_lasso_table():
    t0 = time.perf_counter()
    res = run_lasso_compare(ExperimentConfig(experiment="lasso-compare", a=5.0, n_grid=(600, 800), s_grid=(4, 10),
                                             reps=100, seed=0))
    dt = time.perf_counter() - t0
    t = _table(res)
    ok, parts = not res.failures and dt < 3600, []
    for (n, s) in REFERENCE_L1["lasso"]:
        c, l = t[("cheb-lasso", n, s)], t[("lasso", n, s)]
        rc, rl = c / REFERENCE_L1["cheb-lasso"][(n, s)] - 1, l / REFERENCE_L1["lasso"][(n, s)] - 1
        ok &= abs(rc) <= 0.30 and abs(rl) <= 0.30 and c < l
        parts.append(f"({n},{s}) cheb {c:.3f} ({rc:+.0%}) lasso {l:.3f} ({rl:+.0%})")
    report(5, ok, "; ".join(parts) + f"; {dt / 60:.1f} min")


# -- 6. rate separation -------------------------------------------------------------------------------

def test_criterion_06_rate_separation():
    t0 = time.perf_counter()
    res = run_ols_vs_cheb(ExperimentConfig(experiment="ols-vs-cheb", design="gaussian", p_grid=(4,),
                                           n_grid=(50, 100, 200, 400, 800), reps=100, seed=0))
    dt = time.perf_counter() - t0
    sc, so = res.fits["linf"]["slope"], res.fits["ols"]["slope"]
    report(6, -1.15 <= sc <= -0.85 and -0.6 <= so <= -0.4 and dt < 300,
           f"chebyshev slope {sc:.3f}, OLS slope {so:.3f}, {dt:.1f} s")


# -- 7. order-statistic tail bound -------------------------------------------------------------------

def test_criterion_07_tail_bound():
    t0 = time.perf_counter()
    worst, ok = -np.inf, True
    for i, (n, (K, L)) in enumerate((n, kl) for n in (200, 500, 1000) for kl in ((1, 3.0), (5, 2.0), (10, 1.0))):
        freq, se = order_stat_tail_frequency(n, K, L, 10**5, seed=i)
        bound = order_stat_tail_bound(n, K, L)
        ok &= freq <= bound + 3 * se
        worst = max(worst, freq - bound - 3 * se)
    dt = time.perf_counter() - t0
    report(7, ok and dt < 120, f"max(freq - bound - 3 SE)={worst:.4f} over 9 points, {dt:.1f} s")


# -- 8. containment bound -----------------------------------------------------------------------------

def _sweep_min_support(P, k=10**5):
    t = np.linspace(0.0, 2 * np.pi, k, endpoint=False)
    V = np.column_stack([np.cos(t), np.sin(t)])
    return float(np.min(np.max(V @ P.T, axis=1)))


def test_criterion_08_containment():
    t0 = time.perf_counter()
    ok, parts = True, []
    grid = [(GaussianDesign.identity(2), (400, 600), 1000), (RademacherDesign(2), (400, 600), 1000),
            (GaussianDesign.identity(3), (600, 800), 100), (RademacherDesign(3), (800, 1000), 100)]
    for d, ms, trials in grid:
        c = containment_constants(d)
        for m in ms:
            bound = containment_prob_bound(c.xi, c.rho, c.upsilon, d.p, m)
            est = estimate_containment_probability(d, m, c.xi, trials, seed=m + d.p)
            ok &= bound < 1 and est.probability <= bound + 3 * est.std_error
            parts.append(f"{d.name} p={d.p} m={m}: {est.probability:.3f} <= {bound:.3g}")
    rng = np.random.default_rng(8)
    agree = 0
    for _ in range(200):
        P = rng.standard_normal((int(rng.integers(3, 40)), 2)) * rng.choice([-1.0, 1.0], size=(1, 1))
        xi = float(rng.uniform(0.0, 1.0))
        exact = ball_in_hull_2d(P, xi).contained is Containment.CERTIFIED
        sweep = _sweep_min_support(P)
        agree += exact == (sweep >= xi) or abs(sweep - xi) < 1e-6
    dt = time.perf_counter() - t0
    ok &= agree == 200 and dt < 300
    report(8, ok, "; ".join(parts) + f"; 2-d sweep agreement {agree}/200; {dt:.0f} s")


# -- 9. minimax -----------------------------------------------------------------------------------

def test_criterion_09_minimax():
    a, p, n = 2.0, 4, 100
    exact_ok = minimax_risk_orthonormal(a, p, n) == a ** 2 * p ** 2 / (16 * n ** 2)
    est = minimax_risk_mc(OrthonormalDesign.standard(p), n, a, 10**6, seed=0)
    rel = abs(est.value / minimax_risk_orthonormal(a, p, n) - 1)
    report(9, exact_ok and rel <= 0.02,
           f"closed form exact={exact_ok}, MC {est.value:.4e} vs {minimax_risk_orthonormal(a, p, n):.4e} "
           f"(rel {rel:.2%})")


# -- 10. determinism -------------------------------------------------------------------------------

CONFIGS = {
    "rate": "[experiment]\nkind = rate\ndesign = rademacher\nn_grid = 30, 60\np_grid = 4, 8\nreps = 4\nseed = 5\n",
    "ols-vs-cheb": "[experiment]\nkind = ols-vs-cheb\nn_grid = 50, 100\np_grid = 4\nreps = 4\nseed = 6\n",
    "lasso-compare": "[experiment]\nkind = lasso-compare\na = 5\nn_grid = 60\ns_grid = 2, 4\np_offset = 40\n"
                     "reps = 2\nseed = 7\n[lasso]\ngrid_count = 20\n",
    "containment": "[experiment]\nkind = containment\ndesign = gaussian\np_grid = 2, 3\n"
                   "[containment]\nm_grid = 40\ntrials = 6\n",
}


def test_criterion_10_determinism(tmp_path):
    ok, parts = True, []
    for kind, text in CONFIGS.items():
        cfg = tmp_path / f"{kind}.ini"
        cfg.write_text(text)
        name = "containment.csv" if kind == "containment" else "records.csv"
        outs = []
        for tag, jobs in (("a", 1), ("b", 1), ("c", 8)):
            out = tmp_path / f"{kind}-{tag}"
            rc = main([kind, "--config", str(cfg), "--jobs", str(jobs), "--out-dir", str(out)])
            outs.append((out / name).read_bytes() if rc == 0 else f"exit {rc}".encode())
        same = outs[0] == outs[1] == outs[2]
        ok &= same
        parts.append(f"{kind} {'identical' if same else 'DIFFERENT'}")
    report(10, ok, "; ".join(parts) + " (rerun and --jobs 1 vs 8)")
