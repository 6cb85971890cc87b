"""Fitting procedures: l-infinity (LP and IRLS), slab-constrained least squares,
Chebyshev's LASSO, coordinate-descent LASSO and ordinary least squares."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .linalg import check_full_rank, solve_least_squares, weighted_least_squares
from .lp import (
    LpStatus,
    SimplexEngine,
    SolverConfig,
    SolverFailure,
    linf_lasso_problem,
    linf_problem,
    solve_lp,
)
from .model import Dataset, FitResult
from .qp import slab_qp


@dataclass(frozen=True)
class IrlsConfig:
    max_iters: int = 500
    weight_floor: float = 1e-12
    convergence_tol: float = 1e-10

    def __post_init__(self):
        if self.max_iters < 1 or not self.weight_floor > 0 or not self.convergence_tol > 0:
            raise ValueError("IRLS settings must be positive")


@dataclass(frozen=True)
class LassoConfig:
    lam: float
    max_iters: int = 10000
    tol: float = 1e-9
    kkt_tol: float = 1e-7

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError("lambda must be finite and nonnegative")
        if self.max_iters < 1 or not self.tol > 0:
            raise ValueError("max_iters and tol must be positive")


def _fit(ds: Dataset, beta: np.ndarray, tag: str, iterations: int, status: str, **extra) -> FitResult:
    r = ds.y - ds.X @ beta
    return FitResult(beta, float(np.max(np.abs(r))), r, tag, int(iterations), status, dict(extra))


def _require(sol, what: str):
    if not sol.optimal:
        raise SolverFailure(sol.status, f"{what}: LP stopped with status {sol.status.value}")


# -- l-infinity ----------------------------------------------------------------

def fit_chebyshev_lp(ds: Dataset, config: SolverConfig | None = None) -> FitResult:
    """Minimise max_i |y_i - X_i beta| through its linear-programming form."""
    check_full_rank(ds.X)
    sol = solve_lp(linf_problem(ds.X, ds.y), config)
    _require(sol, "Chebyshev fit")
    return _fit(ds, sol.x[: ds.p].copy(), "linf", sol.iterations, LpStatus.OPTIMAL.value,
                lp_radius=float(sol.x[ds.p]))


def _levelled_fit(X: np.ndarray, y: np.ndarray, S: np.ndarray, signs: np.ndarray):
    """Equal-ripple fit on the reference set S, returned only if provably optimal.

    Solves X_S beta + signs * h = y_S. When some nonnegative weights lam
    satisfy sum lam_i signs_i X_i = 0 on S, h is a lower bound on the optimal
    max residual, so a fit whose max residual equals h is optimal.
    """
    p = X.shape[1]
    M = np.column_stack([X[S], signs])
    K = np.vstack([(X[S] * signs[:, None]).T, np.ones(p + 1)])
    rhs = np.zeros(p + 1)
    rhs[p] = 1.0
    try:
        sol = np.linalg.solve(M, y[S])
        lam = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        return None
    beta, h = sol[:p], sol[p]
    if h < 0 or np.min(lam) < -1e-12:
        return None
    if np.max(np.abs(y - X @ beta)) <= h * (1.0 + 1e-12) + 1e-14:
        return beta
    return None


def _certify(X, y, w, r, spare: int = 2):
    """Try the heaviest IRLS weights as the extremal reference set."""
    n, p = X.shape
    if n < p + 1:
        return None
    top = np.argsort(-w, kind="stable")[: min(n, p + 1 + spare)]
    for S in itertools.combinations(top, p + 1):
        S = np.array(S)
        out = _levelled_fit(X, y, S, np.where(r[S] >= 0, 1.0, -1.0))
        if out is not None:
            return out
    return None


def fit_chebyshev_irls(ds: Dataset, cfg: IrlsConfig | None = None) -> FitResult:
    """Lawson's iteratively reweighted least squares for the l-infinity fit.

    Weights start uniform and are updated as w_i <- w_i |r_i| / sum_j w_j |r_j|
    (floored). Each iterate also tries an equal-ripple fit on its p + 1
    heaviest points and stops early once that fit is certified optimal.
    """
    cfg = cfg or IrlsConfig()
    X, y = ds.X, ds.y
    check_full_rank(X)
    n = ds.n
    w = np.full(n, 1.0 / n)
    prev = np.inf
    beta = np.zeros(ds.p)
    for it in range(1, cfg.max_iters + 1):
        beta = weighted_least_squares(X, y, w)
        r = y - X @ beta
        obj = float(np.max(np.abs(r)))
        exact = _certify(X, y, w, r)
        if exact is not None:
            return _fit(ds, exact, "irls", it, LpStatus.OPTIMAL.value, certified=True)
        if abs(prev - obj) < cfg.convergence_tol:
            return _fit(ds, beta, "irls", it, LpStatus.OPTIMAL.value, certified=False)
        prev = obj
        wr = w * np.abs(r)
        total = wr.sum()
        if total == 0.0:  # exact interpolation
            return _fit(ds, beta, "irls", it, LpStatus.OPTIMAL.value, certified=True)
        w = np.maximum(wr / total, cfg.weight_floor)
    return _fit(ds, beta, "irls", cfg.max_iters, LpStatus.ITERATION_LIMIT.value, certified=False)


def fit_constrained_ls(ds: Dataset, a: float) -> FitResult:
    """Least squares over the slab |y - X beta| <= a (raises InfeasibleError if empty)."""
    res = slab_qp(ds.X, ds.y, a)
    return _fit(ds, res.beta, "cls", res.iterations, LpStatus.OPTIMAL.value,
                a_used=float(a), kkt_residual=res.kkt_residual)


# -- Chebyshev's LASSO -----------------------------------------------------------

def chebyshev_lasso_path(ds: Dataset, lambdas, config: SolverConfig | None = None) -> list[FitResult]:
    """Chebyshev's LASSO at several penalties, warm-starting from large to small.

    Results come back in the order of ``lambdas``.
    """
    lambdas = np.asarray(lambdas, dtype=np.float64).reshape(-1)
    if lambdas.size == 0 or np.any(~np.isfinite(lambdas)) or np.any(lambdas < 0):
        raise ValueError("penalties must be finite and nonnegative")
    p = ds.p
    problem = linf_lasso_problem(ds.X, ds.y, float(lambdas.max()))
    engine = SimplexEngine(problem, config)
    out: list[FitResult | None] = [None] * lambdas.size
    for k in np.argsort(-lambdas, kind="stable"):
        lam = float(lambdas[k])
        c = np.concatenate([np.full(2 * p, lam), [1.0]])
        sol = engine.solve(c)
        _require(sol, f"Chebyshev LASSO at lambda={lam:g}")
        beta = sol.x[:p] - sol.x[p: 2 * p]
        out[k] = _fit(ds, beta, "cheb-lasso", sol.iterations, LpStatus.OPTIMAL.value,
                      lam=lam, objective=float(sol.objective_value))
    return out  # type: ignore[return-value]


def fit_chebyshev_lasso(ds: Dataset, cfg: LassoConfig) -> FitResult:
    """min a + lam ||beta||_1 subject to |y - X beta| <= a, via beta = beta+ - beta-."""
    return chebyshev_lasso_path(ds, [cfg.lam])[0]


# -- coordinate-descent LASSO ------------------------------------------------------

def lasso_objective(X: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    n = X.shape[0]
    r = y - X @ beta
    return float(r @ r / (2 * n) + lam * np.sum(np.abs(beta)))


def lasso_kkt_residual(X: np.ndarray, resid: np.ndarray, beta: np.ndarray, lam: float) -> np.ndarray:
    """Per-coordinate distance of -grad from lam * subdifferential(|beta_j|)."""
    g = X.T @ resid / X.shape[0]
    return np.where(beta != 0, np.abs(g - lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))


def lasso_lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty with an all-zero LASSO solution."""
    return float(np.max(np.abs(X.T @ y)) / X.shape[0])


class _CdState:
    def __init__(self, X: np.ndarray, y: np.ndarray):
        self.X = X
        self.Xf = np.asfortranarray(X)
        self.n = X.shape[0]
        self.scale = np.einsum("ij,ij->j", X, X) / self.n
        self.y = y
        self.beta = np.zeros(X.shape[1])
        self.resid = y.copy()

    def solve(self, lam: float, max_iters: int, tol: float, kkt_tol: float) -> tuple[str, int, float]:
        """Active-set cyclic coordinate descent until the KKT residual is below ``kkt_tol``."""
        sweeps = 0
        sweep_tol = tol
        X, beta = self.X, self.beta
        kkt = lasso_kkt_residual(X, self.resid, beta, lam)
        active = np.flatnonzero((beta != 0) | (kkt > kkt_tol)).astype(np.int64)
        while True:
            worst = float(np.max(kkt, initial=0.0))
            if worst <= kkt_tol:
                return LpStatus.OPTIMAL.value, sweeps, worst
            if sweeps >= max_iters:
                return LpStatus.ITERATION_LIMIT.value, sweeps, worst
            done, _ = kernels.cd_sweeps(self.Xf, self.resid, beta, self.scale, lam, 1.0 / self.n,
                                        active, max_iters - sweeps, sweep_tol)
            sweeps += int(done)
            # refresh the residual to shed drift from the incremental updates
            self.resid = self.y - X @ beta
            kkt = lasso_kkt_residual(X, self.resid, beta, lam)
            grown = np.flatnonzero((beta != 0) | (kkt > kkt_tol)).astype(np.int64)
            if np.array_equal(grown, active):
                sweep_tol = max(sweep_tol * 0.1, 1e-16)
            active = np.union1d(active, grown).astype(np.int64)

    def solve_loose(self, lam: float, max_iters: int, thresh: float) -> tuple[str, int, float]:
        """glmnet-style convergence: sweep the active set until no update moves the
        loss by more than ``thresh`` (scale_j * delta_j^2), then admit any
        coordinate that violates its zero-subgradient condition and repeat."""
        sweeps = 0
        X, beta = self.X, self.beta
        g = np.abs(X.T @ self.resid) / self.n
        active = np.flatnonzero((beta != 0) | (g > lam)).astype(np.int64)
        status = LpStatus.OPTIMAL.value
        while True:
            if sweeps >= max_iters:
                status = LpStatus.ITERATION_LIMIT.value
                break
            done, _ = kernels.cd_sweeps(self.Xf, self.resid, beta, self.scale, lam, 1.0 / self.n,
                                        active, max_iters - sweeps, thresh, True)
            sweeps += int(done)
            self.resid = self.y - X @ beta
            g = np.abs(X.T @ self.resid) / self.n
            grown = np.flatnonzero((beta != 0) | (g > lam)).astype(np.int64)
            extra = np.setdiff1d(grown, active)
            if extra.size == 0:
                break
            active = np.union1d(active, extra).astype(np.int64)
        kkt = float(np.max(lasso_kkt_residual(X, self.resid, beta, lam), initial=0.0))
        return status, sweeps, kkt


def lasso_path(ds: Dataset, lambdas, max_iters: int = 10000, tol: float = 1e-9,
               kkt_tol: float = 1e-7) -> list[FitResult]:
    """Coordinate-descent LASSO over several penalties with warm starts (largest first)."""
    lambdas = np.asarray(lambdas, dtype=np.float64).reshape(-1)
    if lambdas.size == 0 or np.any(~np.isfinite(lambdas)) or np.any(lambdas < 0):
        raise ValueError("penalties must be finite and nonnegative")
    state = _CdState(ds.X, ds.y)
    out: list[FitResult | None] = [None] * lambdas.size
    for k in np.argsort(-lambdas, kind="stable"):
        lam = float(lambdas[k])
        status, sweeps, kkt = state.solve(lam, max_iters, tol, kkt_tol)
        out[k] = _fit(ds, state.beta.copy(), "lasso", sweeps, status, lam=lam, kkt_residual=kkt)
    return out  # type: ignore[return-value]


def lasso_path_glmnet(ds: Dataset, lambdas, thresh: float = 1e-7, max_iters: int = 100000,
                      fdev: float = 1e-5, devmax: float = 0.999) -> list[FitResult]:
    """LASSO path with glmnet's default stopping behaviour.

    Inner loops stop once no coordinate update changes the loss by more than
    ``thresh`` times the null deviance per observation (y^T y / n, no
    intercept). The path ends early, as glmnet's does, when the fraction of
    deviance explained exceeds ``devmax`` or grows by less than ``fdev``
    (relative) from one penalty to the next. Penalties are visited in
    decreasing order and only the fits actually computed are returned.
    """
    lambdas = np.sort(np.asarray(lambdas, dtype=np.float64).reshape(-1))[::-1]
    if lambdas.size == 0 or np.any(~np.isfinite(lambdas)) or np.any(lambdas < 0):
        raise ValueError("penalties must be finite and nonnegative")
    state = _CdState(ds.X, ds.y)
    null_dev = float(ds.y @ ds.y)
    tol = thresh * null_dev / ds.n
    out: list[FitResult] = []
    prev = 0.0
    for lam in lambdas:
        status, sweeps, kkt = state.solve_loose(float(lam), max_iters, tol)
        out.append(_fit(ds, state.beta.copy(), "lasso", sweeps, status, lam=float(lam), kkt_residual=kkt))
        r = state.resid
        dev = 1.0 - float(r @ r) / null_dev if null_dev > 0 else 1.0
        if dev > devmax or (len(out) > 1 and dev - prev < fdev * dev):
            break
        prev = dev
    return out


def fit_lasso_cd(ds: Dataset, cfg: LassoConfig) -> FitResult:
    """Minimise (1/(2n)) ||y - X beta||^2 + lam ||beta||_1 by cyclic coordinate descent."""
    return lasso_path(ds, [cfg.lam], cfg.max_iters, cfg.tol, cfg.kkt_tol)[0]


def lasso_lambda_grid(X: np.ndarray, y: np.ndarray, count: int = 100, ratio: float = 1e-4) -> np.ndarray:
    """``count`` log-spaced penalties from lambda_max down to ``ratio * lambda_max``."""
    lmax = lasso_lambda_max(X, y)
    if lmax == 0.0:
        return np.zeros(1)
    return np.geomspace(lmax, ratio * lmax, count)


# -- OLS ---------------------------------------------------------------------------

def fit_ols(ds: Dataset) -> FitResult:
    beta = solve_least_squares(ds.X, ds.y)
    return _fit(ds, beta, "ols", 1, LpStatus.OPTIMAL.value)

