"""Least squares restricted to the residual slab |y - X beta| <= a.

Primal active-set method: the working set holds linearly independent slab
faces, each step minimises the squared loss on their intersection, and a
face is released when its multiplier has the wrong sign. The start is the
Chebyshev (l-infinity) fit, which lies in the slab whenever it is nonempty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, as_vector, check_full_rank
from .lp import InfeasibleError, LpStatus, SolverConfig, SolverFailure, linf_problem, solve_lp


@dataclass
class SlabQpResult:
    beta: np.ndarray
    iterations: int
    kkt_residual: float
    active: np.ndarray
    """Indices of the binding faces; i < n is X_i beta <= y_i + a, i >= n is the lower face."""


def _independent_subset(G: np.ndarray, rows: np.ndarray, tol: float) -> list[int]:
    """Greedily keep rows of G that are linearly independent of those before."""
    basis: list[np.ndarray] = []
    keep: list[int] = []
    for i in rows:
        v = G[i].copy()
        for q in basis:
            v -= (q @ v) * q
        nv = np.linalg.norm(v)
        if nv > tol * max(1.0, np.linalg.norm(G[i])):
            basis.append(v / nv)
            keep.append(int(i))
        if len(keep) == G.shape[1]:
            break
    return keep


def _null_space(GW: np.ndarray, p: int) -> np.ndarray:
    k = GW.shape[0]
    if k == 0:
        return np.eye(p)
    Q, _ = np.linalg.qr(GW.T, mode="complete")
    return Q[:, k:]


def _multipliers(GW: np.ndarray, g: np.ndarray) -> np.ndarray:
    if GW.shape[0] == 0:
        return np.empty(0)
    return np.linalg.lstsq(GW.T, g, rcond=None)[0]


def slab_qp(X, y, a: float, beta0=None, feas_tol: float = 1e-9, max_iter: int | None = None) -> SlabQpResult:
    """Minimise (1/n) ||y - X beta||^2 subject to y - a <= X beta <= y + a.

    ``beta0`` must lie in the slab; by default the Chebyshev fit is used and
    :class:`InfeasibleError` is raised if its radius exceeds ``a``.
    """
    X = as_matrix(X)
    n, p = X.shape
    y = as_vector(y, n)
    if not np.isfinite(a) or a < 0:
        raise ValueError("slab half-width a must be finite and nonnegative")
    check_full_rank(X)
    scale = max(1.0, float(np.max(np.abs(y))), float(a))
    if beta0 is None:
        sol = solve_lp(linf_problem(X, y), SolverConfig(feas_tol=feas_tol))
        if not sol.optimal:
            raise SolverFailure(sol.status, "Chebyshev start could not be computed")
        beta = sol.x[:p].copy()
        a_min = float(np.max(np.abs(y - X @ beta)))
        if a_min > a + feas_tol * scale:
            raise InfeasibleError(f"slab is empty: smallest feasible half-width is {a_min:.17g} > a = {a:.17g}")
    else:
        beta = as_vector(beta0, p, "beta0").copy()
        if np.max(np.abs(y - X @ beta)) > a + feas_tol * scale:
            raise ValueError("beta0 is outside the slab")

    G = np.vstack([X, -X])
    h = np.concatenate([y + a, a - y])
    cap = 10 * (2 * n + p) if max_iter is None else max_iter
    gap = h - G @ beta
    work = _independent_subset(G, np.flatnonzero(gap <= feas_tol * scale), 1e-10)
    stalled = 0
    it = 0
    while True:
        if it >= cap:
            raise SolverFailure(LpStatus.ITERATION_LIMIT, f"active-set QP hit its cap of {cap} iterations")
        it += 1
        GW = G[work]
        r = y - X @ beta
        Z = _null_space(GW, p)
        if Z.shape[1]:
            u = np.linalg.lstsq(X @ Z, r, rcond=None)[0]
            step = Z @ u
        else:
            step = np.zeros(p)
        if np.linalg.norm(step) <= 1e-13 * (1.0 + np.linalg.norm(beta)):
            mu = _multipliers(GW, X.T @ r)
            neg = np.flatnonzero(mu < -1e-12 * max(1.0, float(np.max(np.abs(mu), initial=0.0))))
            if neg.size == 0:
                break
            # Bland-style choice after repeated null steps prevents cycling
            drop = neg[np.argmin(np.asarray(work)[neg])] if stalled > p else neg[np.argmin(mu[neg])]
            work.pop(int(drop))
            continue
        Gs = G @ step
        gap = h - G @ beta
        alpha, block = 1.0, -1
        in_work = np.zeros(2 * n, dtype=bool)
        in_work[work] = True
        cand = np.flatnonzero(~in_work & (Gs > 1e-14 * np.linalg.norm(step)))
        if cand.size:
            ratios = np.maximum(gap[cand], 0.0) / Gs[cand]
            k = int(np.argmin(ratios))
            if ratios[k] < 1.0:
                alpha, block = float(ratios[k]), int(cand[k])
        beta = beta + alpha * step
        if block >= 0:
            work.append(block)
            stalled = stalled + 1 if alpha == 0.0 else 0
        else:
            stalled = 0

    r = y - X @ beta
    GW = G[work]
    mu = _multipliers(GW, X.T @ r)
    kkt = (2.0 / n) * float(np.max(np.abs(X.T @ r - GW.T @ mu))) if p else 0.0
    kkt = max(kkt, float(np.max(G @ beta - h, initial=0.0)), float(-np.min(mu, initial=0.0)) * 2.0 / n)
    return SlabQpResult(beta, it, kkt, np.array(sorted(work), dtype=np.int64))


def solve_qp_box_slab(X, y, a: float) -> np.ndarray:
    """Return the least-squares fit constrained to ``|y - X beta| <= a`` entrywise."""
    return slab_qp(X, y, a).beta
