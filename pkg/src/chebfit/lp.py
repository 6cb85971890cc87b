"""Dense bounded-variable primal simplex.

Problems have the inequality form

    minimize    c^T x
    subject to  A x <= b,   lower <= x <= upper,

with possibly infinite bounds. Each row gets a nonnegative slack. The solver
keeps a condensed tableau (B^-1 times the nonbasic columns only), prices with
steepest edge (Dantzig and Bland are available too) and falls back to Bland's
rule while the iterates are stalled on a degenerate vertex, so runs are
deterministic and cannot cycle. Infeasible starts are repaired by a phase one
over a single artificial column.

Pairs of nonnegative columns with A_k = -A_j (the split x_j - x_k of a free
variable) are merged into one free variable whose cost has a kink at zero,
which halves the tableau width for l1-penalised problems.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from ._kernels_py import (
    AT_KINK, AT_LOWER, AT_UPPER, BLAND, DANTZIG, FIXED, FREE_ZERO, STEEPEST_EDGE,
)

_PRICING = {"steepest": STEEPEST_EDGE, "dantzig": DANTZIG, "bland": BLAND}


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class SolverConfig:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    pivot_tol: float = 1e-10
    max_iter: int | None = None  # None means 50 * (m + d)
    degen_limit: int = 50
    pricing: str = "steepest"

    def __post_init__(self):
        if self.pricing not in _PRICING:
            raise ValueError(f"unknown pricing rule {self.pricing!r}; choose from {sorted(_PRICING)}")


@dataclass
class LpProblem:
    """minimize objective^T x  s.t.  constraint_matrix x <= rhs, lower <= x <= upper."""

    objective: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=np.float64).reshape(-1)
        A = np.asarray(self.constraint_matrix, dtype=np.float64)
        if A.ndim == 1:
            A = A.reshape(1, -1)
        b = np.asarray(self.rhs, dtype=np.float64).reshape(-1)
        m, d = A.shape
        if m < 1 or d < 1:
            raise ValueError("LP needs at least one constraint and one variable")
        if c.shape[0] != d or b.shape[0] != m:
            raise ValueError(
                f"inconsistent LP dimensions: objective {c.shape[0]}, "
                f"matrix {A.shape}, rhs {b.shape[0]}"
            )
        for name, arr in (("objective", c), ("constraint_matrix", A), ("rhs", b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"LP {name} contains non-finite entries")
        lo = np.zeros(d) if self.lower is None else np.asarray(self.lower, dtype=np.float64).reshape(-1)
        up = np.full(d, np.inf) if self.upper is None else np.asarray(self.upper, dtype=np.float64).reshape(-1)
        if lo.shape[0] != d or up.shape[0] != d:
            raise ValueError("bounds must have one entry per variable")
        if np.any(np.isnan(lo)) or np.any(np.isnan(up)) or np.any(lo == np.inf) or np.any(up == -np.inf) or np.any(lo > up):
            raise ValueError("invalid variable bounds")
        self.objective, self.constraint_matrix, self.rhs = c, A, b
        self.lower, self.upper = lo, up

    @property
    def shape(self) -> tuple[int, int]:
        return self.constraint_matrix.shape


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective_value: float
    iterations: int
    duals: np.ndarray = field(default_factory=lambda: np.empty(0))
    """Row multipliers (>= 0) for A x <= b at an optimal basis."""

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


_LOOP_STATUS = {
    0: LpStatus.OPTIMAL,
    1: LpStatus.UNBOUNDED,
    2: LpStatus.ITERATION_LIMIT,
}


def _mirror_pairs(A: np.ndarray, lo: np.ndarray, up: np.ndarray) -> np.ndarray:
    """Return ``mirror`` with mirror[j] = k > j when columns j, k are a split pair.

    A pair needs both variables in [0, inf) and A[:, k] == -A[:, j] exactly.
    Unpaired columns get -1.
    """
    d = A.shape[1]
    mirror = np.full(d, -1, dtype=np.int64)
    split_ok = (lo == 0.0) & (up == np.inf)
    seen: dict[bytes, int] = {}
    for j in range(d):
        if not split_ok[j]:
            continue
        col = A[:, j]
        if not np.any(col):
            continue
        key = (-col + 0.0).tobytes()  # + 0.0 folds -0.0 into 0.0
        k = seen.pop(key, None)
        if k is not None:
            mirror[k] = j
        else:
            seen[(col + 0.0).tobytes()] = j
    return mirror


class SimplexEngine:
    """Simplex state that can be re-optimised after the objective changes.

    The feasible region is fixed at construction; :meth:`solve` may be called
    repeatedly with different objectives and starts from the previous basis,
    which stays primal feasible.
    """

    def __init__(self, problem: LpProblem, config: SolverConfig | None = None):
        self.config = config or SolverConfig()
        A_full, b = problem.constraint_matrix, problem.rhs
        m, d_full = A_full.shape
        mirror = _mirror_pairs(A_full, problem.lower, problem.upper)
        dropped = np.zeros(d_full, dtype=bool)
        dropped[mirror[mirror >= 0]] = True
        self._keep = np.flatnonzero(~dropped)
        self._mirror = mirror[self._keep]
        self._d_full = d_full
        merged = self._mirror >= 0

        A = np.ascontiguousarray(A_full[:, self._keep])
        lower = np.where(merged, -np.inf, problem.lower[self._keep])
        upper = np.where(merged, np.inf, problem.upper[self._keep])
        d = A.shape[1]
        self.m, self.d = m, d
        self._A = A
        self._b = b
        self.art = d + m  # variable id of the artificial column
        self.lo = np.concatenate([lower, np.zeros(m), [0.0]])
        self.up = np.concatenate([upper, np.full(m, np.inf), [np.inf]])
        self.seg = np.zeros(d + m + 1, dtype=np.int8)
        self.seg[:d][merged] = 1
        self.kink = np.zeros(d + m + 1)

        x0 = np.where(np.isfinite(lower), lower, np.where(np.isfinite(upper), upper, 0.0))
        state = np.where(
            lower == upper,
            FIXED,
            np.where(
                np.isfinite(lower),
                AT_LOWER,
                np.where(np.isfinite(upper), AT_UPPER, np.where(merged, AT_KINK, FREE_ZERO)),
            ),
        )
        resid = b - A @ x0
        infeasible = resid < 0
        self._art_col = np.where(infeasible, -1.0, 0.0)

        self.T = np.empty((m, d + 1))
        self.T[:, :d] = A
        self.T[:, d] = self._art_col
        self.basis = np.arange(d, d + m, dtype=np.int64)
        self.nonbasic = np.concatenate([np.arange(d), [self.art]]).astype(np.int64)
        self.state = np.concatenate([state, [AT_LOWER]]).astype(np.int8)
        self.xB = resid.copy()
        self.xN = np.concatenate([x0, [0.0]])
        self.d_red = np.zeros(d + 1)
        self.w = np.empty(d + 1)
        self._edge_weights()
        self.iterations = 0
        self.cost = None
        self._feasible = None  # unknown until phase one runs

    # -- helpers -------------------------------------------------------
    def _max_iter(self) -> int:
        cap = self.config.max_iter
        return 50 * (self.m + self._d_full) if cap is None else cap

    def _edge_weights(self) -> None:
        self.w[:] = 1.0 + np.einsum("ij,ij->j", self.T, self.T)

    def _price(self, cost: np.ndarray) -> None:
        basic_cost = cost[self.basis] - np.where(self.seg[self.basis] < 0, self.kink[self.basis], 0.0)
        self.d_red = cost[self.nonbasic] - self.T.T @ basic_cost

    def _loop(self, budget: int) -> LpStatus:
        cfg = self.config
        code, iters = kernels.simplex_loop(
            self.T, self.d_red, self.w, self.xB, self.xN, self.basis, self.nonbasic, self.state,
            self.lo, self.up, self.seg, self.kink, int(budget), cfg.opt_tol, cfg.pivot_tol,
            cfg.feas_tol, int(cfg.degen_limit), _PRICING[cfg.pricing],
        )
        self.iterations += int(iters)
        return _LOOP_STATUS[int(code)]

    def _full_matrix_columns(self, ids: np.ndarray) -> np.ndarray:
        m, d = self.m, self.d
        cols = np.zeros((m, ids.shape[0]))
        for k, v in enumerate(ids):
            if v < d:
                cols[:, k] = self._A[:, v]
            elif v < d + m:
                cols[v - d, k] = 1.0
            else:
                cols[:, k] = self._art_col
        return cols

    def reinvert(self) -> None:
        """Recompute the tableau and basic values from the original data."""
        B = self._full_matrix_columns(self.basis)
        N = self._full_matrix_columns(self.nonbasic)
        self.T = np.ascontiguousarray(np.linalg.solve(B, N))
        self._edge_weights()
        self.xB = np.linalg.solve(B, self._b - N @ self.xN)
        if self.cost is not None:
            self._price(self.cost)

    def _values(self) -> np.ndarray:
        x = np.empty(self.d + self.m + 1)
        x[self.nonbasic] = self.xN
        x[self.basis] = self.xB
        return x

    def _violation(self, x: np.ndarray) -> float:
        xs = x[: self.d]
        row = float(np.max(self._A @ xs - self._b))
        lo = float(np.max(self.lo[: self.d] - xs))
        up = float(np.max(xs - self.up[: self.d]))
        return max(row, lo, up, 0.0)

    def _expand(self, xs: np.ndarray) -> np.ndarray:
        """Map internal structural values back to the caller's variables."""
        x = np.zeros(self._d_full)
        merged = self._mirror >= 0
        x[self._keep] = np.where(merged, np.maximum(xs, 0.0), xs)
        x[self._mirror[merged]] = np.maximum(-xs[merged], 0.0)
        return x

    # -- phases --------------------------------------------------------
    def _phase_one(self) -> LpStatus:
        if self._feasible is not None:
            return LpStatus.OPTIMAL if self._feasible else LpStatus.INFEASIBLE
        if not np.any(self.xB < 0) or self._crash():
            self._fix_artificial()
            self._feasible = True
            return LpStatus.OPTIMAL
        r = int(np.argmin(self.xB))
        q = self.d  # artificial column position
        theta = -self.xB[r]
        self.xB -= theta * self.T[:, q]
        leaving = self.basis[r]
        self.basis[r] = self.art
        self.nonbasic[q] = leaving
        self.xN[q] = 0.0
        self.state[q] = AT_LOWER
        self.xB[r] = theta
        cost = np.zeros(self.d + self.m + 1)
        cost[self.art] = 1.0
        self.kink[:] = 0.0
        kernels.pivot(self.T, self.d_red, self.w, r, q)
        self.iterations += 1
        self._price(cost)
        status = self._loop(self._max_iter() - self.iterations)
        if status is LpStatus.UNBOUNDED:  # pragma: no cover - phase one is bounded below
            raise RuntimeError("phase one reported unbounded")
        if status is LpStatus.ITERATION_LIMIT:
            return status
        art_value = self._values()[self.art]
        scale = max(1.0, float(np.max(np.abs(self._b))))
        if art_value > self.config.feas_tol * scale:
            self._feasible = False
            return LpStatus.INFEASIBLE
        self._fix_artificial()
        self._feasible = True
        return LpStatus.OPTIMAL

    def _crash(self) -> bool:
        """Try to restore feasibility with one pivot on a structural column.

        Looks for a column whose move (in a direction its bound allows)
        raises every negative slack to zero without pushing any other slack
        or the column itself past a bound. Returns True if such a pivot was made.
        """
        d = self.d
        resid = self.xB
        bad = resid < 0
        need_floor = -resid[bad]
        movable = (FREE_ZERO, AT_KINK)
        for sign in (1.0, -1.0):
            allowed = np.isin(self.state[:d], ((AT_LOWER,) if sign > 0 else (AT_UPPER,)) + movable)
            if not allowed.any():
                continue
            gain = -sign * self.T[:, :d]  # slack change per unit move
            with np.errstate(divide="ignore", invalid="ignore"):
                g_bad = gain[bad]
                ok = allowed & np.all(g_bad > self.config.pivot_tol, axis=0)
                if not ok.any():
                    continue
                theta_need = np.max(need_floor[:, None] / np.where(g_bad > 0, g_bad, 1.0), axis=0)
                g_good = gain[~bad]
                limits = np.where(g_good < 0, resid[~bad][:, None] / -np.where(g_good < 0, g_good, -1.0), np.inf)
                theta_allow = limits.min(axis=0) if limits.shape[0] else np.full(d, np.inf)
            span = self.up[:d] - self.lo[:d]
            ok &= (theta_need <= theta_allow) & (theta_need <= span)
            cand = np.flatnonzero(ok)
            if cand.size == 0:
                continue
            q = int(cand[0])
            theta = float(theta_need[q])
            rows = np.flatnonzero(bad)
            r = int(rows[np.argmax(need_floor / g_bad[:, q])])
            self.xB = resid + theta * gain[:, q]
            leaving = self.basis[r]
            entering = self.nonbasic[q]
            self.basis[r] = entering
            self.nonbasic[q] = leaving
            self.xB[r] = self.xN[q] + sign * theta
            if self.seg[entering] != 0:
                self.seg[entering] = 1 if sign > 0 else -1
            self.xN[q] = 0.0
            self.state[q] = AT_LOWER
            kernels.pivot(self.T, self.d_red, self.w, r, q)
            self.iterations += 1
            return True
        return False

    def _fix_artificial(self) -> None:
        self.lo[self.art] = 0.0
        self.up[self.art] = 0.0
        pos = np.flatnonzero(self.nonbasic == self.art)
        if pos.size:
            self.state[pos[0]] = FIXED
            self.xN[pos[0]] = 0.0
        else:
            r = int(np.flatnonzero(self.basis == self.art)[0])
            self.xB[r] = 0.0

    def solve(self, objective: np.ndarray) -> LpSolution:
        """Optimise ``objective`` over the engine's feasible region."""
        c = np.asarray(objective, dtype=np.float64).reshape(-1)
        if c.shape[0] != self._d_full or not np.all(np.isfinite(c)):
            raise ValueError("objective must be a finite vector with one entry per variable")
        start = self.iterations
        status = self._phase_one()
        if status is not LpStatus.OPTIMAL:
            return self._result(status, c, start)
        merged = self._mirror >= 0
        kink = np.zeros(self.d)
        kink[merged] = c[self._keep[merged]] + c[self._mirror[merged]]
        if np.any(kink < -self.config.opt_tol):
            # Raising both halves of a split pair lowers the cost without bound.
            return self._result(LpStatus.UNBOUNDED, c, start)
        self.kink[: self.d] = np.maximum(kink, 0.0)
        cost = np.zeros(self.d + self.m + 1)
        cost[: self.d] = c[self._keep]
        self.cost = cost
        self._price(cost)
        for _ in range(3):
            budget = self._max_iter() - (self.iterations - start)
            status = self._loop(max(budget, 0))
            if status is not LpStatus.OPTIMAL:
                break
            if self._violation(self._values()) <= self.config.feas_tol:
                break
            # Accumulated round-off: rebuild from the original data and re-optimise.
            self.reinvert()
        return self._result(status, c, start)

    def _result(self, status: LpStatus, c: np.ndarray, start: int) -> LpSolution:
        x = self._expand(self._values()[: self.d])
        duals = np.zeros(self.m)
        if status is LpStatus.OPTIMAL:
            slack_pos = np.flatnonzero((self.nonbasic >= self.d) & (self.nonbasic < self.d + self.m))
            duals[self.nonbasic[slack_pos] - self.d] = np.maximum(self.d_red[slack_pos], 0.0)
        obj = float(c @ x) if status is LpStatus.OPTIMAL else float("nan")
        return LpSolution(status, x, obj, self.iterations - start, duals)


def solve_lp(problem: LpProblem, config: SolverConfig | None = None) -> LpSolution:
    """Solve an :class:`LpProblem`.

    Infeasible and unbounded problems are reported through ``status``;
    malformed or non-finite data raises ``ValueError``.
    """
    engine = SimplexEngine(problem, config)
    return engine.solve(problem.objective)


class SolverFailure(RuntimeError):
    """An LP or QP that did not reach an optimal point."""

    def __init__(self, status: LpStatus, message: str = ""):
        self.status = status
        super().__init__(message or f"solver stopped with status {status.value}")


class InfeasibleError(SolverFailure):
    def __init__(self, message: str = "problem is infeasible"):
        super().__init__(LpStatus.INFEASIBLE, message)


def linf_problem(X: np.ndarray, y: np.ndarray) -> LpProblem:
    """LP over x = (beta, a):  min a  s.t.  -a <= y - X beta <= a,  beta free, a >= 0."""
    n, p = X.shape
    ones = np.ones((n, 1))
    A = np.block([[-X, -ones], [X, -ones]])
    c = np.zeros(p + 1)
    c[p] = 1.0
    lower = np.concatenate([np.full(p, -np.inf), [0.0]])
    return LpProblem(c, A, np.concatenate([-y, y]), lower, None)


def linf_lasso_problem(X: np.ndarray, y: np.ndarray, lam: float) -> LpProblem:
    """LP over x = (beta+, beta-, a):  min a + lam 1^T(beta+ + beta-)  on the same slab."""
    n, p = X.shape
    ones = np.ones((n, 1))
    A = np.block([[-X, X, -ones], [X, -X, -ones]])
    c = np.concatenate([np.full(2 * p, float(lam)), [1.0]])
    return LpProblem(c, A, np.concatenate([-y, y]))
