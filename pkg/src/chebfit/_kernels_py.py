"""Pure-Python (NumPy) versions of the hot kernels.

These mirror ``_kernels.pyx`` call for call and are selected when the
compiled extension is unavailable or ``CHEBFIT_PURE_PYTHON`` is set.
"""

import numpy as np

# Nonbasic variable states.
AT_LOWER = 0
AT_UPPER = 1
FREE_ZERO = 2
FIXED = 3
AT_KINK = 4  # free variable with a cost kink at zero, sitting at the kink

# Pricing rules.
STEEPEST_EDGE = 0
DANTZIG = 1
BLAND = 2

# Loop exit codes.
OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2


def pivot(T, d, w, r, q):
    """Exchange basic row ``r`` with nonbasic column ``q`` of a condensed tableau.

    ``T`` holds B^-1 A_N for the nonbasic columns only; after the exchange
    column ``q`` describes the variable that just left the basis.
    ``d`` (the reduced costs) is updated as an extra tableau row and ``w``
    is refreshed to the steepest-edge weights 1 + ||T[:, j]||^2.
    """
    piv = T[r, q]
    row = T[r, :] / piv
    col = T[:, q].copy()
    dq = d[q]
    T -= np.outer(col, row)
    T[r, :] = row
    T[:, q] = -col / piv
    T[r, q] = 1.0 / piv
    d -= dq * row
    d[q] = -dq / piv
    w[:] = 1.0 + np.einsum("ij,ij->j", T, T)


def _eligible_scores(d, state, kink_n, opt_tol):
    """Vectorised pricing: eligibility mask, move direction and the reduced
    cost along that direction for every nonbasic column."""
    lower = (state == AT_LOWER) & (d < -opt_tol)
    upper = (state == AT_UPPER) & (d > opt_tol)
    free = (state == FREE_ZERO) & (np.abs(d) > opt_tol)
    direction = np.where(d > 0, -1, 1)
    slope = d.copy()
    at_kink = state == AT_KINK
    if at_kink.any():
        dk = d - kink_n
        up_ok = d < -opt_tol
        down_ok = dk > opt_tol
        go_up = up_ok & (~down_ok | (-d >= dk))
        go_down = down_ok & ~go_up
        direction = np.where(at_kink, np.where(go_down, -1, 1), direction)
        slope = np.where(at_kink & go_down, dk, slope)
        free |= at_kink & (go_up | go_down)
    return lower | upper | free, direction, slope


def _segment_bounds(sg, lo, up):
    """Bounds of a basic variable; kinked variables are held to one side of zero."""
    lb = np.where(sg > 0, 0.0, np.where(sg < 0, -np.inf, lo))
    ub = np.where(sg > 0, np.inf, np.where(sg < 0, 0.0, up))
    return lb, ub


def simplex_loop(T, d, w, xB, xN, basis, nonbasic, state, lo, up, seg, kink,
                 max_iter, opt_tol, pivot_tol, feas_tol, degen_limit, pricing):
    """Bounded-variable primal simplex iterations on a condensed tableau.

    ``pricing`` selects steepest edge (largest d_j^2 / w_j), Dantzig (largest
    |d_j|) or Bland (lowest eligible variable index); ties always go to the
    lowest variable index. After ``degen_limit`` consecutive degenerate steps
    Bland's rule is used until progress resumes. Returns ``(status, iterations)``.

    Variables with ``seg[v] != 0`` are free with cost slope ``c_v`` above zero
    and ``c_v - kink[v]`` below it. ``d`` always prices the upward slope for
    nonbasic ones; ``seg`` records which side of zero a basic one is on.
    """
    m = T.shape[0]
    iters = 0
    degenerate_run = 0
    lo_b, up_b = _segment_bounds(seg[basis], lo[basis], up[basis])
    while iters < max_iter:
        bland = pricing == BLAND or degenerate_run >= degen_limit
        ok, direction, slope = _eligible_scores(d, state, kink[nonbasic], opt_tol)
        if not ok.any():
            return OPTIMAL, iters
        cand = np.flatnonzero(ok)
        if bland:
            q = cand[np.argmin(nonbasic[cand])]
        else:
            score = slope[cand] ** 2 / w[cand] if pricing == STEEPEST_EDGE else np.abs(slope[cand])
            top = score.max()
            tied = cand[score == top]
            q = tied[np.argmin(nonbasic[tied])]
        dirq = direction[q]

        alpha = dirq * T[:, q]
        dec = (alpha > pivot_tol) & np.isfinite(lo_b)
        inc = (alpha < -pivot_tol) & np.isfinite(up_b)
        ratios = np.full(m, np.inf)
        if bland:
            ratios[dec] = (xB[dec] - lo_b[dec]) / alpha[dec]
            ratios[inc] = (up_b[inc] - xB[inc]) / (-alpha[inc])
            np.maximum(ratios, 0.0, out=ratios)
            t_min = ratios.min() if m else np.inf
            r = -1
            if np.isfinite(t_min):
                tied = np.flatnonzero(ratios == t_min)
                r = tied[np.argmin(basis[tied])]
        else:
            # Harris two-pass ratio test.
            ratios[dec] = (xB[dec] - lo_b[dec] + feas_tol) / alpha[dec]
            ratios[inc] = (up_b[inc] - xB[inc] + feas_tol) / (-alpha[inc])
            relaxed = ratios.min() if m else np.inf
            r = -1
            t_min = np.inf
            if np.isfinite(relaxed):
                cand_rows = np.flatnonzero(ratios <= relaxed)
                r = cand_rows[np.argmax(np.abs(alpha[cand_rows]))]
                if alpha[r] > 0:
                    t_min = (xB[r] - lo_b[r]) / alpha[r]
                else:
                    t_min = (up_b[r] - xB[r]) / (-alpha[r])
                if t_min < 0.0:
                    t_min = 0.0

        var_q = nonbasic[q]
        span = up[var_q] - lo[var_q]
        if span < np.inf and span <= t_min:
            # Bound flip: entering variable crosses to its opposite bound.
            xB -= (dirq * span) * T[:, q]
            if state[q] == AT_LOWER:
                xN[q] = up[var_q]
                state[q] = AT_UPPER
            else:
                xN[q] = lo[var_q]
                state[q] = AT_LOWER
            iters += 1
            degenerate_run = 0
            continue
        if r < 0:
            return UNBOUNDED, iters

        theta = t_min
        if theta * abs(alpha[r]) <= feas_tol:
            degenerate_run += 1
        else:
            degenerate_run = 0
        xB -= (dirq * theta) * T[:, q]
        entering_value = xN[q] + dirq * theta
        leaving = basis[r]
        leaving_seg = seg[leaving]
        if leaving_seg != 0:
            xN[q] = 0.0
            state[q] = AT_KINK
            seg[leaving] = 1
        elif alpha[r] > 0:
            xN[q] = lo_b[r]
            state[q] = FIXED if lo_b[r] == up_b[r] else AT_LOWER
        else:
            xN[q] = up_b[r]
            state[q] = FIXED if lo_b[r] == up_b[r] else AT_UPPER
        basis[r] = var_q
        nonbasic[q] = leaving
        xB[r] = entering_value
        if seg[var_q] != 0:
            seg[var_q] = dirq
        lo_b[r], up_b[r] = _segment_bounds(seg[var_q], lo[var_q], up[var_q])
        pivot(T, d, w, r, q)
        if leaving_seg < 0:
            d[q] += kink[leaving]
        if seg[var_q] < 0:
            d += kink[var_q] * T[r, :]
        iters += 1
    return ITERATION_LIMIT, iters


def cd_sweeps(Xf, resid, beta, scale, lam, inv_n, idx, max_sweeps, tol, weighted=False):
    """Cyclic coordinate descent sweeps over the coordinates in ``idx``.

    ``scale[j]`` is ||X_j||^2 / n. ``resid`` is y - X beta and is kept in
    sync. Stops when the largest coefficient move in a sweep is below ``tol``;
    with ``weighted`` the move is measured as scale[j] * delta^2 (the
    loss decrease scale). Returns ``(sweeps, max_change)``.
    """
    sweeps = 0
    max_change = np.inf
    while sweeps < max_sweeps:
        max_change = 0.0
        for j in idx:
            sj = scale[j]
            if sj == 0.0:
                continue
            col = Xf[:, j]
            old = beta[j]
            rho = inv_n * float(col @ resid) + sj * old
            if rho > lam:
                new = (rho - lam) / sj
            elif rho < -lam:
                new = (rho + lam) / sj
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                resid -= delta * col
                beta[j] = new
                change = sj * delta * delta if weighted else abs(delta)
                if change > max_change:
                    max_change = change
        sweeps += 1
        if max_change < tol:
            break
    return sweeps, max_change
