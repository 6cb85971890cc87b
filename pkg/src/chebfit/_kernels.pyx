# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simplex and coordinate-descent kernels.

Same contracts as :mod:`chebfit._kernels_py`; see that module for the
argument conventions.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isfinite, INFINITY

cnp.import_array()

cdef enum:
    AT_LOWER = 0
    AT_UPPER = 1
    FREE_ZERO = 2
    FIXED = 3
    AT_KINK = 4

cdef enum:
    _STEEPEST_EDGE = 0
    _DANTZIG = 1
    _BLAND = 2

cdef enum:
    _OPTIMAL = 0
    _UNBOUNDED = 1
    _ITERATION_LIMIT = 2

OPTIMAL = _OPTIMAL
UNBOUNDED = _UNBOUNDED
ITERATION_LIMIT = _ITERATION_LIMIT


cdef void _pivot(double[:, ::1] T, double[::1] d, double[::1] w,
                 Py_ssize_t r, Py_ssize_t q) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t ncol = T.shape[1]
    cdef Py_ssize_t i, j
    cdef double piv = T[r, q]
    cdef double inv = 1.0 / piv
    cdef double f
    cdef double* rowr = &T[r, 0]
    cdef double* rowi
    for j in range(ncol):
        rowr[j] *= inv
        w[j] = 1.0
    for i in range(m):
        rowi = &T[i, 0]
        if i != r:
            f = rowi[q]
            if f != 0.0:
                for j in range(ncol):
                    rowi[j] -= f * rowr[j]
                rowi[q] = -f * inv
        else:
            rowi[q] = inv
        for j in range(ncol):
            w[j] += rowi[j] * rowi[j]
    f = d[q]
    if f != 0.0:
        for j in range(ncol):
            d[j] -= f * rowr[j]
        d[q] = -f * inv


cdef inline void _segment_bounds(int sg, double lo, double up,
                                 double* lb, double* ub) noexcept nogil:
    if sg > 0:
        lb[0] = 0.0
        ub[0] = INFINITY
    elif sg < 0:
        lb[0] = -INFINITY
        ub[0] = 0.0
    else:
        lb[0] = lo
        ub[0] = up


def pivot(double[:, ::1] T, double[::1] d, double[::1] w, Py_ssize_t r, Py_ssize_t q):
    _pivot(T, d, w, r, q)


def simplex_loop(double[:, ::1] T, double[::1] d, double[::1] w, double[::1] xB, double[::1] xN,
                 cnp.int64_t[::1] basis, cnp.int64_t[::1] nonbasic, cnp.int8_t[::1] state,
                 double[::1] lo, double[::1] up, cnp.int8_t[::1] seg, double[::1] kink,
                 long max_iter, double opt_tol, double pivot_tol, double feas_tol,
                 long degen_limit, int pricing):
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t ncol = T.shape[1]
    cdef Py_ssize_t i, j, q, r
    cdef long iters = 0
    cdef long degenerate_run = 0
    cdef int bland, dirq, dj_dir, s
    cdef double dj, score, best_score, alpha, ratio, relaxed, t_min, best_abs
    cdef double span, theta, entering_value, lb, ub, dk
    cdef cnp.int64_t var, best_var, leaving, var_q
    cdef int leaving_seg
    cdef int status = _ITERATION_LIMIT
    cdef double[::1] lo_b = np.empty(m)
    cdef double[::1] up_b = np.empty(m)
    for i in range(m):
        var = basis[i]
        _segment_bounds(seg[var], lo[var], up[var], &lo_b[i], &up_b[i])

    with nogil:
        while iters < max_iter:
            bland = pricing == _BLAND or degenerate_run >= degen_limit
            # pricing
            q = -1
            best_score = 0.0
            best_var = 0
            dirq = 0
            for j in range(ncol):
                s = state[j]
                dj = d[j]
                if s == AT_LOWER:
                    if dj >= -opt_tol:
                        continue
                    dj_dir = 1
                elif s == AT_UPPER:
                    if dj <= opt_tol:
                        continue
                    dj_dir = -1
                elif s == FREE_ZERO:
                    if fabs(dj) <= opt_tol:
                        continue
                    dj_dir = -1 if dj > 0 else 1
                elif s == AT_KINK:
                    # dj prices the upward slope; the downward one is dj - kink.
                    dk = dj - kink[nonbasic[j]]
                    if dj < -opt_tol and (dk <= opt_tol or -dj >= dk):
                        dj_dir = 1
                    elif dk > opt_tol:
                        dj_dir = -1
                        dj = dk
                    else:
                        continue
                else:
                    continue
                var = nonbasic[j]
                if bland:
                    if q < 0 or var < best_var:
                        q = j
                        best_var = var
                        dirq = dj_dir
                else:
                    if pricing == _STEEPEST_EDGE:
                        score = dj * dj / w[j]
                    else:
                        score = fabs(dj)
                    if q < 0 or score > best_score or (score == best_score and var < best_var):
                        q = j
                        best_score = score
                        best_var = var
                        dirq = dj_dir
            if q < 0:
                status = _OPTIMAL
                break

            # ratio test
            r = -1
            t_min = INFINITY
            if bland:
                for i in range(m):
                    alpha = dirq * T[i, q]
                    if alpha > pivot_tol and isfinite(lo_b[i]):
                        ratio = (xB[i] - lo_b[i]) / alpha
                    elif alpha < -pivot_tol and isfinite(up_b[i]):
                        ratio = (up_b[i] - xB[i]) / (-alpha)
                    else:
                        continue
                    if ratio < 0.0:
                        ratio = 0.0
                    if r < 0 or ratio < t_min or (ratio == t_min and basis[i] < basis[r]):
                        t_min = ratio
                        r = i
            else:
                relaxed = INFINITY
                for i in range(m):
                    alpha = dirq * T[i, q]
                    if alpha > pivot_tol and isfinite(lo_b[i]):
                        ratio = (xB[i] - lo_b[i] + feas_tol) / alpha
                    elif alpha < -pivot_tol and isfinite(up_b[i]):
                        ratio = (up_b[i] - xB[i] + feas_tol) / (-alpha)
                    else:
                        continue
                    if ratio < relaxed:
                        relaxed = ratio
                if isfinite(relaxed):
                    best_abs = -1.0
                    for i in range(m):
                        alpha = dirq * T[i, q]
                        if alpha > pivot_tol and isfinite(lo_b[i]):
                            ratio = (xB[i] - lo_b[i] + feas_tol) / alpha
                        elif alpha < -pivot_tol and isfinite(up_b[i]):
                            ratio = (up_b[i] - xB[i] + feas_tol) / (-alpha)
                        else:
                            continue
                        if ratio <= relaxed and fabs(alpha) > best_abs:
                            best_abs = fabs(alpha)
                            r = i
                    alpha = dirq * T[r, q]
                    if alpha > 0:
                        t_min = (xB[r] - lo_b[r]) / alpha
                    else:
                        t_min = (up_b[r] - xB[r]) / (-alpha)
                    if t_min < 0.0:
                        t_min = 0.0

            var_q = nonbasic[q]
            span = up[var_q] - lo[var_q]
            if isfinite(span) and span <= t_min:
                for i in range(m):
                    xB[i] -= (dirq * span) * T[i, q]
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
                status = _UNBOUNDED
                break

            theta = t_min
            alpha = dirq * T[r, q]
            if theta * fabs(alpha) <= feas_tol:
                degenerate_run += 1
            else:
                degenerate_run = 0
            for i in range(m):
                xB[i] -= (dirq * theta) * T[i, q]
            entering_value = xN[q] + dirq * theta
            leaving = basis[r]
            leaving_seg = seg[leaving]
            lb = lo_b[r]
            ub = up_b[r]
            if leaving_seg != 0:
                xN[q] = 0.0
                state[q] = AT_KINK
                seg[leaving] = 1
            elif alpha > 0:
                xN[q] = lb
                state[q] = FIXED if lb == ub else AT_LOWER
            else:
                xN[q] = ub
                state[q] = FIXED if lb == ub else AT_UPPER
            basis[r] = var_q
            nonbasic[q] = leaving
            xB[r] = entering_value
            if seg[var_q] != 0:
                seg[var_q] = dirq
            _segment_bounds(seg[var_q], lo[var_q], up[var_q], &lo_b[r], &up_b[r])
            _pivot(T, d, w, r, q)
            if leaving_seg < 0:
                # back to the reference (upward) slope
                d[q] += kink[leaving]
            if seg[var_q] < 0:
                # the new basic variable is priced on its downward slope
                dk = kink[var_q]
                for j in range(ncol):
                    d[j] += dk * T[r, j]
            iters += 1
    return status, iters


def cd_sweeps(double[::1, :] Xf, double[::1] resid, double[::1] beta, double[::1] scale,
              double lam, double inv_n, cnp.int64_t[::1] idx, long max_sweeps, double tol,
              bint weighted=False):
    cdef Py_ssize_t n = Xf.shape[0]
    cdef Py_ssize_t k, i, j
    cdef long sweeps = 0
    cdef double max_change = INFINITY
    cdef double sj, old, rho, new, delta, acc, change
    cdef double* col
    with nogil:
        while sweeps < max_sweeps:
            max_change = 0.0
            for k in range(idx.shape[0]):
                j = idx[k]
                sj = scale[j]
                if sj == 0.0:
                    continue
                col = &Xf[0, j]
                acc = 0.0
                for i in range(n):
                    acc += col[i] * resid[i]
                old = beta[j]
                rho = inv_n * acc + sj * old
                if rho > lam:
                    new = (rho - lam) / sj
                elif rho < -lam:
                    new = (rho + lam) / sj
                else:
                    new = 0.0
                delta = new - old
                if delta != 0.0:
                    for i in range(n):
                        resid[i] -= delta * col[i]
                    beta[j] = new
                    change = sj * delta * delta if weighted else fabs(delta)
                    if change > max_change:
                        max_change = change
            sweeps += 1
            if max_change < tol:
                break
    return sweeps, max_change
