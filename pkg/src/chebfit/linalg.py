"""Dense least-squares helpers shared by the estimators."""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

RANK_TOL = 1e-12


class RankDeficientError(np.linalg.LinAlgError):
    """Raised when a design matrix is numerically rank deficient.

    ``column`` is the index of the first column that is (numerically) a linear
    combination of the columns before it.
    """

    def __init__(self, column: int, diag: float, threshold: float):
        self.column = column
        super().__init__(
            f"design is rank deficient at column {column} "
            f"(|R[{column},{column}]| = {diag:.3g} <= {threshold:.3g})"
        )


def as_matrix(X, name: str = "X") -> np.ndarray:
    """Validate and return ``X`` as a finite 2-D float64 array."""
    A = np.asarray(X, dtype=np.float64)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def as_vector(v, length: int | None = None, name: str = "y") -> np.ndarray:
    a = np.asarray(v, dtype=np.float64).reshape(-1)
    if length is not None and a.shape[0] != length:
        raise ValueError(f"{name} has length {a.shape[0]}, expected {length}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def check_full_rank(X: np.ndarray, rank_tol: float = RANK_TOL) -> None:
    """Raise :class:`RankDeficientError` unless ``X`` has full column rank."""
    X = as_matrix(X)
    n, p = X.shape
    if n < p:
        raise RankDeficientError(n, 0.0, 0.0)
    R = np.linalg.qr(X, mode="r")
    _check_r(R, X, rank_tol)


def _check_r(R: np.ndarray, X: np.ndarray, rank_tol: float) -> None:
    threshold = rank_tol * max(float(np.max(np.abs(X))), np.finfo(float).tiny)
    diag = np.abs(np.diag(R))
    bad = np.flatnonzero(diag <= threshold)
    if bad.size:
        j = int(bad[0])
        raise RankDeficientError(j, float(diag[j]), threshold)


def solve_least_squares(X, y, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Return argmin ||y - X beta||_2 computed from a Householder QR of ``X``.

    Raises :class:`RankDeficientError` when a diagonal entry of R falls below
    ``rank_tol * max|X|``; no regularisation is applied.
    """
    X = as_matrix(X)
    n, p = X.shape
    y = as_vector(y, n)
    if n < p:
        raise RankDeficientError(n, 0.0, 0.0)
    Q, R = np.linalg.qr(X, mode="reduced")
    _check_r(R, X, rank_tol)
    return solve_triangular(R, Q.T @ y, lower=False)


def weighted_least_squares(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Minimise sum_i w_i (y_i - X_i beta)^2 for nonnegative weights."""
    sw = np.sqrt(w)
    return solve_least_squares(X * sw[:, None], y * sw)
