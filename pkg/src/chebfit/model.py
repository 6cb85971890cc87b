"""Regression instances, fit results and the per-observation critical inequalities."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import as_matrix, as_vector

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class Truth:
    """Generating parameters of a simulated dataset: y = X beta_star + eps, |eps| <= a."""

    beta_star: np.ndarray
    a: float
    eps: np.ndarray


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    truth: Truth | None = None

    def __post_init__(self):
        X = as_matrix(self.X)
        y = as_vector(self.y, X.shape[0])
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        t = self.truth
        if t is not None:
            n, p = X.shape
            beta = as_vector(t.beta_star, p, "beta_star")
            eps = as_vector(t.eps, n, "eps")
            a = float(t.a)
            if not a > 0 or not np.isfinite(a):
                raise ValueError("noise radius a must be finite and positive")
            if np.any(np.abs(eps) > a):
                raise ValueError("noise draws exceed the radius a")
            scale = max(1.0, float(np.max(np.abs(y))))
            if np.max(np.abs(y - X @ beta - eps)) > 1e-12 * scale:
                raise ValueError("y differs from X beta_star + eps")
            object.__setattr__(self, "truth", Truth(beta, a, eps))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass
class FitResult:
    beta_hat: np.ndarray
    a_hat: float
    residuals: np.ndarray
    estimator_tag: str
    iterations: int
    status: str
    extra: dict = field(default_factory=dict)
    """Estimator-specific diagnostics (penalty level, KKT residual, ...)."""


@dataclass(frozen=True)
class CriticalInequalityReport:
    slack: np.ndarray
    """(a - |eps_i|) - eta_i X_i^T (beta_hat - beta_star) for each observation."""
    eta: np.ndarray
    order: np.ndarray
    """Observation indices sorted by decreasing |eps_i|; the first K are the critical ones."""

    @property
    def min_slack(self) -> float:
        return float(np.min(self.slack))

    def critical(self, K: int) -> np.ndarray:
        return self.order[:K]


def residuals(ds: Dataset, beta) -> np.ndarray:
    """Return y - X beta."""
    beta = as_vector(beta, ds.p, "beta")
    return ds.y - ds.X @ beta


def check_feasible(ds: Dataset, beta, a: float) -> bool:
    """True when every residual lies within [-a, a] (up to ``FEAS_TOL``)."""
    if a < 0:
        raise ValueError("a must be nonnegative")
    return bool(np.max(np.abs(residuals(ds, beta))) <= a + FEAS_TOL)


def symmetrizing_signs(eps: np.ndarray) -> np.ndarray:
    """eta = -sign(eps) with eta = +1 where eps == 0."""
    return np.where(eps > 0, -1.0, 1.0)


def critical_report(ds: Dataset, beta_hat) -> CriticalInequalityReport:
    if ds.truth is None:
        raise ValueError("critical inequalities need a dataset with known truth")
    t = ds.truth
    beta_hat = as_vector(beta_hat, ds.p, "beta_hat")
    eta = symmetrizing_signs(t.eps)
    slack = (t.a - np.abs(t.eps)) - eta * (ds.X @ (beta_hat - t.beta_star))
    order = np.argsort(-np.abs(t.eps), kind="stable")
    return CriticalInequalityReport(slack, eta, order)


# -- CSV ---------------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_dataset(ds: Dataset, path) -> None:
    """Write ``y,x1..xp`` to ``path``; truth goes to ``<stem>.truth.csv`` alongside."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y"] + [f"x{j + 1}" for j in range(ds.p)])
        for yi, row in zip(ds.y, ds.X):
            w.writerow([_fmt(yi)] + [_fmt(v) for v in row])
    if ds.truth is not None:
        t = ds.truth
        with open(truth_path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["field", "index", "value"])
            w.writerow(["a", 0, _fmt(t.a)])
            for j, v in enumerate(t.beta_star):
                w.writerow(["beta_star", j, _fmt(v)])
            for i, v in enumerate(t.eps):
                w.writerow(["eps", i, _fmt(v)])


def truth_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".truth.csv")


def read_dataset(path) -> Dataset:
    """Inverse of :func:`write_dataset`; the truth sidecar is loaded when present."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip() != "y":
        raise ValueError(f"{path}: expected a header starting with 'y'")
    header = [h.strip() for h in rows[0]]
    expected = ["y"] + [f"x{j + 1}" for j in range(len(header) - 1)]
    if header != expected or len(header) < 2:
        raise ValueError(f"{path}: header must be y,x1,...,xp")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged or empty data")
    truth = None
    side = truth_path(path)
    if side.exists():
        with open(side, newline="") as fh:
            recs = list(csv.DictReader(fh))
        p = data.shape[1] - 1
        beta = np.zeros(p)
        eps = np.zeros(data.shape[0])
        a = None
        for r in recs:
            name, idx, val = r["field"], int(r["index"]), float(r["value"])
            if name == "a":
                a = val
            elif name == "beta_star":
                beta[idx] = val
            elif name == "eps":
                eps[idx] = val
        if a is None:
            raise ValueError(f"{side}: missing noise radius 'a'")
        truth = Truth(beta, a, eps)
    return Dataset(data[:, 1:], data[:, 0], truth)
