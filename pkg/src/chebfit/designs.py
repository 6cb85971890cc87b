"""Random designs, bounded noise laws, coefficient patterns and seeded dataset assembly.

Every draw comes from a PCG64 stream derived as
``SeedSequence(seed, spawn_key=key + (purpose,))``, so a replication's data
depends only on the run seed and its own key (for example ``(cell, rep)``),
never on the order in which replications execute.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .model import Dataset, Truth

# stream purposes
DESIGN_STREAM = 0
NOISE_STREAM = 1
AUX_STREAM = 2


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key)``."""
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))))


def _as_rng(seed, key=()) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(int(seed), *key)


def _unit_rows(rng: np.random.Generator, n: int, p: int) -> np.ndarray:
    Z = rng.standard_normal((n, p))
    norms = np.linalg.norm(Z, axis=1)
    while np.any(norms == 0):  # pragma: no cover - probability zero
        bad = norms == 0
        Z[bad] = rng.standard_normal((int(bad.sum()), p))
        norms = np.linalg.norm(Z, axis=1)
    return Z / norms[:, None]


# -- designs -------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianDesign:
    """Rows N(0, sigma)."""

    sigma: np.ndarray
    name: str = field(default="gaussian", init=False)

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.sigma, dtype=np.float64))
        if S.shape[0] != S.shape[1] or not np.allclose(S, S.T, rtol=0, atol=1e-12):
            raise ValueError("sigma must be a symmetric square matrix")
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise ValueError("sigma must be positive definite") from None
        object.__setattr__(self, "sigma", S)

    @classmethod
    def identity(cls, p: int) -> "GaussianDesign":
        return cls(np.eye(p))

    @property
    def p(self) -> int:
        return self.sigma.shape[0]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        L = np.linalg.cholesky(self.sigma)
        return rng.standard_normal((n, self.p)) @ L.T


@dataclass(frozen=True)
class RademacherDesign:
    """I.i.d. +-1 entries."""

    p: int
    name: str = field(default="rademacher", init=False)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.where(rng.random((n, self.p)) < 0.5, -1.0, 1.0)


@dataclass(frozen=True)
class SphereDesign:
    """Rows uniform on the unit sphere."""

    p: int
    name: str = field(default="sphere", init=False)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return _unit_rows(rng, n, self.p)


@dataclass(frozen=True)
class EllipticalDesign:
    """Rows R * A U with U uniform on the sphere and R drawn by inverse CDF."""

    A: np.ndarray
    radial_icdf: Callable[[np.ndarray], np.ndarray]
    radial_name: str = "custom"
    name: str = field(default="elliptical", init=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        if A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        object.__setattr__(self, "A", A)

    @classmethod
    def chi(cls, p: int, A=None) -> "EllipticalDesign":
        """R ~ chi(p): with A = I this is the standard Gaussian design."""
        law = stats.chi(p)
        return cls(np.eye(p) if A is None else A, law.ppf, f"chi({p})")

    @classmethod
    def constant(cls, p: int, r: float = 1.0, A=None) -> "EllipticalDesign":
        """R == r: with A = I and r = 1 this is the uniform sphere."""
        return cls(np.eye(p) if A is None else A, lambda u: np.full_like(u, r), f"const({r:g})")

    @property
    def p(self) -> int:
        return self.A.shape[0]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        U = _unit_rows(rng, n, self.p)
        R = np.asarray(self.radial_icdf(rng.random(n)), dtype=np.float64)
        return R[:, None] * (U @ self.A.T)


@dataclass(frozen=True)
class OrthonormalDesign:
    """Rows sqrt(p) * v_k with k uniform over the columns of an orthonormal basis."""

    basis: np.ndarray
    name: str = field(default="orthonormal", init=False)

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.basis, dtype=np.float64))
        if V.shape[0] != V.shape[1] or np.max(np.abs(V.T @ V - np.eye(V.shape[0]))) > 1e-10:
            raise ValueError("basis must be a square matrix with orthonormal columns")
        object.__setattr__(self, "basis", V)

    @classmethod
    def standard(cls, p: int) -> "OrthonormalDesign":
        return cls(np.eye(p))

    @property
    def p(self) -> int:
        return self.basis.shape[0]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        k = rng.integers(0, self.p, size=n)
        return np.sqrt(self.p) * self.basis[:, k].T


@dataclass(frozen=True)
class CauchyDesign:
    """I.i.d. standard Cauchy entries (no finite moments)."""

    p: int
    name: str = field(default="cauchy", init=False)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_cauchy((n, self.p))


DesignSpec = GaussianDesign | RademacherDesign | SphereDesign | EllipticalDesign | OrthonormalDesign | CauchyDesign


def sample_design(spec: DesignSpec, n: int, seed, key: tuple = ()) -> np.ndarray:
    """Draw an n x p design; deterministic in ``(spec, n, seed, key)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return spec.sample(_as_rng(seed, tuple(key) + (DESIGN_STREAM,)), n)


# -- noise -------------------------------------------------------------------

@dataclass(frozen=True)
class UniformNoise:
    a: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise ValueError("noise radius must be finite and positive")

    def cdf(self, t):
        return np.clip((np.asarray(t, dtype=np.float64) + self.a) / (2 * self.a), 0.0, 1.0)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.a * (2.0 * rng.random(n) - 1.0)


@dataclass(frozen=True)
class SymmetricBoundedNoise:
    """Noise on [-a, a] given by its CDF; sampled by inverse CDF (bisection if no inverse is supplied)."""

    a: float
    cdf: Callable[[np.ndarray], np.ndarray]
    icdf: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise ValueError("noise radius must be finite and positive")
        grid = np.linspace(-self.a, self.a, 1001)
        F = np.asarray(self.cdf(grid), dtype=np.float64)
        if abs(F[0]) > 1e-12 or abs(F[-1] - 1.0) > 1e-12 or np.any(np.diff(F) < -1e-15):
            raise ValueError("cdf must rise monotonically from 0 at -a to 1 at a")

    def quantile(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if self.icdf is not None:
            return np.asarray(self.icdf(u), dtype=np.float64)
        lo = np.full(u.shape, -self.a)
        hi = np.full(u.shape, self.a)
        # 2a / 2^k <= 1e-12 * a after this many halvings
        for _ in range(int(np.ceil(np.log2(2.0 / 1e-12)))):
            mid = 0.5 * (lo + hi)
            below = np.asarray(self.cdf(mid)) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.quantile(rng.random(n))


NoiseSpec = UniformNoise | SymmetricBoundedNoise


def triangular_noise(a: float) -> SymmetricBoundedNoise:
    """Symmetric triangular density on [-a, a]."""

    def cdf(t):
        z = np.clip(np.asarray(t, dtype=np.float64) / a, -1.0, 1.0)
        return np.where(z < 0, 0.5 * (1 + z) ** 2, 1 - 0.5 * (1 - z) ** 2)

    return SymmetricBoundedNoise(a, cdf)


def sample_noise(spec: NoiseSpec, n: int, seed, key: tuple = ()) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be at least 1")
    return spec.sample(_as_rng(seed, tuple(key) + (NOISE_STREAM,)), n)


# -- coefficient patterns ------------------------------------------------------------

@dataclass(frozen=True)
class HalfOnes:
    """First p/2 coefficients +1, the rest -1."""

    def beta(self, p: int) -> np.ndarray:
        if p % 2:
            raise ValueError("HalfOnes needs an even dimension")
        return np.concatenate([np.ones(p // 2), -np.ones(p // 2)])


@dataclass(frozen=True)
class SparseSigned:
    """First s/2 coefficients +1, next s/2 -1, the rest 0."""

    s: int

    def beta(self, p: int) -> np.ndarray:
        if self.s % 2 or self.s < 0 or self.s > p:
            raise ValueError("SparseSigned needs an even s with 0 <= s <= p")
        b = np.zeros(p)
        b[: self.s // 2] = 1.0
        b[self.s // 2: self.s] = -1.0
        return b


BetaPattern = HalfOnes | SparseSigned


def make_dataset(design: DesignSpec, pattern: BetaPattern, noise: NoiseSpec, n: int, seed,
                 key: tuple = ()) -> Dataset:
    """Simulate y = X beta* + eps and keep the truth alongside."""
    X = sample_design(design, n, seed, key)
    eps = sample_noise(noise, n, seed, key)
    beta = pattern.beta(design.p)
    return Dataset(X, X @ beta + eps, Truth(beta, float(noise.a), eps))
