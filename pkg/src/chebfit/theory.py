"""Closed-form bounds, constants and tail probabilities for bounded-noise regression.

Everything here is a pure function of its arguments, except the Monte-Carlo
helpers, which draw from seeded streams. Unnamed absolute constants are
explicit keyword arguments that default to 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .designs import AUX_STREAM, DESIGN_STREAM, EllipticalDesign, GaussianDesign, stream


def _positive(**kw) -> None:
    for name, v in kw.items():
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be finite and positive, got {v!r}")


def _clamp01(v: float) -> float:
    return float(min(1.0, max(0.0, v)))


def bernstein_exponent(L: float) -> float:
    """(L^2 / 2) / ((4/3) L + 1)."""
    return 0.5 * L * L / (4.0 * L / 3.0 + 1.0)


# -- order statistics of bounded noise --------------------------------------------

def order_stat_tail_bound(n: int, K: int, L: float) -> float:
    """Upper bound on P(|eps|_(K) / a < 1 - K(L+1)/n) for uniform noise.

    |eps|_(K) is the K-th largest absolute error.
    """
    if not 1 <= K <= n:
        raise ValueError("need 1 <= K <= n")
    _positive(L=L)
    return float(math.exp(-K * bernstein_exponent(L)))


def a_n_threshold(noise, n: int, K: int, L: float, tol: float = 1e-10) -> float:
    """inf{t in [0, 2a] : 2n (1 - F(a - t)) > K (L + 1)} by bisection.

    ``noise`` needs a radius ``a`` and a ``cdf``. Returns 2a when the target
    K(L+1) is at least 2n, where the set is empty.
    """
    if not 1 <= K <= n:
        raise ValueError("need 1 <= K <= n")
    _positive(L=L)
    a = float(noise.a)
    target = K * (L + 1.0)
    if target >= 2 * n:
        return 2.0 * a

    def hit(t: float) -> bool:
        return 2.0 * n * (1.0 - float(noise.cdf(a - t))) > target

    lo, hi = 0.0, 2.0 * a
    if hit(lo):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if hit(mid):
            hi = mid
        else:
            lo = mid
    return hi


# -- small-ball parameters and containment ------------------------------------------

@dataclass(frozen=True)
class PZParams:
    """Paley-Zygmund knobs for the symmetrised design.

    moment_lower is inf_v E|<v, X>|^alpha, moment_upper is sup_v E|<v, X>|^(q alpha)
    and norm_mean is E||X||, all over unit directions v.
    """

    theta: float
    q: float
    alpha: float
    c: float
    moment_lower: float
    moment_upper: float
    norm_mean: float

    def __post_init__(self):
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if not self.q > 1.0:
            raise ValueError("q must exceed 1")
        _positive(alpha=self.alpha, c=self.c, moment_lower=self.moment_lower,
                  moment_upper=self.moment_upper, norm_mean=self.norm_mean)


@dataclass(frozen=True)
class PZResult:
    rho: float
    xi: float
    upsilon: float
    """c * E||X||: the radius used in the covering step."""
    in_regime: bool
    """False when rho >= 1/2, where the containment bound is vacuous."""


def paley_zygmund_params(pz: PZParams) -> PZResult:
    """Small-ball probability rho and ball radius xi from moment ratios."""
    ratio = ((1.0 - pz.theta) * pz.moment_lower) ** (pz.q / (pz.q - 1.0)) / pz.moment_upper ** (1.0 / (pz.q - 1.0))
    rho = 1.0 / pz.c + 0.5 * (1.0 - ratio)
    xi = 0.5 * (pz.theta * pz.moment_lower) ** (1.0 / pz.alpha)
    return PZResult(float(rho), float(xi), float(pz.c * pz.norm_mean), bool(rho < 0.5))


def containment_prob_bound(xi: float, rho: float, upsilon: float, p: int, m: int) -> float:
    """min(1, (1 + 2 Upsilon/xi)^p (1/2 + rho)^m), evaluated in logs."""
    _positive(xi=xi)
    if upsilon < 0 or rho < 0 or p < 1 or m < 0:
        raise ValueError("need upsilon >= 0, rho >= 0, p >= 1 and m >= 0")
    if rho >= 0.5:
        return 1.0
    log_b = p * math.log1p(2.0 * upsilon / xi) + m * math.log(0.5 + rho)
    return 1.0 if log_b >= 0 else float(math.exp(log_b))


def containment_constants(design) -> PZResult:
    """(rho, xi, Upsilon) for the Gaussian, Rademacher and sphere designs.

    Gaussian uses theta = 1/2, q = 2, alpha = 1, c = 8 pi with E||X|| bounded by
    sqrt(tr Sigma); the sphere uses the same knobs with E||X|| = 1; Rademacher
    uses c = 32 and E||X|| = sqrt(p).
    """
    name, p = design.name, design.p
    if name == "gaussian":
        ev = np.linalg.eigvalsh(design.sigma)
        lmin, lmax = float(ev[0]), float(ev[-1])
        pz = PZParams(0.5, 2.0, 1.0, 8 * math.pi, math.sqrt(2 * lmin / math.pi), lmax,
                      math.sqrt(float(np.trace(design.sigma))))
        return paley_zygmund_params(pz)
    if name == "rademacher":
        return PZResult(15.0 / 32.0, 1.0 / (4 * math.sqrt(2)), 32.0 * math.sqrt(p), True)
    if name == "sphere":
        return PZResult(0.5 - 1.0 / (8 * math.pi), math.sqrt(1.0 / (8 * math.pi * p)), 8 * math.pi, True)
    raise ValueError(f"no containment constants for design family {name!r}")


# -- rate bounds ------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    bound_value: float
    failure_probability: float
    components: dict = field(default_factory=dict)
    """Named inputs and intermediates (xi, rho, Upsilon, f, L, m_required, ...)."""

    def __post_init__(self):
        if not self.bound_value >= 0:
            raise ValueError("bound_value must be nonnegative")
        if not 0.0 <= self.failure_probability <= 1.0:
            raise ValueError("failure_probability must lie in [0, 1]")


def rate_bound(f_val: float, gamma: float, xi: float, a: float, L: float, n: int) -> BoundReport:
    """a (L + 1) ceil(f) / (xi n), failing with probability gamma + exp(-(L^2/2)/((4/3)L + 1)).

    ``f_val`` is a sample size beyond which xi * B lies in the symmetrised hull
    with probability at least 1 - gamma.
    """
    _positive(f_val=f_val, gamma=gamma, xi=xi, a=a, L=L, n=n)
    value = a * (L + 1.0) * math.ceil(f_val) / (xi * n)
    fail = _clamp01(gamma + math.exp(-bernstein_exponent(L)))
    return BoundReport(float(value), fail, {"xi": float(xi), "f": float(f_val), "L": float(L),
                                            "gamma": float(gamma), "f_ceil": float(math.ceil(f_val))})


def _radial_moment(icdf, k: int) -> float:
    val, _ = integrate.quad(lambda u: float(icdf(np.array([u]))[0]) ** k, 0.0, 1.0, limit=200)
    return float(val)


def _family_constants(family, gamma: float, params: dict) -> tuple[str, float, float, dict]:
    """(name, m_required, xi, extra components) for a design family."""
    lg = math.log(1.0 / gamma)
    if isinstance(family, str):
        name = family
        p = params.get("p")
    else:
        name = family.name
        p = family.p
    if p is None:
        raise ValueError(f"family {name!r} needs a dimension p")
    p = int(p)
    need = {"general_moment": ("C", "lambda_min"), "density": ("xi", "upsilon"), "cauchy": ("xi", "upsilon")}
    missing = [k for k in need.get(name, ()) if params.get(k) is None]
    if missing:
        raise ValueError(f"family {name!r} needs {', '.join(missing)}")

    if name == "orthonormal":
        return name, 2.0 * p * math.log(2.0 * p / gamma), 1.0, {}
    if name == "gaussian":
        S = family.sigma if isinstance(family, GaussianDesign) else np.asarray(params.get("sigma", np.eye(p)))
        ev = np.linalg.eigvalsh(S)
        lmin, tr = float(ev[0]), float(np.trace(S))
        m = 8 * math.pi * p * math.log1p(32 * math.sqrt(2) * math.pi ** 1.5 * math.sqrt(tr) / math.sqrt(lmin)) \
            + 8 * math.pi * lg
        return name, m, math.sqrt(lmin / (8 * math.pi)), {"lambda_min": lmin, "trace": tr}
    if name == "rademacher":
        m = 32.0 * (p * math.log1p(256 * math.sqrt(2) * math.sqrt(p)) + lg)
        return name, m, 1.0 / (4 * math.sqrt(2)), {"rho": 15.0 / 32.0}
    if name == "sphere":
        xi = math.sqrt(1.0 / (8 * math.pi * p))
        return name, 8 * math.pi * (p * math.log1p(16 * math.pi / xi) + lg), xi, {}
    if name == "elliptical":
        if isinstance(family, EllipticalDesign):
            A, icdf = family.A, family.radial_icdf
        else:
            A, icdf = np.asarray(params["A"]), params.get("radial_icdf")
        er = params.get("radial_mean")
        er2 = params.get("radial_second_moment")
        if er is None:
            er = _radial_moment(icdf, 1)
        if er2 is None:
            er2 = _radial_moment(icdf, 2)
        ev = np.linalg.eigvalsh(A @ A.T)
        lmin, lmax = float(ev[0]), float(ev[-1])
        c_prime = float(params.get("c_prime", 1.0))
        inner = c_prime * math.sqrt(p) * er2 ** 1.5 * math.sqrt(lmax) / (er ** 3 * math.sqrt(lmin))
        m = 8 * math.pi * er2 / er ** 2 * (p * math.log1p(inner) + lg)
        xi = er * math.sqrt(lmin) * math.sqrt(2 / math.pi) / (4 * math.sqrt(p))
        return name, m, xi, {"radial_mean": er, "radial_second_moment": er2, "lambda_min": lmin,
                             "lambda_max": lmax}
    if name == "general_moment":
        C, lmin = float(params["C"]), float(params["lambda_min"])
        _positive(C=C, lambda_min=lmin)
        inner = 64 * math.sqrt(2) * C ** 1.25 / lmin ** 2.5 * math.sqrt(p)
        m = 16 * C / lmin ** 2 * (p * math.log1p(inner) + lg)
        return name, m, math.sqrt(lmin) / (2 * math.sqrt(2)), {"C": C, "lambda_min": lmin}
    if name in ("density", "cauchy"):
        xi, ups = float(params["xi"]), float(params["upsilon"])
        _positive(xi=xi, upsilon=ups)
        return name, 4.0 / 3.0 * (p * math.log1p(2 * ups / xi) + lg), xi, {"upsilon": ups}
    raise ValueError(f"unsupported design family {name!r}")


def example_bound(family, n: int, gamma: float, L: float, a: float, **params) -> BoundReport:
    """Rate bound for a named design family.

    ``family`` is a design instance or one of "orthonormal", "gaussian",
    "rademacher", "sphere", "elliptical", "general_moment", "density"; string
    families take their parameters (p, sigma, C, lambda_min, xi, upsilon, ...)
    as keywords.
    """
    name, m_req, xi, extra = _family_constants(family, gamma, params)
    rep = rate_bound(m_req, gamma, xi, a, L, n)
    comps = dict(rep.components)
    comps.update(extra)
    comps["family"] = name
    comps["m_required"] = float(m_req)
    return BoundReport(rep.bound_value, rep.failure_probability, comps)


# -- minimax risk --------------------------------------------------------------------

def minimax_risk_orthonormal(a: float, p: int, n: int) -> float:
    """a^2 p^2 / (16 n^2)."""
    _positive(a=a, p=p, n=n)
    return float(a * a * p * p / (16.0 * n * n))


@dataclass(frozen=True)
class MinimaxEstimate:
    value: float
    """a^2 p / (16 n^2 max_j E|(X^T R)_j|^2) at the supplied rotation R."""
    abs_moment: float
    """max_j E|(X^T R)_j| estimated from the draws."""
    std_error: float
    """Standard error of abs_moment for the maximising column."""
    samples: int
    caveat: str = ("R is fixed rather than optimised over rotations, so the estimate "
                   "is at most the minimax risk lower bound")


def minimax_risk_mc(design, n: int, a: float, trials: int, seed: int, R=None,
                    chunk: int = 200_000) -> MinimaxEstimate:
    """Monte-Carlo evaluation of the minimax lower bound at a fixed rotation (identity by default)."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    _positive(a=a, n=n)
    p = design.p
    R = np.eye(p) if R is None else np.asarray(R, dtype=np.float64)
    if R.shape != (p, p):
        raise ValueError(f"R must be {p} x {p}")
    rng = stream(int(seed), DESIGN_STREAM)
    s1 = np.zeros(p)
    s2 = np.zeros(p)
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        Z = np.abs(design.sample(rng, k) @ R)
        s1 += Z.sum(axis=0)
        s2 += (Z * Z).sum(axis=0)
        done += k
    mean = s1 / trials
    j = int(np.argmax(mean))
    var = max(s2[j] / trials - mean[j] ** 2, 0.0)
    mom = float(mean[j])
    return MinimaxEstimate(float(a * a * p / (16.0 * n * n * mom * mom)), mom,
                           float(math.sqrt(var / trials)), int(trials))


def modded_lower_bound(a: float, inf_abs_moment: float) -> float:
    """a^2 / (16 (inf_v E|X^T v|)^2): a dimension-free lower bound on the minimax risk."""
    _positive(inf_abs_moment=inf_abs_moment)
    if a < 0:
        raise ValueError("a must be nonnegative")
    return float(a * a / (16.0 * inf_abs_moment ** 2))


# -- other estimators -------------------------------------------------------------------

def constrained_ls_bound(p: int, n: int, sigma_inv_opnorm: float, C: float = 1.0) -> float:
    """C sqrt(p/n) ||Sigma^{-1}||_op, with the unnamed constant set to 1."""
    if p < 0:
        raise ValueError("p must be nonnegative")
    _positive(n=n, sigma_inv_opnorm=sigma_inv_opnorm, C=C)
    return float(C * math.sqrt(p / n) * sigma_inv_opnorm)


def cheb_lasso_bound(a: float, lam: float, n: int, alpha_exp: float, s: int, kappa: float, L: float) -> float:
    """l1 error bound for Chebyshev's LASSO:
    max(6 (L+1) a / (lam n^(1-alpha)), 24 (L+1) a sqrt(s) log n / (kappa n^(1-alpha)))."""
    if not 0.0 < alpha_exp < 1.0:
        raise ValueError("alpha_exp must lie in (0, 1)")
    if a < 0:
        raise ValueError("a must be nonnegative")
    _positive(lam=lam, n=n, s=s, kappa=kappa, L=L)
    scale = (L + 1.0) * a / n ** (1.0 - alpha_exp)
    return float(max(6.0 * scale / lam, 24.0 * scale * math.sqrt(s) * math.log(n) / kappa))


# -- moment estimation --------------------------------------------------------------

@dataclass(frozen=True)
class MomentEstimate:
    moment_lower: float
    moment_upper: float
    norm_mean: float
    std_errors: tuple[float, float, float]
    directions: int
    draws: int


def estimate_moments(design, alpha: float, q: float, draws: int = 10**6, directions: int = 256,
                     seed: int = 0, chunk: int = 100_000) -> MomentEstimate:
    """Monte-Carlo inputs for :class:`PZParams`.

    The inf and sup over unit directions are taken over ``directions`` random
    directions plus the coordinate axes, so the inf is over-estimated and the
    sup under-estimated; sign symmetrisation does not change |<v, X>|.
    """
    _positive(alpha=alpha, q=q - 1.0)
    p = design.p
    V = stream(int(seed), AUX_STREAM).standard_normal((directions, p))
    V = np.vstack([np.eye(p), V / np.linalg.norm(V, axis=1)[:, None]])
    rng = stream(int(seed), DESIGN_STREAM)
    s_lo = np.zeros(V.shape[0])
    s_lo2 = np.zeros(V.shape[0])
    s_hi = np.zeros(V.shape[0])
    s_hi2 = np.zeros(V.shape[0])
    s_n = s_n2 = 0.0
    done = 0
    while done < draws:
        k = min(chunk, draws - done)
        X = design.sample(rng, k)
        Z = np.abs(X @ V.T)
        lo = Z ** alpha
        hi = Z ** (q * alpha)
        s_lo += lo.sum(axis=0)
        s_lo2 += (lo * lo).sum(axis=0)
        s_hi += hi.sum(axis=0)
        s_hi2 += (hi * hi).sum(axis=0)
        nr = np.linalg.norm(X, axis=1)
        s_n += float(nr.sum())
        s_n2 += float(nr @ nr)
        done += k

    def se(s, s2, j):
        return math.sqrt(max(s2[j] / draws - (s[j] / draws) ** 2, 0.0) / draws)

    i, j = int(np.argmin(s_lo)), int(np.argmax(s_hi))
    nm = s_n / draws
    return MomentEstimate(float(s_lo[i] / draws), float(s_hi[j] / draws), float(nm),
                          (se(s_lo, s_lo2, i), se(s_hi, s_hi2, j), math.sqrt(max(s_n2 / draws - nm * nm, 0.0) / draws)),
                          int(V.shape[0]), int(draws))


# -- restricted eigenvalue ---------------------------------------------------------------

RE_MAX_DIM = 16


@dataclass(frozen=True)
class REParams:
    """Restricted eigenvalue condition v^T A v >= kappa^2 ||v||^2 on the cone
    ||v_{S^c}||_1 <= gamma_cone ||v_S||_1, uniformly over |S| = s."""

    kappa: float
    gamma_cone: float
    s: int

    def __post_init__(self):
        _positive(kappa=self.kappa)
        if not self.gamma_cone >= 1.0:
            raise ValueError("gamma_cone must be at least 1")
        if self.s < 1:
            raise ValueError("s must be at least 1")


@dataclass(frozen=True)
class REResult:
    holds: bool
    min_ratio: float
    witness: np.ndarray
    """Cone direction (unit norm) attaining min_ratio."""


def _retract(v: np.ndarray, S: np.ndarray, Sc: np.ndarray, g: float) -> np.ndarray:
    """Shrink the off-support part onto the cone boundary when it sticks out."""
    out_l1 = np.abs(v[Sc]).sum()
    cap = g * np.abs(v[S]).sum()
    if out_l1 > cap:
        v = v.copy()
        v[Sc] *= cap / out_l1
    return v / np.linalg.norm(v)


def _descend(A: np.ndarray, v: np.ndarray, S, Sc, g: float, steps: int = 200, step: float = 0.2):
    best_v, best_r = v, float(v @ A @ v)
    for _ in range(steps):
        r = float(v @ A @ v)
        grad = 2.0 * (A @ v - r * v)
        if np.linalg.norm(grad) < 1e-12:
            break
        w = _retract(v - step * grad, S, Sc, g)
        rw = float(w @ A @ w)
        if rw < best_r:
            best_v, best_r, v = w, rw, w
        else:
            step *= 0.5
            if step < 1e-8:
                break
    return best_v, best_r


def check_re_empirical(gram, re: REParams, samples_per_subset: int = 200, seed: int = 0) -> REResult:
    """Sampled check of the restricted eigenvalue condition over every support of size s.

    For each S the candidates are the bottom eigenvector of A_SS (the cone
    point with v_{S^c} = 0), random cone directions with the off-support part
    scaled to a random fraction of the cone boundary, and local descent from
    the best of these. A refutation is certain; a pass is approximate.
    """
    A = np.asarray(gram, dtype=np.float64)
    p = A.shape[0]
    if A.ndim != 2 or A.shape != (p, p) or not np.allclose(A, A.T, atol=1e-12):
        raise ValueError("gram must be a symmetric square matrix")
    if p > RE_MAX_DIM:
        raise ValueError(f"exhaustive subset enumeration supports p <= {RE_MAX_DIM}, got {p}")
    if re.s > p:
        raise ValueError("s cannot exceed p")
    rng = stream(int(seed), AUX_STREAM)
    g = float(re.gamma_cone)
    best_r, best_v = math.inf, None
    for S in itertools.combinations(range(p), re.s):
        S = np.array(S)
        Sc = np.setdiff1d(np.arange(p), S)
        ev, evec = np.linalg.eigh(A[np.ix_(S, S)])
        v0 = np.zeros(p)
        v0[S] = evec[:, 0]
        cands = [v0]
        if Sc.size:
            k = samples_per_subset
            V = np.zeros((k, p))
            V[:, S] = rng.standard_normal((k, S.size))
            W = rng.standard_normal((k, Sc.size))
            frac = rng.random(k)
            frac[: k // 4] = 1.0  # a quarter sit on the boundary
            scale = frac * g * np.abs(V[:, S]).sum(axis=1) / np.abs(W).sum(axis=1)
            V[:, Sc] = W * scale[:, None]
            V /= np.linalg.norm(V, axis=1)[:, None]
            cands.extend(V)
        C = np.array(cands)
        ratios = np.einsum("ij,jk,ik->i", C, A, C)
        for i in np.argsort(ratios, kind="stable")[:3]:
            v, r = (C[i], float(ratios[i])) if not Sc.size else _descend(A, C[i], S, Sc, g)
            if r < best_r:
                best_r, best_v = r, v
    # rounding slack so that kappa^2 equal to the true minimum is accepted
    tol = 1e-12 * max(1.0, float(np.abs(A).max()))
    return REResult(bool(best_r >= re.kappa ** 2 - tol), float(best_r), best_v)
