"""Time the compiled kernels against the NumPy fallback on the solver hot paths.

    python benchmarks/bench_kernels.py [--repeat 3]

Each workload runs with the same inputs under both backends; the results are
checked for agreement before timings are reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import chebfit.estimators as est
import chebfit.lp as lp
from chebfit import _kernels_py
from chebfit._backend import BACKEND, kernels
from chebfit.designs import GaussianDesign, HalfOnes, SparseSigned, UniformNoise, make_dataset


def _use(backend) -> None:
    lp.kernels = backend
    est.kernels = backend


def workloads():
    small = make_dataset(GaussianDesign.identity(20), HalfOnes(), UniformNoise(2.0), 400, seed=1)
    wide = make_dataset(GaussianDesign.identity(204), SparseSigned(4), UniformNoise(5.0), 150, seed=2)
    cd = make_dataset(GaussianDesign.identity(1004), SparseSigned(4), UniformNoise(5.0), 600, seed=3)
    lams = np.linspace(0.1, 2.0, 6) * np.sqrt(np.log(204) / 150 ** 0.4)
    return [
        ("chebyshev LP  n=400 p=20", lambda: est.fit_chebyshev_lp(small).beta_hat),
        ("cheb-lasso path n=150 p=204", lambda: np.concatenate(
            [f.beta_hat for f in est.chebyshev_lasso_path(wide, lams)])),
        ("lasso CD path n=600 p=1004", lambda: np.concatenate(
            [f.beta_hat for f in est.lasso_path_glmnet(cd, est.lasso_lambda_grid(cd.X, cd.y))])),
    ]


def best_of(fn, repeat: int) -> tuple[float, np.ndarray]:
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if BACKEND != "compiled":
        raise SystemExit("compiled kernels are not built; run `python setup.py build_ext --inplace`")
    print(f"{'workload':<30} {'compiled s':>11} {'python s':>10} {'speedup':>8}")
    for name, fn in workloads():
        _use(kernels)
        tc, xc = best_of(fn, args.repeat)
        _use(_kernels_py)
        tp, xp = best_of(fn, args.repeat)
        _use(kernels)
        if not np.allclose(xc, xp, atol=1e-6):
            raise SystemExit(f"{name}: backends disagree (max diff {np.max(np.abs(xc - xp)):.3g})")
        print(f"{name:<30} {tc:>11.4f} {tp:>10.4f} {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
