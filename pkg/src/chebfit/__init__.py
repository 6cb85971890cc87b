"""Chebyshev (l-infinity) regression under bounded noise.

Estimators, random designs, ball-in-hull geometry, theoretical bounds and a
seeded experiment harness. The simplex and coordinate-descent inner loops
run in a compiled extension when it is available and in NumPy otherwise;
``chebfit.BACKEND`` says which.
"""

from ._backend import BACKEND
from .designs import (CauchyDesign, EllipticalDesign, GaussianDesign, HalfOnes, OrthonormalDesign, RademacherDesign,
                      SparseSigned, SphereDesign, SymmetricBoundedNoise, UniformNoise, make_dataset, triangular_noise)
from .estimators import (IrlsConfig, LassoConfig, chebyshev_lasso_path, fit_chebyshev_irls, fit_chebyshev_lasso,
                         fit_chebyshev_lp, fit_constrained_ls, fit_lasso_cd, fit_ols, lasso_path)
from .lp import LpProblem, LpSolution, LpStatus, SolverConfig, solve_lp
from .model import Dataset, FitResult, Truth, check_feasible, critical_report, read_dataset, write_dataset

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CauchyDesign", "Dataset", "EllipticalDesign", "FitResult", "GaussianDesign", "HalfOnes",
    "IrlsConfig", "LassoConfig", "LpProblem", "LpSolution", "LpStatus", "OrthonormalDesign", "RademacherDesign",
    "SolverConfig", "SparseSigned", "SphereDesign", "SymmetricBoundedNoise", "Truth", "UniformNoise",
    "chebyshev_lasso_path", "check_feasible", "critical_report", "fit_chebyshev_irls", "fit_chebyshev_lasso",
    "fit_chebyshev_lp", "fit_constrained_ls", "fit_lasso_cd", "fit_ols", "lasso_path", "make_dataset",
    "read_dataset", "solve_lp", "triangular_noise", "write_dataset",
]
