"""Low-rank solvers for the Poisson problem on long product domains."""

from .errors import (DegenerateIterate, DegenerateReference, DegenerateRHS, EstimationFailure,
                     FitFailure, InvalidArgument, LongPoissonError, SolverFailure)
from .expsum import ExponentialSum, ExpSumCache, fit_expsum_inv_x
from .mesh import (assemble_laplacian_1d, assemble_laplacian_cs, build_cross_section,
                   build_interval_grid, interval_grid_for_spacing)
from .method1 import method1_solution, psi_profile, solve_reduced
from .method2 import AlsOptions, als_solve
from .method3 import Method3Config, method3_solve
from .tensor import (FullGridField, RankOneTerm, TensorField, evaluate_full, h1_seminorm_error,
                     rel_l2_error)

__version__ = "0.1.0"

__all__ = [
    "AlsOptions", "DegenerateIterate", "DegenerateRHS", "DegenerateReference", "EstimationFailure",
    "ExpSumCache", "ExponentialSum", "FitFailure", "FullGridField", "InvalidArgument",
    "LongPoissonError", "Method3Config", "RankOneTerm", "SolverFailure", "TensorField",
    "als_solve", "assemble_laplacian_1d", "assemble_laplacian_cs", "build_cross_section",
    "build_interval_grid", "evaluate_full", "fit_expsum_inv_x", "h1_seminorm_error",
    "interval_grid_for_spacing", "method1_solution", "method3_solve", "psi_profile",
    "rel_l2_error", "solve_reduced",
]
