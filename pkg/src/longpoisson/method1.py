"""One-term asymptotic approximation ``psi_ell(lambda_inf, .) (x) u_inf``.

The cross-section factor solves the reduced Poisson problem on omega; the
longitudinal factor is the closed-form best approximation
``1 - cosh(a x1) / cosh(a ell)`` with ``a = ||grad u_inf|| / ||u_inf||``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DegenerateRHS, InvalidArgument, SolverFailure
from .mesh import (CrossSectionGrid, DiscreteOperator, Grid1D, assemble_laplacian_1d,
                   assemble_laplacian_cs, extreme_eigenvalues, solve_spd)
from .tensor import RankOneTerm, TensorField, l2_inner_cs


@dataclass(frozen=True, eq=False)
class ReducedSolution:
    u_inf: np.ndarray
    alpha_inf: float
    beta_inf: float

    @property
    def lambda_inf(self) -> float:
        return self.beta_inf / self.alpha_inf


def solve_reduced(f, grid: CrossSectionGrid,
                  Acs: Optional[DiscreteOperator] = None) -> ReducedSolution:
    """Solve ``A' u = f`` on the cross section and record the norms of ``u``.

    ``beta_inf`` is taken from ``(f, u)`` rather than from a gradient of the
    discrete solution; the two agree exactly at the discrete level.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n,):
        raise InvalidArgument("f does not match the cross-section grid")
    if not np.all(np.isfinite(f)):
        raise InvalidArgument("f has non-finite entries")
    if not np.any(f):
        raise DegenerateRHS("f vanishes identically; lambda_inf is undefined")
    if Acs is None:
        Acs = assemble_laplacian_cs(grid)
    u = solve_spd(Acs, f)
    if np.linalg.norm(Acs.apply(u) - f) > 1e-10 * np.linalg.norm(f):
        raise SolverFailure("reduced problem solve did not reach residual 1e-10")
    alpha = math.sqrt(l2_inner_cs(u, u, grid))
    beta = math.sqrt(l2_inner_cs(f, u, grid))
    return ReducedSolution(u, alpha, beta)


def psi_profile(a: float, grid: Grid1D) -> np.ndarray:
    """Nodal values of ``1 - cosh(a x) / cosh(a ell)``.

    Written as ``1 - (e^{a(x-ell)} + e^{-a(x+ell)}) / (1 + e^{-2 a ell})`` so
    that large ``a * ell`` cannot overflow.
    """
    if not a > 0:
        raise InvalidArgument(f"rate must be positive, got {a!r}")
    x, ell = grid.nodes, grid.ell
    return 1.0 - (np.exp(a * (x - ell)) + np.exp(-a * (x + ell))) / (1.0 + np.exp(-2.0 * a * ell))


def method1_solution(f, grid1: Grid1D, gridcs: CrossSectionGrid,
                     A1: Optional[DiscreteOperator] = None,
                     Acs: Optional[DiscreteOperator] = None) -> TensorField:
    A1 = assemble_laplacian_1d(grid1) if A1 is None else A1
    Acs = assemble_laplacian_cs(gridcs) if Acs is None else Acs
    red = solve_reduced(f, gridcs, Acs)
    term = RankOneTerm.build(psi_profile(red.lambda_inf, grid1), red.u_inf, A1, Acs)
    return TensorField(grid1, gridcs, (term,))


def error_bound_constants(lambda1: float, ell: float, delta: float) -> Tuple[float, float]:
    """Constants ``(C1, C2)`` of the interior H1 bound on ``|x1| < ell - delta``.

    ``C1 = 4 exp(-2 lambda1 delta)`` and
    ``C2 = 4 (exp(-2 lambda1 delta) / lambda1 + 6 (ell - delta) exp(-2 lambda1 ell))``.
    """
    if not lambda1 > 0:
        raise InvalidArgument(f"lambda1 must be positive, got {lambda1!r}")
    if not 0 <= delta < ell:
        raise InvalidArgument(f"need 0 <= delta < ell, got delta={delta!r}, ell={ell!r}")
    decay = math.exp(-2.0 * lambda1 * delta)
    c1 = 4.0 * decay
    c2 = 4.0 * (decay / lambda1 + 6.0 * (ell - delta) * math.exp(-2.0 * lambda1 * ell))
    return c1, c2


def discrete_lambda1(Acs: DiscreteOperator) -> float:
    """Square root of the smallest eigenvalue of the cross-section Laplacian."""
    return math.sqrt(extreme_eigenvalues(Acs, tol=1e-10)[0])


def interior_error_bound(red: ReducedSolution, lambda1: float, ell: float, delta: float) -> float:
    """Upper bound for ``||grad(u - u_M1)||`` on ``|x1| < ell - delta``."""
    c1, c2 = error_bound_constants(lambda1, ell, delta)
    return math.sqrt(c1 * red.alpha_inf**2 + c2 * red.beta_inf**2)
