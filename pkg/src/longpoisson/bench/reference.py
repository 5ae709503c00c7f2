"""Reference solutions of the full Kronecker-sum system."""

from __future__ import annotations

from typing import Optional

import numpy as np
import scipy.fft
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import InvalidArgument, SolverFailure
from ..expsum import ExpSumCache
from ..mesh import (CrossSectionGrid, DiscreteOperator, Grid1D, assemble_laplacian_1d,
                    assemble_laplacian_cs)
from ..method3 import Method3Config, method3_solve_many
from ..tensor import FullGridField

MAX_UNKNOWNS = 10**7
_DENSE_EIG_LIMIT = 3000


def kronecker_operator(A1: DiscreteOperator, Acs: DiscreteOperator) -> sp.csr_matrix:
    """``A1 (x) I + I (x) A'`` in the row-major ordering ``(i, k) -> i n' + k``."""
    return (sp.kron(A1.matrix, sp.identity(Acs.dimension))
            + sp.kron(sp.identity(A1.dimension), Acs.matrix)).tocsr()


def _residual(A1, Acs, U, F) -> float:
    R = A1.apply(U) + (Acs.matrix @ U.T).T - F
    return float(np.linalg.norm(R) / np.linalg.norm(F))


def _cs_eigen(Acs: DiscreteOperator):
    if Acs.is_toeplitz:
        return Acs.analytic_eigenvalues(), None
    if Acs.dimension > _DENSE_EIG_LIMIT:
        raise InvalidArgument("fast diagonalisation needs n' <= %d; use method='sparse'"
                              % _DENSE_EIG_LIMIT)
    return sla.eigh(Acs.dense())


def _diag_solver(A1: DiscreteOperator, Acs: DiscreteOperator):
    n, m = A1.dimension, Acs.dimension
    mu, V = _cs_eigen(Acs)
    ab = np.zeros((3, n))
    ab[0, 1:] = A1.offdiag
    ab[2, :-1] = A1.offdiag

    def solve(F):
        G = scipy.fft.dst(F, type=1, axis=1, norm="ortho") if V is None else F @ V
        W = np.empty_like(G)
        for k in range(m):
            ab[1] = A1.diag + mu[k]
            W[:, k] = sla.solve_banded((1, 1), ab, G[:, k], check_finite=False)
        return scipy.fft.dst(W, type=1, axis=1, norm="ortho") if V is None else W @ V.T

    return solve


def solve_kronecker(F: np.ndarray, A1: DiscreteOperator, Acs: DiscreteOperator,
                    method: str = "diag", rtol: float = 1e-10) -> np.ndarray:
    """Solve ``(A1 (x) I + I (x) A') U = F`` for ``F`` of shape ``(n, n')``.

    ``method="diag"`` diagonalises ``A'`` (sine transform when Toeplitz) and
    performs one tridiagonal solve per cross-section mode. ``"sparse"``
    factorises the assembled system directly and serves as an oracle.
    """
    n, m = A1.dimension, Acs.dimension
    if F.shape != (n, m):
        raise InvalidArgument("F does not match the operator dimensions")
    if n * m > MAX_UNKNOWNS:
        raise InvalidArgument(f"{n * m} unknowns exceed the limit {MAX_UNKNOWNS}")
    if method == "sparse":
        lu = spla.splu(kronecker_operator(A1, Acs).tocsc())
        solve = lambda G: lu.solve(G.ravel()).reshape(n, m)
    elif method == "diag":
        if A1.kind != "tridiagonal":
            raise InvalidArgument("diag method needs a tridiagonal interval operator")
        solve = _diag_solver(A1, Acs)
    else:
        raise InvalidArgument(f"unknown method {method!r}")
    U = solve(F)
    # One or two refinement steps recover the residual lost to conditioning.
    for _ in range(2):
        res = _residual(A1, Acs, U, F)
        if res <= rtol:
            break
        U = U - solve(A1.apply(U) + (Acs.matrix @ U.T).T - F)
    res = _residual(A1, Acs, U, F)
    if not res <= rtol:
        raise SolverFailure(f"reference residual {res:.2e} exceeds {rtol:.0e}")
    return U


def reference_solution_2d(f, grid1: Grid1D, gridcs: CrossSectionGrid, *,
                          method: str = "diag",
                          A1: Optional[DiscreteOperator] = None,
                          Acs: Optional[DiscreteOperator] = None) -> FullGridField:
    """Full-grid solution of ``A u = 1 (x) f`` to relative residual ``1e-10``."""
    f = np.asarray(f, dtype=float)
    if f.shape != (gridcs.n,):
        raise InvalidArgument("f does not match the cross-section grid")
    A1 = assemble_laplacian_1d(grid1) if A1 is None else A1
    Acs = assemble_laplacian_cs(gridcs) if Acs is None else Acs
    F = np.broadcast_to(f, (grid1.n, gridcs.n))
    return FullGridField(grid1, gridcs, solve_kronecker(np.ascontiguousarray(F), A1, Acs, method))


def reference_solution_3d(fs, grid1: Grid1D, gridcs: CrossSectionGrid, *,
                          r: int = 30, cs_expm: str = "lanczos",
                          A1: Optional[DiscreteOperator] = None,
                          Acs: Optional[DiscreteOperator] = None,
                          cache: Optional[ExpSumCache] = None):
    """Rank-``r`` exponential-sum solution used as reference on a general cross section.

    ``fs`` is one right-hand side or a list of them (sharing the fit and
    the interval factors). Cross-section exponentials use Lanczos at
    ``1e-12`` by default; ``cs_expm="sinc"`` selects the quadrature with
    target ``1e-10``.
    """
    many = [fs] if not isinstance(fs, (list, tuple)) else list(fs)
    cfg = Method3Config(r=r, margin=0.0, quad_tol=1e-10, cs_expm=cs_expm, cache=cache)
    out = method3_solve_many(many, grid1, gridcs, cfg, A1=A1, Acs=Acs)
    return out if isinstance(fs, (list, tuple)) else out[0]
