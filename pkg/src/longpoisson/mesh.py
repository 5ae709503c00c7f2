"""Grids and finite-difference operators on the interval and the cross section.

The long domain is the product ``(-ell, ell) x omega``. Both factors are
discretised by uniform finite differences with homogeneous Dirichlet data,
so the mass matrices are identities and the full Laplacian is the Kronecker
sum ``A1 (x) I + I (x) A'``. Boundary nodes are never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EstimationFailure, InvalidArgument, SolverFailure

INTERVAL = "interval"
LSHAPE = "lshape"
_SHAPE_ALIASES = {
    "interval": INTERVAL,
    "2d": INTERVAL,
    "lshape": LSHAPE,
    "l-shape": LSHAPE,
    "l": LSHAPE,
    "3d": LSHAPE,
}


@dataclass(frozen=True)
class Grid1D:
    """Uniform interior grid of ``(-ell, ell)`` with ``n`` nodes."""

    ell: float
    n: int

    @property
    def h(self) -> float:
        return 2.0 * self.ell / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return -self.ell + self.h * np.arange(1, self.n + 1)

    def window_mask(self, l0: float) -> np.ndarray:
        """Boolean mask of the nodes with ``|x1| <= l0``."""
        return np.abs(self.nodes) <= l0 * (1.0 + 1e-12)


def build_interval_grid(ell: float, n: int) -> Grid1D:
    """Grid of ``n`` interior nodes on ``(-ell, ell)``.

    >>> build_interval_grid(1.0, 3).nodes
    array([-0.5,  0. ,  0.5])
    """
    if not (ell > 0 and math.isfinite(ell)):
        raise InvalidArgument(f"ell must be positive, got {ell!r}")
    if int(n) != n or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    return Grid1D(float(ell), int(n))


def interval_grid_for_spacing(ell: float, h: float) -> Grid1D:
    """Finest uniform grid on ``(-ell, ell)`` whose spacing does not exceed ``h``."""
    if not h > 0:
        raise InvalidArgument(f"spacing must be positive, got {h!r}")
    cells = math.ceil(2.0 * ell / h - 1e-9)
    return build_interval_grid(ell, max(cells - 1, 1))


@dataclass(frozen=True, eq=False)
class CrossSectionGrid:
    """Structured grid of the cross section with Dirichlet interior indexing.

    Attributes
    ----------
    shape : str
        ``"interval"`` for ``(-1, 1)`` or ``"lshape"`` for
        ``(0,2)x(0,1) u (0,1)x(1,2)``.
    hprime : float
        Lattice spacing.
    coords : ndarray
        ``(n', dim)`` coordinates of the interior nodes, ordered
        lexicographically.
    lattice_index : ndarray
        Integer array over the lattice points strictly inside the bounding
        box; entry ``k >= 0`` for the k-th interior node of omega and ``-1``
        for points outside omega.
    """

    shape: str
    hprime: float
    coords: np.ndarray
    lattice_index: np.ndarray

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def weight(self) -> float:
        """Quadrature weight of a single node."""
        return self.hprime ** self.dim


def _edge_count(edge: float, h: float) -> int:
    k = edge / h
    if not (h > 0) or abs(k - round(k)) > 1e-12 * max(1.0, k) or round(k) < 2:
        raise InvalidArgument(f"spacing {h!r} does not divide edge length {edge!r}")
    return int(round(k))


def build_cross_section(shape: str, hprime: float) -> CrossSectionGrid:
    """Enumerate the interior lattice nodes of the cross section.

    Raises
    ------
    InvalidArgument
        If ``hprime`` does not divide the edge lengths (2 for the interval,
        1 for the L-shape) or the shape tag is unknown.
    """
    tag = _SHAPE_ALIASES.get(str(shape).lower())
    if tag is None:
        raise InvalidArgument(f"unknown cross-section shape {shape!r}")
    if tag == INTERVAL:
        m = _edge_count(2.0, hprime)
        coords = (-1.0 + hprime * np.arange(1, m))[:, None]
        index = np.arange(m - 1)
        return CrossSectionGrid(tag, float(hprime), coords, index)

    k = _edge_count(1.0, hprime)
    i, j = np.meshgrid(np.arange(1, 2 * k), np.arange(1, 2 * k), indexing="ij")
    # Integer test: lower bar 0<y<1, or upper bar 0<x<1 together with the
    # shared open edge y=1, 0<x<1.
    mask = (j < k) | (i < k)
    index = np.full(mask.shape, -1, dtype=np.int64)
    index[mask] = np.arange(int(mask.sum()))
    coords = np.column_stack([i[mask], j[mask]]).astype(float) * hprime
    return CrossSectionGrid(tag, float(hprime), coords, index)


@dataclass(eq=False)
class DiscreteOperator:
    """Symmetric positive definite finite-difference stiffness matrix.

    ``kind`` is ``"tridiagonal"`` (then ``diag``/``offdiag`` hold the bands)
    or ``"sparse"``. ``spacing`` is set for the Toeplitz operator
    ``h^-2 tridiag[-1, 2, -1]``, whose spectrum is known in closed form.
    """

    kind: str
    matrix: sp.csr_matrix
    diag: Optional[np.ndarray] = None
    offdiag: Optional[np.ndarray] = None
    spacing: Optional[float] = None
    _bounds: dict = field(default_factory=dict, repr=False)
    _lu: object = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_toeplitz(self) -> bool:
        return self.kind == "tridiagonal" and self.spacing is not None

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Matrix product acting along the first axis of ``v``."""
        v = np.asarray(v)
        if self.kind == "tridiagonal":
            d = self.diag.reshape((-1,) + (1,) * (v.ndim - 1))
            e = self.offdiag.reshape((-1,) + (1,) * (v.ndim - 1))
            w = d * v
            w[1:] += e * v[:-1]
            w[:-1] += e * v[1:]
            return w
        return self.matrix @ v

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def analytic_eigenvalues(self) -> np.ndarray:
        """Eigenvalues ``h^-2 (2 - 2 cos(k pi/(n+1)))`` of a Toeplitz operator."""
        if not self.is_toeplitz:
            raise InvalidArgument("closed-form spectrum needs the Toeplitz operator")
        n = self.dimension
        k = np.arange(1, n + 1)
        return (2.0 - 2.0 * np.cos(k * np.pi / (n + 1))) / self.spacing**2


def _tridiagonal(n: int, h: float) -> DiscreteOperator:
    d = np.full(n, 2.0 / h**2)
    e = np.full(n - 1, -1.0 / h**2)
    mat = sp.diags([e, d, e], [-1, 0, 1], format="csr")
    return DiscreteOperator("tridiagonal", mat, d, e, spacing=h)


def assemble_laplacian_1d(grid: Grid1D) -> DiscreteOperator:
    """``h^-2 tridiag[-1, 2, -1]`` on the interior nodes of ``grid``."""
    return _tridiagonal(grid.n, grid.h)


def assemble_laplacian_cs(grid: CrossSectionGrid) -> DiscreteOperator:
    """Dirichlet Laplacian on the cross section (3-point or 5-point stencil)."""
    if grid.shape == INTERVAL:
        return _tridiagonal(grid.n, grid.hprime)
    m = grid.lattice_index.shape[0]
    t = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(m, m))
    eye = sp.identity(m)
    full = ((sp.kron(t, eye) + sp.kron(eye, t)) / grid.hprime**2).tocsr()
    keep = grid.lattice_index.ravel() >= 0
    mat = full[keep][:, keep].tocsr()
    mat.sort_indices()
    return DiscreteOperator("sparse", mat)


# -- linear solves ---------------------------------------------------------


def _banded(op: DiscreteOperator, c0, c1) -> np.ndarray:
    n = op.dimension
    dtype = np.result_type(c0, c1, float)
    ab = np.zeros((3, n), dtype=dtype)
    ab[0, 1:] = c0 * op.offdiag
    ab[1] = c0 * op.diag + c1
    ab[2, :-1] = c0 * op.offdiag
    return ab


def _check_rhs(op: DiscreteOperator, rhs) -> np.ndarray:
    rhs = np.asarray(rhs)
    if rhs.shape[0] != op.dimension:
        raise InvalidArgument(
            f"rhs has length {rhs.shape[0]}, operator dimension is {op.dimension}"
        )
    return rhs


def solve_shifted_1d(A1: DiscreteOperator, c0: float, c1: float, rhs) -> np.ndarray:
    """Solve ``(c0 A1 + c1 I) x = rhs`` by banded Gaussian elimination."""
    if A1.kind != "tridiagonal":
        raise InvalidArgument("solve_shifted_1d needs a tridiagonal operator")
    return solve_shifted_spd(A1, c0, c1, rhs)


def solve_shifted_spd(op: DiscreteOperator, c0: float, c1: float, rhs) -> np.ndarray:
    """Solve ``(c0 op + c1 I) x = rhs`` for ``c0 > 0, c1 >= 0`` (an SPD system)."""
    if not c0 > 0 or not c1 >= 0:
        raise InvalidArgument(f"need c0 > 0 and c1 >= 0, got {c0!r}, {c1!r}")
    rhs = _check_rhs(op, rhs)
    if op.kind == "tridiagonal":
        x = sla.solve_banded((1, 1), _banded(op, c0, c1), rhs, check_finite=False)
        opnorm = c0 * 4.0 * np.max(op.diag) + c1
        tol = 1e-12
    else:
        mat = (c0 * op.matrix + c1 * sp.identity(op.dimension, format="csr")).tocsc()
        x = spla.splu(mat).solve(np.ascontiguousarray(rhs, dtype=float))
        opnorm = c0 * abs(op.matrix).sum(axis=1).max() + c1
        tol = 1e-11
    res = c0 * op.apply(x) + c1 * x - rhs
    if np.linalg.norm(res) > tol * (np.linalg.norm(rhs) + np.linalg.norm(x) * opnorm):
        raise SolverFailure("shifted SPD solve lost accuracy")
    return x


def solve_shifted_cs(Acs: DiscreteOperator, c0, c1, rhs, *, rtol: float = 1e-10):
    """Solve ``(c1 I - c0 Acs) x = rhs`` for a real or complex shift ``c1``.

    ``rhs`` may be a vector or an ``(n', k)`` array of right-hand sides.

    Raises
    ------
    SolverFailure
        If the shift is (numerically) an eigenvalue of ``c0 Acs``, detected by
        a failed factorisation or a relative residual above ``rtol``.
    """
    rhs = _check_rhs(Acs, rhs)
    if c0 < 0:
        raise InvalidArgument(f"need c0 >= 0, got {c0!r}")
    if c0 == 0:
        if c1 == 0:
            raise SolverFailure("zero operator")
        return rhs / c1
    dtype = np.result_type(c0, c1, rhs.dtype, float)
    try:
        if Acs.kind == "tridiagonal":
            x = sla.solve_banded((1, 1), _banded(Acs, -c0, c1), rhs.astype(dtype))
        else:
            n = Acs.dimension
            mat = (c1 * sp.identity(n, dtype=dtype, format="csc") - c0 * Acs.matrix).tocsc()
            x = spla.splu(mat).solve(np.ascontiguousarray(rhs, dtype=dtype))
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        raise SolverFailure(f"shift {c1!r} is singular for c0={c0!r}: {exc}") from exc
    res = c1 * x - c0 * Acs.apply(x) - rhs
    rn, bn = np.linalg.norm(res), np.linalg.norm(rhs)
    # ||x|| ||op|| / ||b|| bounds the condition number from below.
    opnorm = abs(c1) + c0 * abs(Acs.matrix).sum(axis=1).max()
    if bn > 0 and np.linalg.norm(x) * opnorm > 1e12 * bn:
        raise SolverFailure(f"shift {c1!r} is numerically an eigenvalue of {c0!r} * A'")
    if not np.isfinite(rn) or rn > rtol * bn:
        raise SolverFailure(
            f"shifted solve residual {rn / max(bn, 1e-300):.2e} exceeds {rtol:.0e} "
            f"(shift {c1!r} near the spectrum of {c0!r} * A')"
        )
    return x


def solve_spd(op: DiscreteOperator, rhs) -> np.ndarray:
    """Solve ``op x = rhs``; the sparse factorisation is cached on ``op``."""
    rhs = _check_rhs(op, rhs)
    if op.kind == "tridiagonal":
        return sla.solveh_banded(
            np.vstack([np.r_[0.0, op.offdiag], op.diag]), rhs, check_finite=False
        )
    if op._lu is None:
        op._lu = spla.splu(op.matrix.tocsc())
    return op._lu.solve(np.ascontiguousarray(rhs, dtype=float))


# -- spectral bounds -------------------------------------------------------


def _start_vector(n: int) -> np.ndarray:
    v = np.random.default_rng(20180917).standard_normal(n)
    return v / np.linalg.norm(v)


def _lanczos_extremes(op: DiscreteOperator, tol: float, maxiter: int) -> Tuple[float, float]:
    n = op.dimension
    if n <= 50:
        ev = np.linalg.eigvalsh(op.dense())
        return float(ev[0]), float(ev[-1])
    v0 = _start_vector(n)
    try:
        lmax = spla.eigsh(op.matrix, k=1, which="LA", v0=v0, tol=tol, maxiter=maxiter,
                          return_eigenvectors=False)[0]
        lmin = spla.eigsh(op.matrix.tocsc(), k=1, sigma=0.0, which="LM", v0=v0, tol=tol,
                          maxiter=maxiter, return_eigenvectors=False)[0]
    except spla.ArpackNoConvergence as exc:
        raise EstimationFailure(f"Lanczos iteration did not converge: {exc}") from exc
    return float(lmin), float(lmax)


def extreme_eigenvalues(
    op: DiscreteOperator, tol: float = 1e-6, maxiter: int = 10000, method: str = "auto"
) -> Tuple[float, float]:
    """Unwidened estimates of ``(lambda_min, lambda_max)``.

    ``method="auto"`` uses the closed form for the Toeplitz operator and
    implicitly restarted Lanczos otherwise (shift-invert about zero for the
    bottom of the spectrum). Small operators are handled densely.
    """
    if method == "auto":
        method = "analytic" if op.is_toeplitz else "iterative"
    key = (method, tol)
    if key in op._bounds:
        return op._bounds[key]
    if method == "analytic":
        ev = op.analytic_eigenvalues()
        out = (float(ev[0]), float(ev[-1]))
    elif method == "iterative":
        out = _lanczos_extremes(op, tol, maxiter)
    else:
        raise InvalidArgument(f"unknown method {method!r}")
    op._bounds[key] = out
    return out


def spectral_bounds(
    op: DiscreteOperator, margin: float = 0.05, *, tol: float = 1e-6, method: str = "auto"
) -> Tuple[float, float]:
    """Enclosure ``(lambda_min (1-margin), lambda_max (1+margin))`` of the spectrum."""
    if not 0 <= margin < 1:
        raise InvalidArgument(f"margin must lie in [0, 1), got {margin!r}")
    lmin, lmax = extreme_eigenvalues(op, tol=tol, method=method)
    return lmin * (1.0 - margin), lmax * (1.0 + margin)
