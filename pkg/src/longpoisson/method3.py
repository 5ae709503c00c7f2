"""Rank-``r`` solve from an exponential-sum approximation of ``A^-1``.

With ``A = A1 (x) I + I (x) A'`` and ``1/x ~ sum a_nu exp(-alpha_nu x)`` on
an interval containing the spectrum of ``A``,

    A^-1 (1 (x) f) ~ sum_nu a_nu exp(-alpha_nu A1) 1 (x) exp(-alpha_nu A') f,

so only ``2 r`` exponential actions on vectors are needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateRHS, InvalidArgument
from .expsum import ExponentialSum, ExpSumCache, fit_expsum_inv_x
from .matexp import (UNDERFLOW_EXPONENT, SincQuadrature, choose_sinc_order, expm_action_1d,
                     expm_action_cs, expm_actions_lanczos)
from .mesh import (CrossSectionGrid, DiscreteOperator, Grid1D, assemble_laplacian_1d,
                   assemble_laplacian_cs, spectral_bounds)
from .tensor import RankOneTerm, TensorField

CS_METHODS = ("auto", "sinc", "lanczos")


@dataclass(frozen=True)
class Method3Config:
    """Settings for :func:`method3_solve`.

    Parameters
    ----------
    r : int
        Tensor rank (number of exponential terms).
    margin : float
        Relative widening of the spectral interval. ``0`` uses the exact
        (closed-form or converged Lanczos) extreme eigenvalues.
    quad_tol : float
        Target accuracy of the sinc rule; ``quad`` overrides it.
    quad : SincQuadrature, optional
        Fixed sinc rule for every term.
    cs_expm : str
        Cross-section exponential: ``"sinc"`` (Dunford-Cauchy quadrature),
        ``"lanczos"`` (one Krylov basis per right-hand side) or ``"auto"``
        (closed form on an interval cross section, sinc otherwise).
    cache : ExpSumCache, optional
        Store for fitted sums; the process-wide memory cache by default.
    """

    r: int = 5
    margin: float = 0.0
    quad_tol: float = 1e-10
    quad: Optional[SincQuadrature] = None
    cs_expm: str = "auto"
    cache: Optional[ExpSumCache] = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise InvalidArgument(f"r must be a positive integer, got {self.r!r}")
        if not 0 <= self.margin < 1:
            raise InvalidArgument(f"margin must lie in [0, 1), got {self.margin!r}")
        if self.cs_expm not in CS_METHODS:
            raise InvalidArgument(f"cs_expm must be one of {CS_METHODS}")


def spectral_interval(A1: DiscreteOperator, Acs: DiscreteOperator,
                      margin: float = 0.0) -> Tuple[float, float]:
    """``[a, b]`` enclosing the spectrum of the Kronecker sum."""
    l1 = spectral_bounds(A1, margin, tol=1e-10)
    lc = spectral_bounds(Acs, margin, tol=1e-10)
    return l1[0] + lc[0], l1[1] + lc[1]


def exponential_sum_for(A1: DiscreteOperator, Acs: DiscreteOperator,
                        cfg: Method3Config) -> ExponentialSum:
    a, b = spectral_interval(A1, Acs, cfg.margin)
    return fit_expsum_inv_x(cfg.r, a, b, cache=cfg.cache, round_ratio=True)


def _cs_actions(Acs: DiscreteOperator, rates: np.ndarray, F: np.ndarray,
                cfg: Method3Config) -> np.ndarray:
    """``exp(-rate_nu A') F`` stacked as ``(r, n', k)``."""
    method = cfg.cs_expm
    if method == "auto":
        method = "dst" if Acs.is_toeplitz else "sinc"
    if method == "dst":
        return np.stack([expm_action_1d(Acs, a, F) for a in rates])
    if method == "lanczos":
        out = np.stack([expm_actions_lanczos(Acs, rates, F[:, j]) for j in range(F.shape[1])],
                       axis=-1)
        return out
    lmin, lmax = spectral_bounds(Acs, 0.0, tol=1e-10)
    res = []
    for a in rates:
        quad = cfg.quad
        if quad is None and a * lmin <= UNDERFLOW_EXPONENT:
            quad = choose_sinc_order(a * lmin, a * lmax * 1.05, cfg.quad_tol)
        res.append(expm_action_cs(Acs, a, F, quad, lambda_min=lmin))
    return np.stack(res)


def method3_solve_many(fs: Sequence[np.ndarray], grid1: Grid1D, gridcs: CrossSectionGrid,
                       cfg: Method3Config = Method3Config(), *,
                       A1: Optional[DiscreteOperator] = None,
                       Acs: Optional[DiscreteOperator] = None,
                       expsum: Optional[ExponentialSum] = None) -> List[TensorField]:
    """:func:`method3_solve` for several right-hand sides sharing the solves."""
    A1 = assemble_laplacian_1d(grid1) if A1 is None else A1
    Acs = assemble_laplacian_cs(gridcs) if Acs is None else Acs
    F = np.column_stack([np.asarray(f, dtype=float) for f in fs])
    if F.shape[0] != gridcs.n:
        raise InvalidArgument("f does not match the cross-section grid")
    if not np.all(np.isfinite(F)):
        raise InvalidArgument("f has non-finite entries")
    if not np.all(np.any(F != 0, axis=0)):
        raise DegenerateRHS("a right-hand side vanishes identically")
    s = exponential_sum_for(A1, Acs, cfg) if expsum is None else expsum
    ones = np.ones(grid1.n)
    P = [c * expm_action_1d(A1, a, ones) for c, a in zip(s.coef, s.rate)]
    Q = _cs_actions(Acs, s.rate, F, cfg)
    out = []
    for j in range(F.shape[1]):
        terms = tuple(RankOneTerm.build(P[nu], Q[nu, :, j], A1, Acs) for nu in range(s.r))
        out.append(TensorField(grid1, gridcs, terms))
    return out


def method3_solve(f, grid1: Grid1D, gridcs: CrossSectionGrid,
                  cfg: Method3Config = Method3Config(), **kw) -> TensorField:
    """Rank-``r`` approximation of ``A^-1 (1 (x) f)``.

    Raises
    ------
    DegenerateRHS
        If ``f`` vanishes.
    FitFailure, SolverFailure
        Propagated from the exponential-sum fit and the shifted solves.
    """
    return method3_solve_many([f], grid1, gridcs, cfg, **kw)[0]


def method3_error_bound(s: ExponentialSum) -> float:
    """Bound on ``||A^-1 - B||_2``: the measured sum error (identity mass matrices)."""
    return float(s.eps)
