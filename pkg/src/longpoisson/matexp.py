"""Actions ``exp(-alpha A) v`` of matrix exponentials of discrete Laplacians.

On the interval the operator is diagonalised by the orthonormal sine
transform (DST-I is its own inverse). On a general cross section the
exponential is written as a Dunford-Cauchy integral over the parabola
``zeta(s) = s^2 - i s - sigma`` and discretised by sinc quadrature,
one complex shifted solve per node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.fft

from .errors import InvalidArgument, SolverFailure
from .mesh import DiscreteOperator, extreme_eigenvalues, solve_shifted_cs

# exp(-700) is within a few orders of the smallest normal double.
UNDERFLOW_EXPONENT = 700.0


def expm_action_1d(A1: DiscreteOperator, alpha: float, v) -> np.ndarray:
    """``exp(-alpha A1) v`` for ``A1 = h^-2 tridiag[-1, 2, -1]``.

    ``v`` may be a vector or an ``(n, k)`` array.
    """
    if not A1.is_toeplitz:
        raise InvalidArgument("expm_action_1d needs the Toeplitz operator h^-2 tridiag[-1,2,-1]")
    if not alpha >= 0:
        raise InvalidArgument(f"alpha must be non-negative, got {alpha!r}")
    v = np.asarray(v, dtype=float)
    if v.shape[0] != A1.dimension:
        raise InvalidArgument("vector length does not match the operator")
    if alpha == 0:
        return v.copy()
    d = np.exp(-alpha * A1.analytic_eigenvalues())
    d = d.reshape((-1,) + (1,) * (v.ndim - 1))
    c = scipy.fft.dst(v, type=1, axis=0, norm="ortho")
    return scipy.fft.dst(d * c, type=1, axis=0, norm="ortho")


@dataclass(frozen=True)
class SincQuadrature:
    """Sinc rule on the contour ``zeta(s) = s^2 - i s - sigma``.

    Nodes ``s_k = k step`` for ``k = -N..N`` with ``step = c (N+1)^(-2/3)``.
    The shift ``sigma`` moves the parabola's vertex left of the origin so
    that eigenvalues near zero stay well inside the contour.
    """

    N: int = 40
    c: float = math.pi ** (1.0 / 3.0)
    sigma: float = 0.25

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InvalidArgument(f"N must be a positive integer, got {self.N!r}")
        if not self.c > 0:
            raise InvalidArgument(f"step constant must be positive, got {self.c!r}")
        if not self.sigma >= 0:
            raise InvalidArgument(f"contour shift must be non-negative, got {self.sigma!r}")

    @property
    def step(self) -> float:
        return self.c * (self.N + 1) ** (-2.0 / 3.0)

    def half_nodes(self) -> np.ndarray:
        """Nodes ``s_k`` for ``k = 0..N``; the rule is conjugate symmetric."""
        return self.step * np.arange(self.N + 1)

    def weights(self):
        """``(zeta_k, w_k)`` for ``k >= 0`` with ``w_k = step e^{-zeta} zeta' / (2 pi i)``.

        The ``k > 0`` weights are doubled so that the full rule equals
        ``Re sum_k w_k (zeta_k - M)^-1 v`` for real ``M`` and ``v``.
        """
        s = self.half_nodes()
        z = s * s - 1j * s - self.sigma
        w = self.step * np.exp(-z) * (2.0 * s - 1j) / (2j * math.pi)
        w[1:] *= 2.0
        return z, w

    def scalar(self, mu) -> np.ndarray:
        """Quadrature value for ``M = diag(mu)``; approximates ``exp(-mu)``."""
        mu = np.asarray(mu, dtype=float)
        z, w = self.weights()
        return np.real(w @ (1.0 / (z[:, None] - mu.ravel()[None, :]))).reshape(mu.shape)

    def full_sum(self, mu) -> np.ndarray:
        """The rule over ``k = -N..N`` without the symmetry reduction (for checks)."""
        mu = np.asarray(mu, dtype=float).ravel()
        s = self.step * np.arange(-self.N, self.N + 1)
        z = s * s - 1j * s - self.sigma
        w = self.step * np.exp(-z) * (2.0 * s - 1j) / (2j * math.pi)
        return w @ (1.0 / (z[:, None] - mu[None, :]))


def choose_sinc_order(mu_min: float, mu_max: float, tol: float = 1e-10, *,
                      start: int = 12, max_order: int = 768, **kw) -> SincQuadrature:
    """Double ``N`` until two successive rules differ by less than ``0.1 tol``.

    The rule is applied eigenvalue-wise, so the test runs on scalar values
    ``exp(-mu)`` sampled over ``[mu_min, mu_max]`` instead of on the matrix.
    """
    if not 0 <= mu_min <= mu_max:
        raise InvalidArgument("need 0 <= mu_min <= mu_max")
    lo = max(mu_min, 1e-12)
    mu = np.unique(np.r_[mu_min, np.geomspace(lo, max(mu_max, lo), 200), mu_max])
    mu = mu[mu <= UNDERFLOW_EXPONENT]
    prev = SincQuadrature(start, **kw)
    vp = prev.scalar(mu)
    while prev.N < max_order:
        cur = SincQuadrature(2 * prev.N, **kw)
        vc = cur.scalar(mu)
        # The finer rule is far more accurate, so the gap bounds the coarse error.
        if np.max(np.abs(vc - vp)) < 0.1 * tol:
            return prev
        prev, vp = cur, vc
    raise InvalidArgument(f"sinc rule did not reach tolerance {tol:g} by N={max_order}")


def expm_action_cs(Acs: DiscreteOperator, alpha: float, v, quad: Optional[SincQuadrature] = None,
                   *, tol: float = 1e-10, lambda_min: Optional[float] = None) -> np.ndarray:
    """``exp(-alpha A') v`` by sinc quadrature of the Dunford-Cauchy integral.

    Parameters
    ----------
    Acs : DiscreteOperator
        Symmetric positive definite cross-section operator.
    alpha : float
        Non-negative scale.
    v : array_like
        Vector or ``(n', k)`` block; all columns share the factorisations.
    quad : SincQuadrature, optional
        Rule to use; by default chosen by :func:`choose_sinc_order` for
        ``tol`` over the spectrum of ``alpha A'``.
    lambda_min : float, optional
        Lower spectral bound; needed for the underflow guard and the
        default rule, estimated when omitted.

    Returns
    -------
    ndarray
        Real result. When ``alpha lambda_min > 700`` every component is
        below the double-precision floor and zeros are returned.

    Raises
    ------
    SolverFailure
        If a shifted solve fails; the message names the node index.
    """
    if not alpha >= 0:
        raise InvalidArgument(f"alpha must be non-negative, got {alpha!r}")
    v = np.asarray(v, dtype=float)
    if v.shape[0] != Acs.dimension:
        raise InvalidArgument("vector length does not match the operator")
    if alpha == 0:
        return v.copy()
    # Tiny alpha: the shifts zeta/alpha overflow, but two Taylor terms are exact to roundoff.
    if alpha * abs(Acs.matrix).sum(axis=1).max() < 1e-6:
        av = alpha * Acs.apply(v)
        return v - av + 0.5 * alpha * Acs.apply(av)
    if lambda_min is None or quad is None:
        lmin, lmax = extreme_eigenvalues(Acs)
        lambda_min = lmin if lambda_min is None else lambda_min
    if alpha * lambda_min > UNDERFLOW_EXPONENT:
        return np.zeros_like(v)
    if quad is None:
        quad = choose_sinc_order(alpha * lambda_min, alpha * lmax * 1.05, tol)
    z, w = quad.weights()
    out = np.zeros(v.shape)
    for k in range(z.size):
        # (zeta - alpha A')^-1 = (1/alpha) (zeta/alpha - A')^-1
        try:
            x = solve_shifted_cs(Acs, 1.0, z[k] / alpha, v)
        except SolverFailure as exc:
            raise SolverFailure(f"sinc node {k} (zeta={z[k]:.4g}): {exc}") from exc
        out += np.real(w[k] * x) / alpha
    return out


def expm_actions_lanczos(A: DiscreteOperator, alphas: Sequence[float], v, *,
                         tol: float = 1e-12, block: int = 20, max_dim: int = 2000) -> np.ndarray:
    """``exp(-alpha_j A) v`` for many ``alpha_j`` from one Krylov basis.

    Lanczos with full reorthogonalisation builds ``A V = V T``; each action
    is ``||v|| V exp(-alpha_j T) e_1``. The basis grows in blocks of
    ``block`` steps until every coefficient vector changes by less than
    ``tol ||v||`` between blocks (or an invariant subspace is found).

    Returns
    -------
    ndarray
        ``(len(alphas), n)`` array of results.
    """
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas < 0):
        raise InvalidArgument("alphas must be non-negative")
    v = np.asarray(v, dtype=float)
    if v.shape != (A.dimension,):
        raise InvalidArgument("vector length does not match the operator")
    beta0 = float(np.linalg.norm(v))
    if beta0 == 0:
        return np.zeros((alphas.size, v.size))
    nmax = min(max_dim, A.dimension)
    V = np.zeros((nmax, v.size))
    diag, off = [], []
    V[0] = v / beta0
    prev = None
    m = 0
    while True:
        w = A.apply(V[m])
        a = float(V[m] @ w)
        w -= V[: m + 1].T @ (V[: m + 1] @ w)
        w -= V[: m + 1].T @ (V[: m + 1] @ w)
        diag.append(a)
        b = float(np.linalg.norm(w))
        m += 1
        breakdown = b <= 1e-13 * max(abs(a), 1.0) or m == nmax
        if m % block == 0 or breakdown:
            theta, S = np.linalg.eigh(np.diag(diag) + np.diag(off, 1) + np.diag(off, -1))
            coef = (np.exp(-np.outer(alphas, theta)) * S[0]) @ S.T
            if breakdown:
                break
            if prev is not None:
                grown = np.zeros_like(coef)
                grown[:, : prev.shape[1]] = prev
                if np.max(np.abs(coef - grown)) < tol:
                    break
            prev = coef
        if m == nmax:
            break
        off.append(b)
        V[m] = w / b
    if not breakdown and m == nmax and nmax < A.dimension:
        raise SolverFailure(f"Lanczos exponential did not converge within {nmax} steps")
    return beta0 * coef @ V[:m]
