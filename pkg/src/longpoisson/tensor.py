"""Rank-structured fields ``sum_j p_j (x) q_j`` and discrete error norms.

All L2 pairings use node weights: ``h`` on the interval, ``h'**dim`` on the
cross section. Discrete Laplacians of the factors are cached per term so
that the ALS couplings never differentiate iterates numerically.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateReference, InvalidArgument
from .mesh import CrossSectionGrid, DiscreteOperator, Grid1D, INTERVAL


@dataclass(frozen=True, eq=False)
class RankOneTerm:
    """Elementary tensor ``p (x) q`` with cached ``A1 p`` and ``A' q``."""

    p: np.ndarray
    q: np.ndarray
    Ap: Optional[np.ndarray] = None
    Aq: Optional[np.ndarray] = None

    @classmethod
    def build(cls, p, q, A1: Optional[DiscreteOperator] = None,
              Acs: Optional[DiscreteOperator] = None) -> "RankOneTerm":
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        return cls(p, q,
                   None if A1 is None else A1.apply(p),
                   None if Acs is None else Acs.apply(q))

    def scaled(self, c: float) -> "RankOneTerm":
        return RankOneTerm(c * self.p, self.q,
                           None if self.Ap is None else c * self.Ap, self.Aq)


@dataclass(frozen=True, eq=False)
class TensorField:
    grid1: Grid1D
    gridcs: CrossSectionGrid
    terms: Tuple[RankOneTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if t.p.shape != (self.grid1.n,) or t.q.shape != (self.gridcs.n,):
                raise InvalidArgument("term factor lengths do not match the grids")

    @property
    def rank(self) -> int:
        return len(self.terms)

    def with_term(self, term: RankOneTerm) -> "TensorField":
        return TensorField(self.grid1, self.gridcs, self.terms + (term,))

    def truncated(self, rank: int) -> "TensorField":
        return TensorField(self.grid1, self.gridcs, self.terms[:rank])

    def factors(self) -> Tuple[np.ndarray, np.ndarray]:
        """``(P, Q)`` with the factors as columns; the field is ``P @ Q.T``."""
        if not self.terms:
            return np.zeros((self.grid1.n, 0)), np.zeros((self.gridcs.n, 0))
        return (np.column_stack([t.p for t in self.terms]),
                np.column_stack([t.q for t in self.terms]))

    def concat(self, other: "TensorField", sign: float = 1.0) -> "TensorField":
        _check_same_grids(self, other)
        return TensorField(self.grid1, self.gridcs,
                           self.terms + tuple(t.scaled(sign) for t in other.terms))


@dataclass(frozen=True, eq=False)
class FullGridField:
    """Nodal values ``values[i, k]`` at ``(x1_i, x'_k)``."""

    grid1: Grid1D
    gridcs: CrossSectionGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid1.n, self.gridcs.n):
            raise InvalidArgument("values shape does not match the grids")


Field = Union[TensorField, FullGridField]


def evaluate_full(tf: TensorField) -> FullGridField:
    P, Q = tf.factors()
    return FullGridField(tf.grid1, tf.gridcs, P @ Q.T)


def l2_inner_1d(u, v, grid: Grid1D) -> float:
    u, v = np.asarray(u), np.asarray(v)
    if u.shape != (grid.n,) or v.shape != (grid.n,):
        raise InvalidArgument("vector lengths do not match the interval grid")
    return float(grid.h * (u @ v))


def l2_inner_cs(u, v, grid: CrossSectionGrid) -> float:
    u, v = np.asarray(u), np.asarray(v)
    if u.shape != (grid.n,) or v.shape != (grid.n,):
        raise InvalidArgument("vector lengths do not match the cross-section grid")
    return float(grid.weight * (u @ v))


# -- discrete gradients ----------------------------------------------------


def gradient_1d(grid: Grid1D) -> sp.csr_matrix:
    """Forward differences on ``n+1`` cells, including both boundary cells."""
    n = grid.n
    return sp.diags([np.ones(n), -np.ones(n)], [0, -1], shape=(n + 1, n),
                    format="csr") / grid.h


def gradient_cs(grid: CrossSectionGrid) -> sp.csr_matrix:
    """Forward differences over every lattice edge that touches an interior node."""
    if grid.shape == INTERVAL:
        n = grid.n
        return sp.diags([np.ones(n), -np.ones(n)], [0, -1], shape=(n + 1, n),
                        format="csr") / grid.hprime
    idx = np.pad(grid.lattice_index, 1, constant_values=-1)
    rows, cols, vals = [], [], []
    edge = 0
    for axis in (0, 1):
        a = idx
        b = np.roll(idx, -1, axis=axis)
        sel = (a >= 0) | (b >= 0)
        if axis == 0:
            sel[-1, :] = False
        else:
            sel[:, -1] = False
        ea, eb = a[sel], b[sel]
        e = edge + np.arange(ea.size)
        edge += ea.size
        for node, sign in ((eb, 1.0), (ea, -1.0)):
            ok = node >= 0
            rows.append(e[ok])
            cols.append(node[ok])
            vals.append(np.full(ok.sum(), sign))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(edge, grid.n)) / grid.hprime


# -- norms -----------------------------------------------------------------


def _lowrank_fro(P: np.ndarray, Q: np.ndarray) -> float:
    """``||P @ Q.T||_F`` without forming the product."""
    if P.shape[1] == 0:
        return 0.0
    if P.shape[1] >= min(P.shape[0], Q.shape[0]):
        return float(np.linalg.norm(P @ Q.T))
    rp = np.linalg.qr(P, mode="r")
    rq = np.linalg.qr(Q, mode="r")
    return float(np.linalg.norm(rp @ rq.T))


def _check_same_grids(a: Field, b: Field):
    if (a.grid1 != b.grid1 or a.gridcs.shape != b.gridcs.shape
            or a.gridcs.hprime != b.gridcs.hprime):
        raise InvalidArgument("fields live on different grids")


def _difference(a: Field, b: Field) -> Field:
    _check_same_grids(a, b)
    if isinstance(a, TensorField) and isinstance(b, TensorField):
        return a.concat(b, sign=-1.0)
    va = evaluate_full(a).values if isinstance(a, TensorField) else a.values
    vb = evaluate_full(b).values if isinstance(b, TensorField) else b.values
    return FullGridField(a.grid1, a.gridcs, va - vb)


def l2_norm(u: Field, window: Optional[float] = None) -> float:
    """Weighted L2 norm, optionally restricted to ``|x1| <= window``."""
    rows = slice(None) if window is None else u.grid1.window_mask(window)
    w = np.sqrt(u.grid1.h * u.gridcs.weight)
    if isinstance(u, TensorField):
        P, Q = u.factors()
        return w * _lowrank_fro(P[rows], Q)
    return w * float(np.linalg.norm(u.values[rows]))


def rel_l2_error(approx: Field, ref: Field, window: Optional[float] = None) -> float:
    """``||approx - ref|| / ||ref||`` in weighted L2, on ``|x1| <= window`` if given."""
    if window is not None and not 0 < window <= ref.grid1.ell * (1 + 1e-12):
        raise InvalidArgument(f"window must lie in (0, ell], got {window!r}")
    denom = l2_norm(ref, window)
    if denom == 0.0:
        raise DegenerateReference("reference field has zero norm")
    return l2_norm(_difference(approx, ref), window) / denom


def h1_seminorm(u: Field, window: Optional[float] = None) -> float:
    """``||grad u||`` with forward differences to the zero boundary values.

    With ``window`` the x1-differences are restricted to cells whose midpoint
    satisfies ``|x1| <= window`` and the cross-section differences to nodes
    in the same range.
    """
    g1, gc = gradient_1d(u.grid1), gradient_cs(u.gridcs)
    rows = slice(None)
    if window is not None:
        mid = -u.grid1.ell + u.grid1.h * (np.arange(u.grid1.n + 1) + 0.5)
        g1 = g1[np.abs(mid) <= window * (1 + 1e-12)]
        rows = u.grid1.window_mask(window)
    w = np.sqrt(u.grid1.h * u.gridcs.weight)
    if isinstance(u, TensorField):
        P, Q = u.factors()
        e1 = _lowrank_fro(g1 @ P, Q)
        e2 = _lowrank_fro(P[rows], gc @ Q)
    else:
        e1 = float(np.linalg.norm(g1 @ u.values))
        e2 = float(np.linalg.norm(gc @ u.values[rows].T))
    return w * float(np.hypot(e1, e2))


def h1_seminorm_error(approx: Field, ref: Field, window: Optional[float] = None) -> float:
    return h1_seminorm(_difference(approx, ref), window)


# -- CSV export ------------------------------------------------------------


def write_field_csv(u: Field, path) -> None:
    """Write one row per node: ``x1, x2[, x3], value``."""
    full = evaluate_full(u) if isinstance(u, TensorField) else u
    x1 = u.grid1.nodes
    cs = u.gridcs.coords
    names = ["x1"] + [f"x{k + 2}" for k in range(cs.shape[1])] + ["value"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(x1.size):
            for k in range(cs.shape[0]):
                w.writerow([repr(float(x1[i]))] + [repr(float(c)) for c in cs[k]]
                           + [repr(float(full.values[i, k]))])


def read_field_csv(path, grid1: Grid1D, gridcs: CrossSectionGrid) -> FullGridField:
    """Inverse of :func:`write_field_csv` for fields on known grids."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid1.n * gridcs.n:
        raise InvalidArgument("CSV row count does not match the grids")
    return FullGridField(grid1, gridcs, data[:, -1].reshape(grid1.n, gridcs.n))
