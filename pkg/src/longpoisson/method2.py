"""Greedy rank-one enrichment by alternating least squares.

Starting from the one-term approximation, each outer step appends a term
``p (x) q`` obtained by alternating the two strong-form updates: a shifted
Laplace solve on the cross section for ``q`` and one on the interval for
``p``. All couplings to earlier terms go through the cached ``A1 p_j`` and
``A' q_j`` vectors, so the full residual is never formed.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import DegenerateIterate, InvalidArgument
from .mesh import (CrossSectionGrid, DiscreteOperator, Grid1D, assemble_laplacian_1d,
                   assemble_laplacian_cs, solve_shifted_spd)
from .method1 import psi_profile, solve_reduced
from .tensor import (Field, RankOneTerm, TensorField, _lowrank_fro, h1_seminorm_error,
                     rel_l2_error)

INIT_STRATEGIES = ("previous", "psi", "ones")


@dataclass(frozen=True)
class AlsOptions:
    """Stopping rules and initialisation for :func:`als_solve`.

    Parameters
    ----------
    m_max : int
        Rank of the returned field (``1`` gives the one-term approximation).
    inner_max : int
        Cap on q/p sweeps per outer step.
    inner_tol : float
        Stop the sweeps once the weighted L2 change of ``p (x) q`` relative
        to its norm drops below this value.
    outer_tol : float, optional
        Stop enriching once the relative residual ``||F - A u|| / ||F||``
        (weighted L2) falls below this value.
    init_strategy : str
        Initial p-iterate of each outer step: ``"previous"`` (the last
        appended p), ``"psi"`` (the one-term profile) or ``"ones"``.
    """

    m_max: int = 7
    inner_max: int = 20
    inner_tol: float = 1e-8
    outer_tol: Optional[float] = None
    init_strategy: str = "previous"

    def __post_init__(self):
        if int(self.m_max) != self.m_max or self.m_max < 1:
            raise InvalidArgument(f"m_max must be a positive integer, got {self.m_max!r}")
        if int(self.inner_max) != self.inner_max or self.inner_max < 1:
            raise InvalidArgument(f"inner_max must be a positive integer, got {self.inner_max!r}")
        if not self.inner_tol > 0:
            raise InvalidArgument(f"inner_tol must be positive, got {self.inner_tol!r}")
        if self.outer_tol is not None and not self.outer_tol > 0:
            raise InvalidArgument(f"outer_tol must be positive, got {self.outer_tol!r}")
        if self.init_strategy not in INIT_STRATEGIES:
            raise InvalidArgument(f"init_strategy must be one of {INIT_STRATEGIES}")


@dataclass(frozen=True)
class AlsStep:
    """Record of one outer step; ``m`` is the rank after the step."""

    m: int
    inner_iters: int
    p0: float
    p1: float
    q0: float
    q1: float
    change: float = math.nan
    rel_error: float = math.nan
    h1_error: float = math.nan
    residual: float = math.nan
    elapsed: float = math.nan


@dataclass
class AlsHistory:
    steps: List[AlsStep] = field(default_factory=list)
    status: str = "ok"

    @property
    def rel_errors(self) -> np.ndarray:
        return np.array([s.rel_error for s in self.steps])

    @property
    def elapsed(self) -> np.ndarray:
        """Seconds from the start of the solve to the end of each step (error checks excluded)."""
        return np.array([s.elapsed for s in self.steps])

    @property
    def h1_errors(self) -> np.ndarray:
        return np.array([s.h1_error for s in self.steps])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "inner_iters", "rel_error"])
            for s in self.steps:
                w.writerow([s.m, s.inner_iters, repr(s.rel_error)])


@dataclass(frozen=True, eq=False)
class AlsProblem:
    """Grids, operators and data shared by every update of one solve."""

    f: np.ndarray
    grid1: Grid1D
    gridcs: CrossSectionGrid
    A1: DiscreteOperator
    Acs: DiscreteOperator

    @classmethod
    def build(cls, f, grid1: Grid1D, gridcs: CrossSectionGrid,
              A1: Optional[DiscreteOperator] = None,
              Acs: Optional[DiscreteOperator] = None) -> "AlsProblem":
        f = np.asarray(f, dtype=float)
        if f.shape != (gridcs.n,):
            raise InvalidArgument("f does not match the cross-section grid")
        return cls(f, grid1, gridcs,
                   assemble_laplacian_1d(grid1) if A1 is None else A1,
                   assemble_laplacian_cs(gridcs) if Acs is None else Acs)


def _history_matrices(terms: TensorField):
    if not terms.terms:
        return None
    P = np.column_stack([t.p for t in terms.terms])
    Q = np.column_stack([t.q for t in terms.terms])
    AP = np.column_stack([t.Ap for t in terms.terms])
    AQ = np.column_stack([t.Aq for t in terms.terms])
    return P, Q, AP, AQ


def inner_update_q(terms: TensorField, p: RankOneTerm, prob: AlsProblem) -> RankOneTerm:
    """Cross-section update: the best ``q`` for the given ``p``.

    ``p`` is passed as a term whose ``p``/``Ap`` fields are used; the
    returned term carries the new ``q`` with its cached ``A' q``.

    Raises
    ------
    DegenerateIterate
        If ``p`` vanishes.
    """
    pv, Ap = p.p, p.Ap if p.Ap is not None else prob.A1.apply(p.p)
    h = prob.grid1.h
    p0 = h * float(pv @ pv)
    if p0 == 0.0:
        raise DegenerateIterate("p iterate vanished")
    p1 = h * float(Ap @ pv)
    rhs = h * pv.sum() * prob.f
    hist = _history_matrices(terms)
    if hist is not None:
        P, Q, AP, AQ = hist
        rhs = rhs - Q @ (h * (AP.T @ pv)) - AQ @ (h * (P.T @ pv))
    q = solve_shifted_spd(prob.Acs, p0, p1, rhs)
    return RankOneTerm(pv, q, Ap, prob.Acs.apply(q))


def inner_update_p(terms: TensorField, q: RankOneTerm, prob: AlsProblem) -> RankOneTerm:
    """Interval update: the best ``p`` for the given ``q``.

    Raises
    ------
    DegenerateIterate
        If ``q`` vanishes.
    """
    qv, Aq = q.q, q.Aq if q.Aq is not None else prob.Acs.apply(q.q)
    w = prob.gridcs.weight
    q0 = w * float(qv @ qv)
    if q0 == 0.0:
        raise DegenerateIterate("q iterate vanished")
    q1 = w * float(Aq @ qv)
    rhs = np.full(prob.grid1.n, w * float(prob.f @ qv))
    hist = _history_matrices(terms)
    if hist is not None:
        P, Q, AP, AQ = hist
        rhs = rhs - P @ (w * (AQ.T @ qv)) - AP @ (w * (Q.T @ qv))
    p = solve_shifted_spd(prob.A1, q0, q1, rhs)
    return RankOneTerm(p, qv, prob.A1.apply(p), Aq)


def relative_residual(u: TensorField, prob: AlsProblem) -> float:
    """``||1 (x) f - A u|| / ||1 (x) f||`` in weighted L2, kept in factored form."""
    ones = np.ones(prob.grid1.n)
    P = [ones] + [-t.Ap for t in u.terms] + [-t.p for t in u.terms]
    Q = [prob.f] + [t.q for t in u.terms] + [t.Aq for t in u.terms]
    num = _lowrank_fro(np.column_stack(P), np.column_stack(Q))
    return num / (math.sqrt(prob.grid1.n) * float(np.linalg.norm(prob.f)))


def _term_change(new: RankOneTerm, old: Optional[RankOneTerm]) -> float:
    if old is None:
        return math.inf
    num = _lowrank_fro(np.column_stack([new.p, -old.p]), np.column_stack([new.q, old.q]))
    den = float(np.linalg.norm(new.p) * np.linalg.norm(new.q))
    return num / den if den > 0 else math.inf


def _record(m, inner, term, prob, u, reference, clock, change=math.nan) -> AlsStep:
    # clock[0] is shifted past the diagnostics so elapsed covers solver work only.
    start = time.perf_counter()
    elapsed = start - clock[0]
    h, w = prob.grid1.h, prob.gridcs.weight
    rel = h1 = math.nan
    if reference is not None:
        rel = rel_l2_error(u, reference)
        h1 = h1_seminorm_error(u, reference)
    step = AlsStep(m, inner,
                   h * float(term.p @ term.p), h * float(term.Ap @ term.p),
                   w * float(term.q @ term.q), w * float(term.Aq @ term.q),
                   change, rel, h1, relative_residual(u, prob), elapsed)
    clock[0] += time.perf_counter() - start
    return step


def als_solve(f, grid1: Grid1D, gridcs: CrossSectionGrid, opts: AlsOptions = AlsOptions(),
              reference: Optional[Field] = None, *,
              A1: Optional[DiscreteOperator] = None,
              Acs: Optional[DiscreteOperator] = None) -> Tuple[TensorField, AlsHistory]:
    """Rank-``m_max`` approximation of ``-Lap u = 1 (x) f`` on the long domain.

    The first term is the one-term profile times the reduced solution.
    Each later term runs q-then-p sweeps from the configured initial p.

    Returns
    -------
    (TensorField, AlsHistory)
        If an iterate degenerates, the field built so far is returned and
        ``history.status`` is ``"degenerate"``; if ``outer_tol`` fires it is
        ``"converged"``.
    """
    clock = [time.perf_counter()]
    prob = AlsProblem.build(f, grid1, gridcs, A1, Acs)
    red = solve_reduced(prob.f, gridcs, prob.Acs)
    psi = psi_profile(red.lambda_inf, grid1)
    first = RankOneTerm.build(psi, red.u_inf, prob.A1, prob.Acs)
    u = TensorField(grid1, gridcs, (first,))
    history = AlsHistory()
    history.steps.append(_record(1, 0, first, prob, u, reference, clock))

    for m in range(2, opts.m_max + 1):
        if opts.outer_tol is not None and history.steps[-1].residual < opts.outer_tol:
            history.status = "converged"
            break
        if opts.init_strategy == "previous":
            start = u.terms[-1].p
        elif opts.init_strategy == "psi":
            start = psi
        else:
            start = np.ones(grid1.n)
        cur = RankOneTerm(start, np.zeros(gridcs.n), prob.A1.apply(start), None)
        old, change, it = None, math.nan, 0
        try:
            for it in range(1, opts.inner_max + 1):
                cur = inner_update_q(u, cur, prob)
                cur = inner_update_p(u, cur, prob)
                change = _term_change(cur, old)
                if change < opts.inner_tol:
                    break
                old = cur
            if not np.any(cur.p):
                raise DegenerateIterate("p iterate vanished")
        except DegenerateIterate:
            history.status = "degenerate"
            break
        u = u.with_term(cur)
        history.steps.append(_record(m, it, cur, prob, u, reference, clock, change))
    return u, history
