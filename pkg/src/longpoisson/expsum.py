"""Near-best exponential sums ``1/x ~ sum_nu a_nu exp(-alpha_nu x)`` on ``[a, b]``.

Sums are fitted on the normalised interval ``[1, R]`` with ``R = b/a`` and
mapped to ``[a, b]`` by the scaling law ``a_nu -> a_nu/a``,
``alpha_nu -> alpha_nu/a`` (the error scales by ``1/a``). The fitter is a
Remez-type exchange on the ``2r+1`` alternation points, in log-coordinates
so that positivity of the coefficients is automatic, continued in ``r``
from the previous sum. A least-squares fit serves as fallback when the
exchange breaks down.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import least_squares, linprog, minimize_scalar

from .errors import FitFailure, InvalidArgument

log = logging.getLogger(__name__)

R_MAX_TERMS = 40
# Below this normalised error the fit is at the double-precision floor.
_ROUNDOFF_FLOOR = 1e-12
EQUIOSCILLATION = "equioscillation"
LEAST_SQUARES = "least-squares"
EXACT = "exact"


@dataclass(frozen=True, eq=False)
class ExponentialSum:
    """Exponential sum with positive coefficients on ``[a, b]``.

    Attributes
    ----------
    coef, rate : ndarray
        ``a_nu`` and ``alpha_nu``, both positive, rates strictly increasing.
    interval : tuple of float
        ``(a, b)`` on which ``eps`` was measured.
    eps : float
        Maximum of ``|1/x - sum|`` over a dense log-spaced grid.
    flag : str
        How the sum was obtained: ``"equioscillation"`` (exchange converged),
        ``"least-squares"`` (fallback) or ``"exact"`` (``a == b``).
    """

    coef: np.ndarray
    rate: np.ndarray
    interval: Tuple[float, float]
    eps: float
    flag: str = EQUIOSCILLATION

    def __post_init__(self):
        coef = np.asarray(self.coef, dtype=float)
        rate = np.asarray(self.rate, dtype=float)
        if coef.shape != rate.shape or coef.ndim != 1 or coef.size < 1:
            raise InvalidArgument("coefficients and rates must be matching 1-D arrays")
        if not (np.all(coef > 0) and np.all(rate > 0)):
            raise InvalidArgument("exponential-sum coefficients must be positive")
        order = np.argsort(rate)
        object.__setattr__(self, "coef", coef[order])
        object.__setattr__(self, "rate", rate[order])
        object.__setattr__(self, "interval", (float(self.interval[0]), float(self.interval[1])))

    @property
    def r(self) -> int:
        return self.coef.size

    def __call__(self, x):
        return eval_expsum(self, x)

    def rescaled(self, c: float) -> "ExponentialSum":
        """The sum for ``[c a, c b]`` obtained from the scaling law."""
        if not c > 0:
            raise InvalidArgument(f"scale must be positive, got {c!r}")
        a, b = self.interval
        return ExponentialSum(self.coef / c, self.rate / c, (a * c, b * c), self.eps / c,
                              self.flag)


def eval_expsum(s: ExponentialSum, x):
    """Value of the sum at ``x > 0`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-np.multiply.outer(x, s.rate)) @ s.coef
    return float(out) if out.ndim == 0 else out


def measurement_grid(a: float, b: float, points: int = 20000) -> np.ndarray:
    """Log-spaced grid on ``[a, b]`` used for ``eps``."""
    if b == a:
        return np.array([a])
    return np.exp(np.linspace(math.log(a), math.log(b), points))


def measure_eps(s: ExponentialSum, points: int = 20000) -> float:
    x = measurement_grid(*s.interval, points)
    return float(np.max(np.abs(1.0 / x - eval_expsum(s, x))))


# -- normalised fitting on [1, R] -------------------------------------------


@np.errstate(over="ignore", invalid="ignore")
def _err(z: np.ndarray, x: np.ndarray) -> np.ndarray:
    r = z.size // 2
    return 1.0 / x - np.exp(-np.outer(x, np.exp(z[r:2 * r]))) @ np.exp(z[:r])


@np.errstate(over="ignore", invalid="ignore")
def _jac(z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Jacobian of ``_err`` with respect to ``(log a, log alpha)``."""
    r = z.size // 2
    a, al = np.exp(z[:r]), np.exp(z[r:2 * r])
    E = np.exp(-np.outer(x, al)) * a
    return np.hstack([-E, E * np.outer(x, al)])


def _grid(R: float, r: int) -> np.ndarray:
    return np.exp(np.linspace(0.0, math.log(R), max(4000, 400 * r)))


def _alternation(z: np.ndarray, t: np.ndarray, r: int):
    """Points of extreme error per sign segment, refined by parabolic fits in log x."""
    e = _err(z, np.exp(t))
    sign = np.sign(e)
    cuts = np.flatnonzero(sign[1:] != sign[:-1]) + 1
    bounds = np.r_[0, cuts, t.size]
    idx = np.array([lo + int(np.argmax(np.abs(e[lo:hi]))) for lo, hi in zip(bounds[:-1], bounds[1:])])
    pts = t[idx].copy()
    inner = (idx > 0) & (idx < t.size - 1)
    if np.any(inner):
        i = idx[inner]
        y0, y1, y2 = np.abs(e[i - 1]), np.abs(e[i]), np.abs(e[i + 1])
        den = y0 - 2.0 * y1 + y2
        dt = t[1] - t[0]
        shift = np.where(den < 0, 0.5 * (y0 - y2) / np.where(den < 0, den, -1.0), 0.0)
        pts[inner] = t[i] + np.clip(shift, -1.0, 1.0) * dt
    return np.exp(pts), e, float(np.max(np.abs(e)))


def _remez(z: np.ndarray, R: float, maxit: int = 80, tol: float = 1e-4):
    """Exchange iteration; returns ``(z, emax, converged)``."""
    r = z.size // 2
    t = np.log(_grid(R, r))
    emax = math.inf
    for _ in range(maxit):
        if not np.all(np.isfinite(z)):
            return z, math.inf, False
        pts, e, emax = _alternation(z, t, r)
        if not math.isfinite(emax):
            return z, emax, False
        if pts.size < 2 * r + 1:
            return z, emax, False
        ep = _err(z, pts)
        while pts.size > 2 * r + 1:
            if abs(ep[0]) < abs(ep[-1]):
                pts, ep = pts[1:], ep[1:]
            else:
                pts, ep = pts[:-1], ep[:-1]
        emin = float(np.min(np.abs(ep)))
        if (emax - emin) < tol * emax:
            return z, emax, True
        sig = np.sign(ep[0]) * (-1.0) ** np.arange(2 * r + 1)
        w = np.r_[z, np.mean(np.abs(ep))]
        for _newton in range(8):
            F = _err(w[:-1], pts) - sig * w[-1]
            J = np.hstack([_jac(w[:-1], pts), -sig[:, None]])
            try:
                step = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                return z, emax, False
            w = w + step
            if np.max(np.abs(step[:-1])) < 1e-10:
                break
        cand = w[:-1]
        damp = 1.0
        x = np.exp(t)
        for _ls in range(30):
            zz = z + damp * (cand - z)
            ee = float(np.max(np.abs(_err(zz, x))))
            if np.isfinite(ee) and ee < emax * (1.0 + 1e-9):
                break
            damp *= 0.5
        else:
            return z, emax, False
        z = zz
    _, _, emax = _alternation(z, t, r)
    return z, emax, False


def _least_squares(z: np.ndarray, R: float, nfev: int, weights=None) -> np.ndarray:
    r = z.size // 2
    x = np.exp(np.linspace(0.0, math.log(R), 40 * r))
    w = np.ones_like(x) if weights is None else weights
    try:
        sol = least_squares(lambda v: w * _err(v, x), z, jac=lambda v: w[:, None] * _jac(v, x),
                            method="lm", xtol=1e-10, ftol=1e-12, max_nfev=nfev)
    except ValueError:  # non-finite residuals at the start point
        return z
    return sol.x


def _lawson(z: np.ndarray, R: float, rounds: int = 6):
    """Least squares with weights pushed toward the largest errors (Lawson's scheme)."""
    r = z.size // 2
    x = np.exp(np.linspace(0.0, math.log(R), 40 * r))
    w = np.ones_like(x)
    for _ in range(rounds):
        z = _least_squares(z, R, 60, w)
        e = np.abs(_err(z, x))
        w = np.maximum(w * np.sqrt(e / e.max()), 1e-8)
        w /= w.max()
        yield z


def _best_coef_for_rate(alpha: float, x: np.ndarray) -> Tuple[float, float]:
    """Chebyshev-optimal ``a`` for fixed ``alpha`` (a two-variable LP)."""
    g = np.exp(-alpha * x)
    A = np.block([[-g[:, None], -np.ones((x.size, 1))], [g[:, None], -np.ones((x.size, 1))]])
    rhs = np.r_[-1.0 / x, 1.0 / x]
    res = linprog([0.0, 1.0], A_ub=A, b_ub=rhs, bounds=[(1e-300, None), (0, None)],
                  method="highs")
    return float(res.x[0]), float(res.x[1])


def _initial_r1(R: float) -> np.ndarray:
    x = _grid(R, 1)[::4]
    obj = lambda la: _best_coef_for_rate(math.exp(la), x)[1]
    lo, hi = math.log(1e-2 / R), math.log(10.0)
    coarse = np.linspace(lo, hi, 41)
    vals = [obj(v) for v in coarse]
    k = int(np.argmin(vals))
    res = minimize_scalar(obj, bounds=(coarse[max(k - 1, 0)], coarse[min(k + 1, 40)]),
                          method="bounded", options={"xatol": 1e-10})
    a, _ = _best_coef_for_rate(math.exp(res.x), x)
    return np.array([math.log(a), res.x])


def _grow(z: np.ndarray) -> np.ndarray:
    """Initial guess with one more term by spline interpolation of the log-parameters."""
    r = z.size // 2
    la, lal = z[:r], z[r:]
    if r == 1:
        return np.r_[la[0] - 1.5, la[0] + 0.3, lal[0] - 1.5, lal[0] + 0.8]
    u = (np.arange(r) + 0.5) / r
    v = (np.arange(r + 1) + 0.5) / (r + 1)
    ca = CubicSpline(u, la, bc_type="natural")
    cl = CubicSpline(u, lal, bc_type="natural")
    return np.r_[ca(v) - math.log((r + 1) / r), cl(v)]


def _perturbed(z: np.ndarray, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return z + 0.05 * rng.standard_normal(z.size)


def _fit_next(z0: np.ndarray, R: float, restarts: int) -> Tuple[np.ndarray, float, str]:
    """Fit ``r`` terms from the grown guess ``z0``, escalating the warm start."""
    best = (z0, math.inf, LEAST_SQUARES)

    def attempt(z):
        nonlocal best
        z, e, ok = _remez(z, R)
        if ok:
            return z, e, EQUIOSCILLATION
        if e < best[1]:
            best = (z, e, LEAST_SQUARES)
        return None

    starts = [lambda: z0]
    starts += [lambda n=n: _least_squares(z0, R, n) for n in (30, 100, 300)]
    for make in starts:
        hit = attempt(make())
        if hit:
            return hit
    if best[1] <= _ROUNDOFF_FLOOR:
        # Levelling noise-dominated errors is hopeless; keep the warm start.
        return best
    for z in _lawson(best[0], R):
        hit = attempt(z)
        if hit:
            return hit
    for k in range(1, restarts + 1):
        hit = attempt(_least_squares(_perturbed(best[0], k), R, 100))
        if hit:
            return hit
    return best


def _normalised_sequence(R: float, r_max: int, restarts: int = 5,
                         start: Optional[List[np.ndarray]] = None) -> List[Tuple[np.ndarray, float, str]]:
    out = list(start or [])
    if not out:
        z = _initial_r1(R)
        z, e, ok = _remez(z, R)
        out.append((z, e, EQUIOSCILLATION if ok else LEAST_SQUARES))
    while len(out) < r_max:
        z_prev, e_prev, _ = out[-1]
        z, e, flag = _fit_next(_grow(z_prev), R, restarts)
        saturated = e <= _ROUNDOFF_FLOOR and e_prev <= _ROUNDOFF_FLOOR
        if not np.all(np.isfinite(z)) or not (e < e_prev or saturated):
            s = _from_log(z, R, e, flag) if np.all(np.isfinite(z)) else None
            raise FitFailure(f"no improvement for r={len(out) + 1} on [1, {R:g}]", best=s)
        if flag != EQUIOSCILLATION:
            log.info("exchange did not converge for r=%d on [1, %g]; eps=%.3e", len(out) + 1, R, e)
        out.append((z, e, flag))
    return out


def _from_log(z: np.ndarray, R: float, eps: float, flag: str) -> ExponentialSum:
    r = z.size // 2
    return ExponentialSum(np.exp(z[:r]), np.exp(z[r:]), (1.0, R), eps, flag)


# -- cache and public fit -----------------------------------------------------


def round_up_sig(x: float, digits: int = 3) -> float:
    """Round ``x > 0`` up to ``digits`` significant digits.

    >>> round_up_sig(12341.0)
    12400.0
    """
    e = math.floor(math.log10(x)) - digits + 1
    m = x / 10.0**e
    mr = math.floor(m + 1e-9)
    if m - mr > 1e-9:
        mr += 1
    return float(mr * 10.0**e) if e >= 0 else float(mr / 10.0**(-e))


class ExpSumCache:
    """Normalised sums keyed by ``(r, R)``, in memory and optionally on disk."""

    def __init__(self, directory: Optional[os.PathLike] = None):
        self.directory = None if directory is None else Path(directory)
        self._mem: Dict[float, List[Tuple[np.ndarray, float, str]]] = {}

    def _path(self, R: float, r: int) -> Path:
        return self.directory / f"expsum_R{R:.3e}_r{r:02d}.csv"

    def _load_disk(self, R: float) -> List[Tuple[np.ndarray, float, str]]:
        seq = []
        if self.directory is None:
            return seq
        while True:
            p = self._path(R, len(seq) + 1)
            if not p.exists():
                return seq
            s = read_expsum_csv(p)
            seq.append((np.r_[np.log(s.coef), np.log(s.rate)], s.eps, s.flag))

    def sequence(self, R: float, r: int, restarts: int = 5):
        seq = self._mem.get(R)
        if seq is None or len(seq) < r:
            disk = self._load_disk(R)
            if seq is None or len(disk) > len(seq):
                seq = disk
        if len(seq) < r:
            have = len(seq)
            seq = _normalised_sequence(R, r, restarts, seq)
            if self.directory is not None:
                self.directory.mkdir(parents=True, exist_ok=True)
                for k in range(have, r):
                    write_expsum_csv(_from_log(seq[k][0], R, seq[k][1], seq[k][2]),
                                     self._path(R, k + 1))
        self._mem[R] = seq
        return seq[:r]


_DEFAULT_CACHE = ExpSumCache()


def fit_expsum_inv_x(r: int, a: float, b: float, *, cache: Optional[ExpSumCache] = None,
                     restarts: int = 5, round_ratio: bool = False) -> ExponentialSum:
    """Near-best sum with ``r`` terms for ``1/x`` on ``[a, b]``.

    Parameters
    ----------
    r : int
        Number of terms, ``1 <= r <= 40``.
    a, b : float
        Interval bounds, ``0 < a <= b``.
    cache : ExpSumCache, optional
        Store for normalised sums; a process-wide in-memory cache by default.
    restarts : int
        Perturbed least-squares restarts tried when the exchange fails.
    round_ratio : bool
        Fit on ``[1, R']`` with ``R' >= b/a`` rounded up to three
        significant digits, so that nearby intervals share one fit. The
        returned sum covers ``[a, a R']``, which contains ``[a, b]``.

    Raises
    ------
    FitFailure
        If adding a term fails to reduce the error; ``best`` holds the
        best sum found.
    """
    if int(r) != r or not 1 <= r <= R_MAX_TERMS:
        raise InvalidArgument(f"r must be an integer in [1, {R_MAX_TERMS}], got {r!r}")
    if not (0 < a <= b and math.isfinite(b)):
        raise InvalidArgument(f"need 0 < a <= b, got a={a!r}, b={b!r}")
    if b == a:
        # Interpolate at the single point; the rate is arbitrary.
        rate = np.arange(1, r + 1) / a
        coef = np.exp(rate * a) / (a * r)
        s = ExponentialSum(coef, rate, (a, b), 0.0, EXACT)
        return ExponentialSum(s.coef, s.rate, (a, b), abs(1.0 / a - eval_expsum(s, a)), EXACT)
    R = b / a
    if round_ratio:
        R = round_up_sig(R)
    cache = _DEFAULT_CACHE if cache is None else cache
    z, _, flag = cache.sequence(R, int(r), restarts)[-1]
    s = ExponentialSum(np.exp(z[:r]), np.exp(z[r:]), (1.0, R), 0.0, flag)
    s = ExponentialSum(s.coef, s.rate, (1.0, R), measure_eps(s), flag)
    return s.rescaled(a)


# -- CSV -------------------------------------------------------------------


def write_expsum_csv(s: ExponentialSum, path) -> None:
    """Header ``r, a, b, eps, flag`` on ``#`` lines, then ``nu, a_nu, alpha_nu`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# r={s.r}\n# a={s.interval[0]!r}\n# b={s.interval[1]!r}\n"
                 f"# eps={s.eps!r}\n# flag={s.flag}\n")
        w = csv.writer(fh)
        w.writerow(["nu", "a_nu", "alpha_nu"])
        for k in range(s.r):
            w.writerow([k + 1, repr(float(s.coef[k])), repr(float(s.rate[k]))])


def read_expsum_csv(path) -> ExponentialSum:
    meta, rows = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            elif line.strip() and not line.startswith("nu"):
                rows.append([float(v) for v in line.split(",")])
    data = np.array(rows)
    if data.shape[0] != int(meta["r"]):
        raise InvalidArgument(f"{path}: header says r={meta['r']}, found {data.shape[0]} rows")
    return ExponentialSum(data[:, 1], data[:, 2], (float(meta["a"]), float(meta["b"])),
                          float(meta["eps"]), meta.get("flag", EQUIOSCILLATION))
