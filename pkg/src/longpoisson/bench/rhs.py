"""Named right-hand sides ``f(x')`` for the two test cases."""

from __future__ import annotations

from typing import Callable, Dict

import numpy as np

from ..errors import InvalidArgument
from ..mesh import CrossSectionGrid, INTERVAL, LSHAPE

RHS_2D: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "one": lambda x: np.ones_like(x[:, 0]),
    "sin": lambda x: np.sin(2.0 * x[:, 0] + 0.5),
    "tanh": lambda x: np.tanh(4.0 * x[:, 0] + 1.0),
    # Sampled pointwise at the nodes, kink included.
    "abs": lambda x: np.abs(x[:, 0]),
}

RHS_3D: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "one": lambda x: np.ones_like(x[:, 0]),
    "sinx2x3": lambda x: np.sin(x[:, 0] + 0.5) * x[:, 1],
    "tanhx2x3": lambda x: np.tanh(x[:, 0] * x[:, 1]),
}

CATALOG = {"2d": RHS_2D, "3d": RHS_3D}
CASE_SHAPE = {"2d": INTERVAL, "3d": LSHAPE}


def rhs_names(case: str):
    return tuple(_catalog(case))


def _catalog(case: str):
    try:
        return CATALOG[case]
    except KeyError:
        raise InvalidArgument(f"unknown case {case!r}; expected one of {tuple(CATALOG)}") from None


def evaluate_rhs(case: str, name: str, grid: CrossSectionGrid) -> np.ndarray:
    """Nodal values of catalogue entry ``name`` on ``grid``."""
    cat = _catalog(case)
    if name not in cat:
        raise InvalidArgument(f"unknown right-hand side {name!r} for case {case!r}")
    if grid.shape != CASE_SHAPE[case]:
        raise InvalidArgument(f"case {case!r} needs a {CASE_SHAPE[case]} cross section")
    return np.asarray(cat[name](grid.coords), dtype=float)
