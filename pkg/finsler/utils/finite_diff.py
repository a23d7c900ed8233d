"""
Central finite-difference oracles

Independent of the Taylor2 kernel; used to cross-check it and to take the one
extra y-derivative needed by the Cartan tensor.
"""
from typing import Callable, Optional, Sequence

import numpy as np

from finsler.config import DEFAULT_TOLERANCES
from finsler.utils.linalg import SymMatrix

DEFAULT_STEP = DEFAULT_TOLERANCES.fd_step


def _as_point(x0: Sequence[float]) -> np.ndarray:
    return np.asarray(x0, dtype=float).ravel().copy()


def _central_gradient(program: Callable, x0: np.ndarray, h: float) -> np.ndarray:
    grad = np.zeros_like(x0)
    for i in range(x0.shape[0]):
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (float(program(list(xp))) - float(program(list(xm)))) / (2.0 * h)
    return grad


def _central_hessian(program: Callable, x0: np.ndarray, h: float) -> np.ndarray:
    d = x0.shape[0]
    f0 = float(program(list(x0)))
    hess = np.zeros((d, d))

    def at(i, si, j=None, sj=0.0):
        x = x0.copy()
        x[i] += si
        if j is not None:
            x[j] += sj
        return float(program(list(x)))

    for i in range(d):
        hess[i, i] = (at(i, h) - 2.0 * f0 + at(i, -h)) / (h * h)
        for j in range(i + 1, d):
            hess[i, j] = (at(i, h, j, h) - at(i, h, j, -h) - at(i, -h, j, h) + at(i, -h, j, -h)) / (4.0 * h * h)
            hess[j, i] = hess[i, j]
    return hess


def fd_gradient(program: Callable, x0: Sequence[float], h: Optional[float] = None,
                richardson: bool = False) -> np.ndarray:
    """
    Central-difference gradient, O(h^2) (O(h^4) with Richardson refinement)

    The point must be interior to the program's domain by more than 2h.
    """
    h = DEFAULT_STEP if h is None else h
    x0 = _as_point(x0)
    coarse = _central_gradient(program, x0, h)
    if not richardson:
        return coarse
    fine = _central_gradient(program, x0, h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def fd_hessian(program: Callable, x0: Sequence[float], h: Optional[float] = None,
               richardson: bool = False):
    """Central-difference Hessian returned as a SymMatrix"""
    h = DEFAULT_STEP if h is None else h
    x0 = _as_point(x0)
    coarse = _central_hessian(program, x0, h)
    if richardson:
        fine = _central_hessian(program, x0, h / 2.0)
        coarse = (4.0 * fine - coarse) / 3.0
    return SymMatrix.symmetrized(coarse)
