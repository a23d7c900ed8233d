"""
Small dense symmetric linear algebra (dim <= 16)
"""
from typing import Optional

import numpy as np
import scipy.linalg

from finsler.config import DEFAULT_TOLERANCES
from finsler.core.errors import SingularMatrix

MAX_DIM = 16


class SymMatrix:
    """Read-only symmetric matrix"""

    __slots__ = ("_entries",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if not 0 < a.shape[0] <= MAX_DIM:
            raise ValueError(f"dimension {a.shape[0]} outside 1..{MAX_DIM}")
        if not np.array_equal(a, a.T):
            raise ValueError("matrix is not symmetric")
        a.setflags(write=False)
        self._entries = a

    @classmethod
    def symmetrized(cls, a) -> "SymMatrix":
        """(A + A^T) / 2"""
        a = np.asarray(a, dtype=float)
        return cls(0.5 * (a + a.T))

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self._entries if dtype is None else self._entries.astype(dtype)

    def __getitem__(self, index):
        return self._entries[index]

    def __repr__(self) -> str:
        return f"SymMatrix({self._entries.tolist()!r})"

    def quadratic(self, u, v=None) -> float:
        u = np.asarray(u, dtype=float)
        v = u if v is None else np.asarray(v, dtype=float)
        return float(u @ self._entries @ v)

    def max_abs_diff(self, other) -> float:
        return float(np.max(np.abs(self._entries - np.asarray(other, dtype=float))))


def _lu(a: np.ndarray, pivot_tol: float):
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) < pivot_tol * scale:
        raise SingularMatrix(f"pivot {np.min(pivots):.3e} below {pivot_tol:g} * max|entry| ({scale:.3e})")
    return lu, piv


def sym_solve(A, b, pivot_tol: Optional[float] = None) -> np.ndarray:
    """Solve A x = b for symmetric nonsingular A"""
    pivot_tol = DEFAULT_TOLERANCES.singular_pivot if pivot_tol is None else pivot_tol
    a = np.asarray(A, dtype=float)
    factors = _lu(a, pivot_tol)
    return scipy.linalg.lu_solve(factors, np.asarray(b, dtype=float))


def sym_inverse(A, pivot_tol: Optional[float] = None) -> SymMatrix:
    """Inverse of a symmetric nonsingular matrix"""
    pivot_tol = DEFAULT_TOLERANCES.singular_pivot if pivot_tol is None else pivot_tol
    a = np.asarray(A, dtype=float)
    factors = _lu(a, pivot_tol)
    return SymMatrix.symmetrized(scipy.linalg.lu_solve(factors, np.eye(a.shape[0])))


def min_eigenvalue(A) -> float:
    a = np.asarray(A, dtype=float)
    return float(scipy.linalg.eigvalsh(a, subset_by_index=[0, 0])[0])


def cholesky_succeeds(A) -> bool:
    """True when A admits a Cholesky factorization (A positive-definite)"""
    try:
        scipy.linalg.cholesky(np.asarray(A, dtype=float), lower=True)
    except np.linalg.LinAlgError:
        return False
    return True
