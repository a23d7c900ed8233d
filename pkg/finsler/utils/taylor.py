"""
Second-order forward-mode differentiation

A Taylor2 scalar carries a value together with its full gradient and Hessian
with respect to d active variables. Arithmetic propagates both channels by the
first and second order chain rule, so a program built from +, -, *, /, powers,
sqrt, exp and log yields exact derivatives up to rounding.

Programs are written once and run on plain floats or on Taylor2 values; use the
module-level ``sqrt``, ``exp``, ``log`` and ``power`` helpers inside programs so
both kinds of input work.
"""
import math
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np

from finsler.config import DEFAULT_TOLERANCES
from finsler.core.errors import DomainError

TINY = DEFAULT_TOLERANCES.tiny


class Taylor2:
    """Scalar with exact gradient and Hessian channels"""

    __slots__ = ("value", "grad", "hess")
    __array_ufunc__ = None  # numpy operands defer to the reflected operators

    def __init__(self, value: float, grad: np.ndarray, hess: np.ndarray):
        self.value = float(value)
        self.grad = grad
        self.hess = hess

    @classmethod
    def variable(cls, value: float, index: int, dim: int) -> "Taylor2":
        grad = np.zeros(dim)
        grad[index] = 1.0
        return cls(value, grad, np.zeros((dim, dim)))

    @classmethod
    def constant(cls, value: float, dim: int) -> "Taylor2":
        return cls(value, np.zeros(dim), np.zeros((dim, dim)))

    @property
    def dim(self) -> int:
        return self.grad.shape[0]

    def __repr__(self) -> str:
        return f"Taylor2(value={self.value!r}, dim={self.dim})"

    # chain rule for a unary function with derivatives d1, d2 at self.value
    def _chain(self, f0: float, d1: float, d2: float) -> "Taylor2":
        hess = d1 * self.hess
        if d2 != 0.0:
            hess = hess + d2 * np.outer(self.grad, self.grad)
        return Taylor2(f0, d1 * self.grad, hess)

    def __neg__(self) -> "Taylor2":
        return Taylor2(-self.value, -self.grad, -self.hess)

    def __pos__(self) -> "Taylor2":
        return self

    def __add__(self, other) -> "Taylor2":
        if isinstance(other, Taylor2):
            return Taylor2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)
        return Taylor2(self.value + float(other), self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other) -> "Taylor2":
        if isinstance(other, Taylor2):
            return Taylor2(self.value - other.value, self.grad - other.grad, self.hess - other.hess)
        return Taylor2(self.value - float(other), self.grad, self.hess)

    def __rsub__(self, other) -> "Taylor2":
        return Taylor2(float(other) - self.value, -self.grad, -self.hess)

    def __mul__(self, other) -> "Taylor2":
        if isinstance(other, Taylor2):
            cross = np.outer(self.grad, other.grad)
            return Taylor2(
                self.value * other.value,
                self.value * other.grad + other.value * self.grad,
                self.value * other.hess + other.value * self.hess + (cross + cross.T),
            )
        c = float(other)
        return Taylor2(self.value * c, c * self.grad, c * self.hess)

    __rmul__ = __mul__

    def reciprocal(self) -> "Taylor2":
        v = self.value
        if abs(v) < TINY:
            raise DomainError(f"division by {v!r}")
        inv = 1.0 / v
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other) -> "Taylor2":
        if isinstance(other, Taylor2):
            return self * other.reciprocal()
        c = float(other)
        if abs(c) < TINY:
            raise DomainError(f"division by {c!r}")
        return self * (1.0 / c)

    def __rtruediv__(self, other) -> "Taylor2":
        return float(other) * self.reciprocal()

    def __pow__(self, exponent) -> "Taylor2":
        if isinstance(exponent, Taylor2):
            return (exponent * self.log()).exp()
        return self.power(float(exponent))

    def __rpow__(self, base) -> "Taylor2":
        base = float(base)
        if base <= TINY:
            raise DomainError(f"non-positive base {base!r} for a variable exponent")
        return (self * math.log(base)).exp()

    def power(self, p: float) -> "Taylor2":
        v = self.value
        if p == 0.0:
            return Taylor2.constant(1.0, self.dim)
        if p == 1.0:
            return self
        if float(p).is_integer():
            if p < 0 and abs(v) < TINY:
                raise DomainError(f"negative power of {v!r}")
            d2 = p * (p - 1.0) * v ** (p - 2.0) if p != 2.0 else 2.0
            return self._chain(v ** p, p * v ** (p - 1.0), d2)
        if v < TINY:
            raise DomainError(f"fractional power of {v!r}")
        return self._chain(v ** p, p * v ** (p - 1.0), p * (p - 1.0) * v ** (p - 2.0))

    def sqrt(self) -> "Taylor2":
        v = self.value
        if v < TINY:
            raise DomainError(f"sqrt of {v!r}")
        r = math.sqrt(v)
        return self._chain(r, 0.5 / r, -0.25 / (r * v))

    def exp(self) -> "Taylor2":
        e = math.exp(self.value)
        return self._chain(e, e, e)

    def log(self) -> "Taylor2":
        v = self.value
        if v < TINY:
            raise DomainError(f"log of {v!r}")
        return self._chain(math.log(v), 1.0 / v, -1.0 / (v * v))


Scalar = Union[Taylor2, float]


def value_of(a: Scalar) -> float:
    """Plain float value of a scalar"""
    return a.value if isinstance(a, Taylor2) else float(a)


def sqrt(a: Scalar) -> Scalar:
    if isinstance(a, Taylor2):
        return a.sqrt()
    a = float(a)
    if a < TINY:
        raise DomainError(f"sqrt of {a!r}")
    return math.sqrt(a)


def exp(a: Scalar) -> Scalar:
    if isinstance(a, Taylor2):
        return a.exp()
    return math.exp(float(a))


def log(a: Scalar) -> Scalar:
    if isinstance(a, Taylor2):
        return a.log()
    a = float(a)
    if a < TINY:
        raise DomainError(f"log of {a!r}")
    return math.log(a)


def power(a: Scalar, p: float) -> Scalar:
    """a**p with the same domain rules for floats and Taylor2 values"""
    if isinstance(a, Taylor2):
        return a.power(p)
    a = float(a)
    if float(p).is_integer():
        if p < 0 and abs(a) < TINY:
            raise DomainError(f"negative power of {a!r}")
        return a ** int(p)
    if a < TINY:
        raise DomainError(f"fractional power of {a!r}")
    return a ** p


def dot(u: Sequence, v: Sequence) -> Scalar:
    total = 0.0
    for a, b in zip(u, v):
        total = a * b + total
    return total


def quad_form(matrix: np.ndarray, v: Sequence) -> Scalar:
    """v^T A v for a constant matrix A and generic entries v"""
    n = len(v)
    total = 0.0
    for i in range(n):
        row = 0.0
        for j in range(n):
            if matrix[i, j] != 0.0:
                row = matrix[i, j] * v[j] + row
        total = v[i] * row + total
    return total


class Taylor2Result(NamedTuple):
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def taylor2_eval(program: Callable[[list], Scalar], x0: Sequence[float]) -> Taylor2Result:
    """
    Evaluate a scalar program with exact first and second derivatives

    Args:
        program: function of a list of d scalars returning a scalar
        x0: point of evaluation

    Returns:
        (value, gradient, hessian) at x0; the Hessian is symmetric
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    d = x0.shape[0]
    out = program([Taylor2.variable(x0[i], i, d) for i in range(d)])
    if not isinstance(out, Taylor2):
        return Taylor2Result(float(out), np.zeros(d), np.zeros((d, d)))
    return Taylor2Result(out.value, out.grad.copy(), out.hess.copy())
