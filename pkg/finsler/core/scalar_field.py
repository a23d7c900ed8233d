"""
Closed-form positive scalar fields f: M_k -> (0, inf)

Every family exposes exact value and gradient channels; both accept plain
floats or Taylor2 coordinates.
"""
from abc import ABC, abstractmethod
from typing import List, Optional, Sequence

import numpy as np

from finsler.core.errors import DomainError, InvalidParameter
from finsler.utils.taylor import Scalar, dot, exp, power, value_of


class ScalarField(ABC):
    """Positive smooth function on one factor"""

    family: str = ""

    def __init__(self, dim: int):
        if dim <= 0:
            raise InvalidParameter(f"field dimension must be positive, got {dim}")
        self.dim = int(dim)

    @abstractmethod
    def _value(self, x: Sequence) -> Scalar:
        ...

    @abstractmethod
    def _gradient(self, x: Sequence) -> List[Scalar]:
        ...

    def _check(self, x: Sequence) -> None:
        if len(x) != self.dim:
            raise DomainError(f"{self.family} field expects {self.dim} coordinates, got {len(x)}")

    def value(self, x: Sequence) -> Scalar:
        self._check(x)
        v = self._value(x)
        if not value_of(v) > 0.0:
            raise DomainError(f"{self.family} field is not positive at x={[value_of(c) for c in x]}")
        return v

    def gradient(self, x: Sequence) -> List[Scalar]:
        self._check(x)
        return self._gradient(x)

    def gradient_array(self, x: Sequence[float]) -> np.ndarray:
        return np.array([value_of(g) for g in self.gradient(x)], dtype=float)

    def differential(self, x: Sequence, v: Sequence) -> Scalar:
        """du_x(v)"""
        return dot(self.gradient(x), v)

    @property
    def is_constant(self) -> bool:
        return False

    @property
    def constant_value(self) -> Optional[float]:
        return None

    def describe(self) -> str:
        return self.family


class ConstantField(ScalarField):
    family = "constant"

    def __init__(self, dim: int, c: float):
        super().__init__(dim)
        if not c > 0.0:
            raise InvalidParameter(f"constant field must be positive, got {c}")
        self.c = float(c)

    def _value(self, x):
        return self.c

    def _gradient(self, x):
        return [0.0] * self.dim

    @property
    def is_constant(self) -> bool:
        return True

    @property
    def constant_value(self) -> Optional[float]:
        return self.c

    def describe(self) -> str:
        return f"constant({self.c:g})"


class ExpLinearField(ScalarField):
    """exp(a . x)"""
    family = "exp_linear"

    def __init__(self, a: Sequence[float]):
        a = np.asarray(a, dtype=float).ravel()
        super().__init__(a.shape[0])
        self.a = a

    def _value(self, x):
        return exp(dot(self.a, x))

    def _gradient(self, x):
        e = exp(dot(self.a, x))
        return [ai * e for ai in self.a]

    @property
    def is_constant(self) -> bool:
        return not np.any(self.a)

    @property
    def constant_value(self) -> Optional[float]:
        return 1.0 if self.is_constant else None

    def describe(self) -> str:
        return f"exp_linear({', '.join(f'{v:g}' for v in self.a)})"


class MonomialField(ScalarField):
    """c * (x^i)^p"""
    family = "monomial"

    def __init__(self, dim: int, index: int, power: float, coeff: float = 1.0):
        super().__init__(dim)
        if not 0 <= index < dim:
            raise InvalidParameter(f"monomial index {index} outside 0..{dim - 1}")
        if not coeff > 0.0:
            raise InvalidParameter(f"monomial coefficient must be positive, got {coeff}")
        self.index = int(index)
        self.power = float(power)
        self.coeff = float(coeff)

    def _value(self, x):
        return self.coeff * power(x[self.index], self.power)

    def _gradient(self, x):
        grad: List[Scalar] = [0.0] * self.dim
        if self.power != 0.0:
            grad[self.index] = self.coeff * self.power * power(x[self.index], self.power - 1.0)
        return grad

    @property
    def is_constant(self) -> bool:
        return self.power == 0.0

    @property
    def constant_value(self) -> Optional[float]:
        return self.coeff if self.is_constant else None

    def describe(self) -> str:
        return f"monomial({self.coeff:g} * x{self.index}^{self.power:g})"


class NormSquaredPlusField(ScalarField):
    """c + ||x||^2"""
    family = "norm_squared_plus"

    def __init__(self, dim: int, c: float):
        super().__init__(dim)
        if not c > 0.0:
            raise InvalidParameter(f"norm_squared_plus offset must be positive, got {c}")
        self.c = float(c)

    def _value(self, x):
        return self.c + dot(x, x)

    def _gradient(self, x):
        return [2.0 * xi for xi in x]

    def describe(self) -> str:
        return f"{self.c:g} + |x|^2"
