"""
Finsler metric abstraction

A FinslerMetric evaluates F(x, y) on a single coordinate chart. The fundamental
tensor g_ij = 1/2 d^2 F^2 / dy^i dy^j is computed exactly with the Taylor2
kernel; the Cartan tensor takes one more y-derivative by central differences.
"""
import itertools
import logging
from abc import ABC
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from finsler.config import DEFAULT_TOLERANCES, Tolerances
from finsler.core.errors import DomainError
from finsler.core.scalar_field import ScalarField
from finsler.utils.linalg import SymMatrix, min_eigenvalue, sym_solve
from finsler.utils.taylor import Scalar, Taylor2Result, sqrt, taylor2_eval

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]


@dataclass(frozen=True, eq=False)
class TangentSample:
    """A point (x, y) of the slit tangent bundle, optionally split into two factors"""
    x: np.ndarray
    y: np.ndarray
    split: Optional[int] = None

    def __post_init__(self):
        x = np.array(self.x, dtype=float).ravel()
        y = np.array(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise DomainError(f"x has {x.shape[0]} coordinates but y has {y.shape[0]}")
        if self.split is not None and not 0 < self.split < x.shape[0]:
            raise DomainError(f"split {self.split} outside 1..{x.shape[0] - 1}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_point(cls, point: Sequence[float], split: Optional[int] = None) -> "TangentSample":
        """Build from the concatenation (x, y)"""
        point = np.asarray(point, dtype=float).ravel()
        if point.shape[0] % 2:
            raise DomainError(f"a point needs 2n coordinates, got {point.shape[0]}")
        n = point.shape[0] // 2
        return cls(point[:n], point[n:], split)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def factor(self, k: int) -> "TangentSample":
        """The sample seen by factor k (1 or 2) of a product"""
        if self.split is None:
            raise DomainError("sample is not split into factors")
        if k == 1:
            return TangentSample(self.x[:self.split], self.y[:self.split])
        return TangentSample(self.x[self.split:], self.y[self.split:])

    def with_y(self, y: Sequence[float]) -> "TangentSample":
        return TangentSample(self.x, y, self.split)

    def scaled(self, c: float) -> "TangentSample":
        return self.with_y(c * self.y)

    def reflected(self) -> "TangentSample":
        return self.with_y(-self.y)

    def with_split(self, split: Optional[int]) -> "TangentSample":
        return TangentSample(self.x, self.y, split)

    def __repr__(self) -> str:
        return f"TangentSample(x={self.x.tolist()}, y={self.y.tolist()})"


class FinslerMetric(ABC):
    """
    F(x, y) on one chart

    Subclasses override ``norm`` or ``norm_squared`` (at least one), written with
    the generic helpers of ``finsler.utils.taylor`` so they run on floats and on
    Taylor2 values alike, and may extend ``_chart_violation``.
    """

    family: str = "metric"

    def __init__(self, dim: int, split: Optional[int] = None, margin: float = DEFAULT_TOLERANCES.domain_margin):
        self.dim = int(dim)
        self.split = split
        self.margin = float(margin)

    # evaluation -------------------------------------------------------------

    def norm(self, x: Sequence, y: Sequence) -> Scalar:
        return sqrt(self.norm_squared(x, y))

    def norm_squared(self, x: Sequence, y: Sequence) -> Scalar:
        f = self.norm(x, y)
        return f * f

    def value(self, sample: TangentSample) -> float:
        self.validate(sample)
        return float(self.norm(list(sample.x), list(sample.y)))

    def squared_value(self, sample: TangentSample) -> float:
        self.validate(sample)
        return float(self.norm_squared(list(sample.x), list(sample.y)))

    def _program(self, sample: TangentSample, wrt: str, squared: bool):
        evaluate = self.norm_squared if squared else self.norm
        if wrt == "y":
            x = list(sample.x)
            return (lambda ys: evaluate(x, ys)), sample.y
        if wrt == "xy":
            n = self.dim
            return (lambda v: evaluate(v[:n], v[n:])), np.concatenate([sample.x, sample.y])
        raise ValueError(f"wrt must be 'y' or 'xy', got {wrt!r}")

    def taylor(self, sample: TangentSample, wrt: str = "y") -> Taylor2Result:
        """F with exact derivative channels in y (and x when wrt='xy')"""
        self.validate(sample)
        program, point = self._program(sample, wrt, squared=False)
        return taylor2_eval(program, point)

    def squared_taylor(self, sample: TangentSample, wrt: str = "y") -> Taylor2Result:
        self.validate(sample)
        program, point = self._program(sample, wrt, squared=True)
        return taylor2_eval(program, point)

    # domain -----------------------------------------------------------------

    def _chart_violation(self, x: np.ndarray, y: np.ndarray) -> Optional[str]:
        return None

    def domain_violation(self, x: Sequence[float], y: Sequence[float]) -> Optional[str]:
        """Reason (x, y) is outside the chart or the slit bundle, or None"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != (self.dim,) or y.shape != (self.dim,):
            return f"{self.family} expects {self.dim} coordinates for x and y"
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            return "non-finite coordinate"
        blocks = [y] if self.split is None else [y[:self.split], y[self.split:]]
        for i, block in enumerate(blocks, start=1):
            if np.linalg.norm(block) <= self.margin:
                return "slit condition: zero direction" if len(blocks) == 1 else f"slit condition: y block {i} is zero"
        return self._chart_violation(x, y)

    def validate(self, sample: TangentSample) -> None:
        reason = self.domain_violation(sample.x, sample.y)
        if reason:
            raise DomainError(f"domain violation ({self.family}): {reason} at {sample!r}")

    def contains(self, sample: TangentSample) -> bool:
        return self.domain_violation(sample.x, sample.y) is None

    def default_intervals(self) -> Tuple[List[Interval], List[Interval]]:
        """Per-coordinate sampling boxes for x and y"""
        return [(-1.0, 1.0)] * self.dim, [(-1.0, 1.0)] * self.dim

    def sample(self, x: Sequence[float], y: Sequence[float]) -> TangentSample:
        return TangentSample(x, y, self.split)

    def describe(self) -> str:
        return self.family


class Provenance(str, Enum):
    """How a fundamental tensor was obtained"""
    AUTODIFF = "autodiff"
    BLOCK = "block"
    SYMMETRIZED = "symmetrized"


@dataclass(frozen=True, eq=False)
class FundamentalTensor:
    at: TangentSample
    g: SymMatrix
    provenance: Provenance
    min_eigenvalue: float

    @property
    def strongly_convex(self) -> bool:
        return self.min_eigenvalue > 0.0


@dataclass(frozen=True, eq=False)
class CartanTensor:
    """A_ijk = (F/2) dg_ij/dy^k, symmetrized over all index permutations"""
    at: TangentSample
    entries: np.ndarray
    asymmetry: float = 0.0

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.entries)))

    def contraction_with_y(self) -> float:
        return float(np.max(np.abs(np.einsum("ijk,k->ij", self.entries, self.at.y))))


@dataclass(frozen=True)
class HomogeneityReport:
    max_relative_error: float
    max_tensor_deviation: float
    worst_scale: float


@dataclass(frozen=True)
class ConvexityReport:
    is_positive: bool
    min_eig: float


def fundamental_tensor(m: FinslerMetric, s: TangentSample) -> FundamentalTensor:
    """g = 1/2 Hess_y(F^2) at the sample, with its smallest eigenvalue"""
    result = m.squared_taylor(s)
    g = SymMatrix(0.5 * result.hessian)
    lam = min_eigenvalue(g)
    if lam <= 0.0:
        logger.debug(f"{m.describe()} not strongly convex at {s!r} (min eig {lam:.3e})")
    return FundamentalTensor(at=s, g=g, provenance=Provenance.AUTODIFF, min_eigenvalue=lam)


def cartan_tensor(m: FinslerMetric, s: TangentSample, tol: Tolerances = DEFAULT_TOLERANCES) -> CartanTensor:
    """Cartan tensor by central differences of the exact fundamental tensor"""
    F = m.value(s)
    n = m.dim
    h = tol.cartan_step * max(1.0, float(np.max(np.abs(s.y))))
    raw = np.zeros((n, n, n))
    for k in range(n):
        step = np.zeros(n)
        step[k] = h
        gp = fundamental_tensor(m, s.with_y(s.y + step)).g.entries
        gm = fundamental_tensor(m, s.with_y(s.y - step)).g.entries
        raw[:, :, k] = (gp - gm) / (2.0 * h)
    raw *= 0.5 * F
    perms = [np.transpose(raw, p) for p in itertools.permutations(range(3))]
    sym = sum(perms) / len(perms)
    asymmetry = float(max(np.max(np.abs(p - raw)) for p in perms))
    return CartanTensor(at=s, entries=sym, asymmetry=asymmetry)


def gradient_field(m: FinslerMetric, u: ScalarField, s: TangentSample,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """nabla u = g^{ij}(x, y) du/dx^i"""
    du = u.gradient_array(list(s.x))
    g = fundamental_tensor(m, s).g
    if not np.any(du):
        return np.zeros(m.dim)
    return sym_solve(g, du, tol.singular_pivot)


def check_homogeneity(m: FinslerMetric, s: TangentSample,
                      scales: Sequence[float] = (0.5, 2.0, 10.0)) -> HomogeneityReport:
    """Max |F(x,cy) - cF(x,y)| / (cF(x,y)) and max |g(x,cy) - g(x,y)| over the scales"""
    F0 = m.value(s)
    g0 = fundamental_tensor(m, s).g
    worst, worst_scale, tensor_dev = 0.0, float(scales[0]) if scales else 1.0, 0.0
    for c in scales:
        sc = s.scaled(c)
        err = abs(m.value(sc) - c * F0) / (c * abs(F0))
        if err > worst:
            worst, worst_scale = err, float(c)
        tensor_dev = max(tensor_dev, g0.max_abs_diff(fundamental_tensor(m, sc).g))
    return HomogeneityReport(max_relative_error=worst, max_tensor_deviation=tensor_dev, worst_scale=worst_scale)


def check_strong_convexity(m: FinslerMetric, s: TangentSample) -> ConvexityReport:
    t = fundamental_tensor(m, s)
    return ConvexityReport(is_positive=t.min_eigenvalue > 0.0, min_eig=t.min_eigenvalue)


def euler_residual(m: FinslerMetric, s: TangentSample) -> float:
    """|g(y, y) - F^2| / F^2"""
    F2 = m.squared_value(s)
    g = fundamental_tensor(m, s).g
    return abs(g.quadratic(s.y) - F2) / abs(F2)


def gradient_identity_residual(m: FinslerMetric, s: TangentSample) -> float:
    """max_i |F dF/dy^i - g_ij y^j| / F^2"""
    res = m.taylor(s)
    g = fundamental_tensor(m, s).g
    lhs = res.value * res.gradient
    rhs = g.entries @ s.y
    return float(np.max(np.abs(lhs - rhs))) / (res.value ** 2)
