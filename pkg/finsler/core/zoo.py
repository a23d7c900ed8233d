"""
Built-in metric families
"""
import logging
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from finsler.config import DEFAULT_TOLERANCES
from finsler.core.convolution import ConvolutionSpec, convolve
from finsler.core.errors import DomainError, InvalidParameter, RandersInvalid
from finsler.core.metric import FinslerMetric, Interval, TangentSample
from finsler.core.scalar_field import ConstantField
from finsler.models import schemas
from finsler.utils.linalg import cholesky_succeeds
from finsler.utils.taylor import Scalar, dot, exp, power, quad_form, sqrt, value_of

logger = logging.getLogger(__name__)

MARGIN = DEFAULT_TOLERANCES.domain_margin


def _ball_box(dim: int, radius: float = 0.9) -> List[Interval]:
    half = radius / np.sqrt(dim)
    return [(-half, half)] * dim


def _check_lambda(lam: float) -> float:
    if not 2.0 <= lam <= 4.0:
        raise InvalidParameter(f"lambda must lie in [2, 4], got {lam}")
    return float(lam)


def _check_k(k) -> int:
    if int(k) != k or k <= 0:
        raise InvalidParameter(f"k must be a positive integer, got {k}")
    return int(k)


def _spd(matrix, what: str) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParameter(f"{what} must be a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-14):
        raise InvalidParameter(f"{what} must be symmetric")
    if not cholesky_succeeds(a):
        raise InvalidParameter(f"{what} must be positive-definite")
    return 0.5 * (a + a.T)


class EuclideanMetric(FinslerMetric):
    family = "euclidean"

    def __init__(self, n: int):
        if n <= 0:
            raise InvalidParameter(f"dimension must be positive, got {n}")
        super().__init__(n)

    def norm_squared(self, x, y):
        return dot(y, y)

    def describe(self) -> str:
        return f"euclidean({self.dim})"


class ConstRiemannMetric(FinslerMetric):
    family = "const_riemann"

    def __init__(self, matrix):
        a = _spd(matrix, "metric matrix")
        super().__init__(a.shape[0])
        self.matrix = a

    def norm_squared(self, x, y):
        return quad_form(self.matrix, y)

    def describe(self) -> str:
        return f"const_riemann({self.dim})"


def _klein_squared(x: Sequence, y: Sequence) -> Scalar:
    xx = dot(x, x)
    return (dot(y, y) - (xx * dot(y, y) - power(dot(x, y), 2))) / power(1.0 - xx, 2)


class KleinMetric(FinslerMetric):
    """sqrt(|y|^2 - (|x|^2 |y|^2 - <x,y>^2)) / (1 - |x|^2) on the unit ball"""
    family = "klein"

    def __init__(self, n: int):
        if n <= 0:
            raise InvalidParameter(f"dimension must be positive, got {n}")
        super().__init__(n)

    def norm(self, x, y):
        xx = dot(x, x)
        return sqrt(dot(y, y) - (xx * dot(y, y) - power(dot(x, y), 2))) / (1.0 - xx)

    def norm_squared(self, x, y):
        return _klein_squared(x, y)

    def _chart_violation(self, x, y):
        if np.linalg.norm(x) >= 1.0 - self.margin:
            return f"|x| = {np.linalg.norm(x):.6g} outside the unit ball"
        return None

    def default_intervals(self):
        return _ball_box(self.dim), [(-1.0, 1.0)] * self.dim

    def describe(self) -> str:
        return f"klein({self.dim})"


class QuarticMinkowskiMetric(FinslerMetric):
    """(y1^4 + lambda y1^2 y2^2 + y2^4)^(1/4)"""
    family = "quartic_minkowski"

    def __init__(self, lam: float):
        self.lam = _check_lambda(lam)
        super().__init__(2)

    def norm_squared(self, x, y):
        y1, y2 = y
        return sqrt(power(y1, 4) + self.lam * power(y1, 2) * power(y2, 2) + power(y2, 4))

    def describe(self) -> str:
        return f"quartic_minkowski(lambda={self.lam:g})"


class KNormMinkowskiMetric(FinslerMetric):
    """[y1^2 + y2^2 + lambda (y1^2k + y2^2k)^(1/k)]^(1/2)"""
    family = "knorm_minkowski"

    def __init__(self, lam: float, k: int):
        self.lam = _check_lambda(lam)
        self.k = _check_k(k)
        super().__init__(2)

    def norm_squared(self, x, y):
        y1, y2 = y
        k = self.k
        return power(y1, 2) + power(y2, 2) + self.lam * power(power(y1, 2 * k) + power(y2, 2 * k), 1.0 / k)

    def describe(self) -> str:
        return f"knorm_minkowski(lambda={self.lam:g}, k={self.k})"


class RandersMetric(FinslerMetric):
    """alpha + beta, alpha = sqrt(a_ij y^i y^j), beta = b_i(x) y^i with b(x) = b + B x"""
    family = "randers"

    def __init__(self, alpha, b: Sequence[float], b_linear=None):
        a = _spd(alpha, "alpha matrix")
        b = np.asarray(b, dtype=float).ravel()
        if b.shape[0] != a.shape[0]:
            raise InvalidParameter(f"beta has {b.shape[0]} coefficients, alpha is {a.shape[0]}-dimensional")
        B = None
        if b_linear is not None:
            B = np.asarray(b_linear, dtype=float)
            if B.shape != a.shape:
                raise InvalidParameter(f"b_linear must be {a.shape}, got {B.shape}")
        super().__init__(a.shape[0])
        self.alpha_matrix = a
        self.alpha_inverse = np.linalg.inv(a)
        self.b = b
        self.b_linear = B
        if B is None:
            self.certify([np.zeros(self.dim)])

    def coefficients(self, x: Sequence) -> list:
        if self.b_linear is None:
            return list(self.b)
        return [self.b[i] + dot(self.b_linear[i], x) for i in range(self.dim)]

    def beta_norm(self, x: Sequence[float]) -> float:
        """||beta||_alpha = sqrt(a^ij b_i b_j) at x"""
        bx = np.array([value_of(c) for c in self.coefficients(x)])
        return float(np.sqrt(bx @ self.alpha_inverse @ bx))

    def certify(self, points: Sequence[Sequence[float]]) -> float:
        """Raise RandersInvalid at the first point with ||beta||_alpha >= 1; return the max norm"""
        worst = 0.0
        for x in points:
            nrm = self.beta_norm(x)
            if nrm >= 1.0:
                raise RandersInvalid(
                    f"||beta||_alpha = {nrm:.6g} >= 1 at x = {list(map(float, x))}", witness=x, norm=nrm
                )
            worst = max(worst, nrm)
        return worst

    def alpha(self, x, y) -> Scalar:
        return sqrt(quad_form(self.alpha_matrix, y))

    def beta(self, x, y) -> Scalar:
        return dot(self.coefficients(x), y)

    def norm(self, x, y):
        return self.alpha(x, y) + self.beta(x, y)

    def _chart_violation(self, x, y):
        if self.b_linear is not None and self.beta_norm(x) >= 1.0 - self.margin:
            return f"||beta||_alpha = {self.beta_norm(x):.6g} not below 1"
        return None

    def describe(self) -> str:
        return f"randers({self.dim})"


class Example11Metric(FinslerMetric):
    """
    Quartic / k-norm convolution on {x1 > 0, x3 > 0} with y1 > 0, y3 > 0:

        F^2 = x3^2 (y1^4 + l y1^2 y2^2 + y2^4)^(1/2) + 8 x1^3 x3^3 y1 y3
              + x3^2 [y3^2 + y4^2 + l (y3^2k + y4^2k)^(1/k)]
    """
    family = "example11"

    def __init__(self, lam: float, k: int):
        self.lam = _check_lambda(lam)
        self.k = _check_k(k)
        super().__init__(4, split=2)

    def norm_squared(self, x, y):
        x1, _, x3, _ = x
        y1, y2, y3, y4 = y
        lam, k = self.lam, self.k
        x3sq = x3 * x3
        first = x3sq * sqrt(power(y1, 4) + lam * power(y1, 2) * power(y2, 2) + power(y2, 4))
        cross = 8.0 * (x1 * x1 * x1) * (x3sq * x3) * y1 * y3
        last = x3sq * (power(y3, 2) + power(y4, 2) + lam * power(power(y3, 2 * k) + power(y4, 2 * k), 1.0 / k))
        return first + cross + last

    def _chart_violation(self, x, y):
        for name, v in (("x1", x[0]), ("x3", x[2]), ("y1", y[0]), ("y3", y[2])):
            if v <= self.margin:
                return f"{name} = {v:.6g} must be positive"
        return None

    def default_intervals(self):
        constrained = (0.1, 2.0)
        return [constrained, (-1.0, 1.0), constrained, (-1.0, 1.0)], [constrained, (-1.0, 1.0), constrained, (-1.0, 1.0)]

    def describe(self) -> str:
        return f"example11(lambda={self.lam:g}, k={self.k})"


class Example41Metric(FinslerMetric):
    """
    Klein convolution on B^3 x B^2 via f_k = exp(rho_k), rho_k(x_k) = a_k . x_k,
    written out term by term
    """
    family = "example41"

    def __init__(self, a1: Sequence[float], a2: Sequence[float]):
        self.a1 = np.asarray(a1, dtype=float).ravel()
        self.a2 = np.asarray(a2, dtype=float).ravel()
        if self.a1.shape != (3,) or self.a2.shape != (2,):
            raise InvalidParameter("example41 needs a1 in R^3 and a2 in R^2")
        super().__init__(5, split=3)

    @staticmethod
    def _block(x, y):
        xx = dot(x, x)
        return (dot(y, y) * (1.0 - xx) + power(dot(x, y), 2)) / power(1.0 - xx, 2)

    def norm_squared(self, x, y):
        x1, x2, y1, y2 = x[:3], x[3:], y[:3], y[3:]
        e1 = exp(2.0 * dot(self.a1, x1))
        e2 = exp(2.0 * dot(self.a2, x2))
        cross = 0.0
        for r in range(3):
            for s in range(2):
                cross = self.a1[r] * self.a2[s] * y1[r] * y2[s] + cross
        return e2 * self._block(x1, y1) + e1 * self._block(x2, y2) + 2.0 * e1 * e2 * cross

    def _chart_violation(self, x, y):
        for name, block in (("x1", x[:3]), ("x2", x[3:])):
            if np.linalg.norm(block) >= 1.0 - self.margin:
                return f"|{name}| = {np.linalg.norm(block):.6g} outside the unit ball"
        return None

    def default_intervals(self):
        return _ball_box(3) + _ball_box(2), [(-1.0, 1.0)] * 5

    def describe(self) -> str:
        return "example41"


class Example43Metric(FinslerMetric):
    """
    Randers-type convolution on R^3 x B^(n-3):

        F^2 = |x2|^2 (|y1| + eps y1^3)^2 + 2 <x1, y1><x2, y2> + |x1|^2 K(x2, y2)^2

    with K(x2, y2) = (sqrt(|y2|^2 - (|x2|^2 |y2|^2 - <x2,y2>^2)) + <x2,y2>) / (1 - |x2|^2).
    Points where the right side is not positive are outside the chart.
    """
    family = "example43"

    def __init__(self, n: int, epsilon: float):
        if n < 4:
            raise InvalidParameter(f"example43 needs n >= 4, got {n}")
        if not 0.0 <= epsilon < 1.0:
            raise InvalidParameter(f"epsilon must lie in [0, 1), got {epsilon}")
        self.epsilon = float(epsilon)
        super().__init__(n, split=3)

    def terms(self, x, y) -> Tuple[Scalar, Scalar, Scalar]:
        x1, x2, y1, y2 = x[:3], x[3:], y[:3], y[3:]
        x2x2 = dot(x2, x2)
        randers = sqrt(dot(y1, y1)) + self.epsilon * y1[2]
        funk = (sqrt(dot(y2, y2) - (x2x2 * dot(y2, y2) - power(dot(x2, y2), 2))) + dot(x2, y2)) / (1.0 - x2x2)
        first = x2x2 * power(randers, 2)
        cross = 2.0 * dot(x1, y1) * dot(x2, y2)
        last = dot(x1, x1) * power(funk, 2)
        return first, cross, last

    def norm_squared(self, x, y):
        first, cross, last = self.terms(x, y)
        return first + cross + last

    def _chart_violation(self, x, y):
        if np.linalg.norm(x[3:]) >= 1.0 - self.margin:
            return f"|x2| = {np.linalg.norm(x[3:]):.6g} outside the unit ball"
        first, cross, last = self.terms(list(x), list(y))
        if not first + last > -cross:
            return "validity inequality fails (F^2 <= 0)"
        return None

    def default_intervals(self):
        return [(-1.0, 1.0)] * 3 + _ball_box(self.dim - 3), [(-1.0, 1.0)] * self.dim

    def describe(self) -> str:
        return f"example43(n={self.dim}, epsilon={self.epsilon:g})"


class OffsetMetric(FinslerMetric):
    """F + shift: not homogeneous, kept as a fixture for the property suite"""
    family = "offset"

    def __init__(self, base: FinslerMetric, shift: float):
        super().__init__(base.dim, split=base.split, margin=base.margin)
        self.base = base
        self.shift = float(shift)

    def norm(self, x, y):
        return self.base.norm(x, y) + self.shift

    def domain_violation(self, x, y):
        return self.base.domain_violation(x, y)

    def default_intervals(self):
        return self.base.default_intervals()

    def describe(self) -> str:
        return f"offset({self.base.describe()}, {self.shift:g})"


class RandersParts(NamedTuple):
    alpha: float
    beta: float


def randers_decompose(m: FinslerMetric, s: TangentSample) -> RandersParts:
    """Even/odd split of F in y: alpha = (F(y) + F(-y))/2, beta = (F(y) - F(-y))/2"""
    forward = m.value(s)
    try:
        backward = m.value(s.reflected())
    except DomainError as e:
        raise DomainError(f"y-reflection unavailable for {m.describe()}: {e}") from e
    return RandersParts(alpha=0.5 * (forward + backward), beta=0.5 * (forward - backward))


def build(spec: "schemas.ZooSpec", check_points: Optional[Sequence[Sequence[float]]] = None) -> FinslerMetric:
    """
    Build a zoo metric from its declarative spec

    Args:
        spec: one of the zoo spec models
        check_points: extra base points where a Randers 1-form is certified

    Raises:
        InvalidParameter: parameters out of range
        RandersInvalid: ||beta||_alpha >= 1 at a certified point
    """
    if isinstance(spec, schemas.EuclideanSpec):
        return EuclideanMetric(spec.n)
    if isinstance(spec, schemas.ConstRiemannSpec):
        return ConstRiemannMetric(spec.matrix)
    if isinstance(spec, schemas.KleinSpec):
        return KleinMetric(spec.n)
    if isinstance(spec, schemas.QuarticMinkowskiSpec):
        return QuarticMinkowskiMetric(spec.lambda_)
    if isinstance(spec, schemas.KNormMinkowskiSpec):
        return KNormMinkowskiMetric(spec.lambda_, spec.k)
    if isinstance(spec, schemas.RandersSpec):
        if spec.alpha is not None:
            alpha = spec.alpha
        elif spec.n is not None or spec.b:
            alpha = np.eye(spec.n if spec.n is not None else len(spec.b))
        else:
            raise InvalidParameter("randers needs alpha, n or a non-empty b")
        metric = RandersMetric(alpha, spec.b, spec.b_linear)
        points = list(spec.check_points) + list(check_points or [])
        if points:
            worst = metric.certify(points)
            logger.info(f"randers 1-form certified on {len(points)} point(s), max ||beta||_alpha = {worst:.6g}")
        return metric
    if isinstance(spec, schemas.Example11Spec):
        return Example11Metric(spec.lambda_, spec.k)
    if isinstance(spec, schemas.Example41Spec):
        return Example41Metric(spec.a1, spec.a2)
    if isinstance(spec, schemas.Example42Spec):
        return convolve(ConvolutionSpec(
            F1=QuarticMinkowskiMetric(spec.lambda_),
            F2=KNormMinkowskiMetric(spec.lambda_, spec.k),
            f1=ConstantField(2, spec.c1),
            f2=ConstantField(2, spec.c2),
        ))
    if isinstance(spec, schemas.Example43Spec):
        return Example43Metric(spec.n, spec.epsilon)
    raise InvalidParameter(f"not a zoo spec: {type(spec).__name__}")
