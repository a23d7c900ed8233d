"""
Convolution of two Finsler metrics through positive scalar fields

    F^2 = f2^2 F1^2 + f1^2 F2^2 + 2 f1 f2 df1(y1) df2(y2)

The cross term is the contraction F1 F2 (dF1/dy^i)(dF2/dy^j)(grad f1)^i (grad f2)^j
after F dF/dy^i = g_ij y^j; ``ConvolutionMetric.cross_term_unsimplified``
evaluates the long form for cross-checks.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from finsler.config import DEFAULT_TOLERANCES, Tolerances
from finsler.core.errors import DomainError, InvalidParameter, NonPositive
from finsler.core.metric import FinslerMetric, TangentSample, fundamental_tensor, gradient_field
from finsler.core.scalar_field import ScalarField
from finsler.utils.taylor import sqrt, value_of

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConvolutionSpec:
    """Two factor metrics and the positive fields that couple them"""
    F1: FinslerMetric
    F2: FinslerMetric
    f1: ScalarField
    f2: ScalarField

    def __post_init__(self):
        if self.f1.dim != self.F1.dim:
            raise InvalidParameter(f"f1 lives on {self.f1.dim} coordinates, F1 on {self.F1.dim}")
        if self.f2.dim != self.F2.dim:
            raise InvalidParameter(f"f2 lives on {self.f2.dim} coordinates, F2 on {self.F2.dim}")

    @property
    def n1(self) -> int:
        return self.F1.dim

    @property
    def n2(self) -> int:
        return self.F2.dim

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    def describe(self) -> str:
        return f"{self.f2.describe()}*{self.F1.describe()} conv {self.f1.describe()}*{self.F2.describe()}"


class ConvolutionMetric(FinslerMetric):
    family = "convolution"

    def __init__(self, spec: ConvolutionSpec):
        super().__init__(spec.n, split=spec.n1, margin=min(spec.F1.margin, spec.F2.margin))
        self.spec = spec

    def norm_squared(self, x, y):
        n1 = self.spec.n1
        x1, x2, y1, y2 = x[:n1], x[n1:], y[:n1], y[n1:]
        sp = self.spec
        f1 = sp.f1.value(x1)
        f2 = sp.f2.value(x2)
        cross = 2.0 * f1 * f2 * sp.f1.differential(x1, y1) * sp.f2.differential(x2, y2)
        return f2 * f2 * sp.F1.norm_squared(x1, y1) + f1 * f1 * sp.F2.norm_squared(x2, y2) + cross

    def norm(self, x, y):
        squared = self.norm_squared(x, y)
        if not value_of(squared) > 0.0:
            raise NonPositive(f"F^2 = {value_of(squared):.6g} is not positive")
        return sqrt(squared)

    def domain_violation(self, x, y):
        reason = super().domain_violation(x, y)
        if reason:
            return reason
        n1 = self.spec.n1
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        for k, (metric, xs, ys) in enumerate(((self.spec.F1, x[:n1], y[:n1]), (self.spec.F2, x[n1:], y[n1:])), start=1):
            reason = metric.domain_violation(xs, ys)
            if reason:
                return f"factor {k}: {reason}"
        return None

    def validate(self, sample: TangentSample) -> None:
        super().validate(sample)
        squared = float(self.norm_squared(list(sample.x), list(sample.y)))
        if not squared > 0.0:
            raise NonPositive(f"F^2 = {squared:.6g} is not positive at {sample!r}")

    def default_intervals(self):
        x1, y1 = self.spec.F1.default_intervals()
        x2, y2 = self.spec.F2.default_intervals()
        return x1 + x2, y1 + y2

    def cross_term(self, s: TangentSample) -> float:
        """2 f1 f2 df1(y1) df2(y2)"""
        s = s.with_split(self.split)
        a, b = s.factor(1), s.factor(2)
        sp = self.spec
        return float(2.0 * sp.f1.value(list(a.x)) * sp.f2.value(list(b.x))
                     * sp.f1.differential(list(a.x), list(a.y)) * sp.f2.differential(list(b.x), list(b.y)))

    def cross_term_unsimplified(self, s: TangentSample, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
        """2 f1 f2 F1 F2 (dF1/dy^i)(dF2/dy^j)(grad f1)^i (grad f2)^j with each gradient raised by its factor metric"""
        s = s.with_split(self.split)
        sp = self.spec
        a, b = s.factor(1), s.factor(2)
        t1, t2 = sp.F1.taylor(a), sp.F2.taylor(b)
        grad1 = gradient_field(sp.F1, sp.f1, a, tol)
        grad2 = gradient_field(sp.F2, sp.f2, b, tol)
        f1 = float(sp.f1.value(list(a.x)))
        f2 = float(sp.f2.value(list(b.x)))
        return 2.0 * f1 * f2 * (t1.value * float(t1.gradient @ grad1)) * (t2.value * float(t2.gradient @ grad2))

    def verify_cross_term(self, s: TangentSample, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
        """
        Deviation between the simplified and unsimplified cross terms, relative
        to the bound 2 f1 f2 |df1| |y1| |df2| |y2| (zero when a gradient vanishes)
        """
        s = s.with_split(self.split)
        a, b = s.factor(1), s.factor(2)
        sp = self.spec
        bound = (2.0 * float(sp.f1.value(list(a.x))) * float(sp.f2.value(list(b.x)))
                 * np.linalg.norm(sp.f1.gradient_array(list(a.x))) * np.linalg.norm(a.y)
                 * np.linalg.norm(sp.f2.gradient_array(list(b.x))) * np.linalg.norm(b.y))
        if bound <= tol.tiny:
            return 0.0
        short = self.cross_term(s)
        long = self.cross_term_unsimplified(s, tol)
        deviation = abs(short - long) / bound
        if deviation > tol.algebraic:
            logger.warning(f"cross-term deviation {deviation:.3e} at {s!r} ({self.describe()})")
        return deviation

    def describe(self) -> str:
        return f"convolution({self.spec.describe()})"


def convolve(spec: ConvolutionSpec) -> ConvolutionMetric:
    """The convolution metric of ``spec``; F^2 <= 0 surfaces per sample as NonPositive"""
    return ConvolutionMetric(spec)


class WarpedProductMetric(FinslerMetric):
    """sqrt(w^2 F_base^2 + F_fibre^2) with the warping field w on the other factor"""
    family = "warped_product"

    def __init__(self, F1: FinslerMetric, F2: FinslerMetric, warp: ScalarField, warp_on: int):
        super().__init__(F1.dim + F2.dim, split=F1.dim, margin=min(F1.margin, F2.margin))
        self.F1 = F1
        self.F2 = F2
        self.warp = warp
        self.warp_on = warp_on

    def norm_squared(self, x, y):
        n1 = self.F1.dim
        x1, x2, y1, y2 = x[:n1], x[n1:], y[:n1], y[n1:]
        if self.warp_on == 2:
            w = self.warp.value(x2)
            return w * w * self.F1.norm_squared(x1, y1) + self.F2.norm_squared(x2, y2)
        w = self.warp.value(x1)
        return self.F1.norm_squared(x1, y1) + w * w * self.F2.norm_squared(x2, y2)

    def domain_violation(self, x, y):
        reason = super().domain_violation(x, y)
        if reason:
            return reason
        n1 = self.F1.dim
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.F1.domain_violation(x[:n1], y[:n1]) or self.F2.domain_violation(x[n1:], y[n1:])

    def default_intervals(self):
        x1, y1 = self.F1.default_intervals()
        x2, y2 = self.F2.default_intervals()
        return x1 + x2, y1 + y2

    def describe(self) -> str:
        return f"warped({self.F1.describe()}, {self.F2.describe()}, {self.warp.describe()} on factor {self.warp_on})"


def warped_reduction(spec: ConvolutionSpec) -> Optional[WarpedProductMetric]:
    """
    Warped product form when one field is identically 1

    f1 == 1 gives sqrt(f2^2 F1^2 + F2^2); f2 == 1 gives sqrt(F1^2 + f1^2 F2^2).
    Other constants keep the convolution defined but return None.
    """
    for k, field in ((1, spec.f1), (2, spec.f2)):
        if field.is_constant and field.constant_value == 1.0:
            other = spec.f2 if k == 1 else spec.f1
            return WarpedProductMetric(spec.F1, spec.F2, warp=other, warp_on=2 if k == 1 else 1)
    for k, field in ((1, spec.f1), (2, spec.f2)):
        if field.is_constant:
            logger.info(f"f{k} is the constant {field.constant_value:g}, not 1; "
                        f"F^2 keeps the scaled form with factor {field.constant_value ** 2:g}")
    return None


class BlockTensor:
    """
    Block matrix assembled from the factor tensors

        [ f2^2 g1                  2 f1 f2 df1 df2^T ]
        [ 0                        f1^2 g2           ]

    Not symmetric; its quadratic form equals that of the symmetric part.
    """

    def __init__(self, top_left: np.ndarray, top_right: np.ndarray, bottom_left: np.ndarray, bottom_right: np.ndarray):
        self.top_left = top_left
        self.top_right = top_right
        self.bottom_left = bottom_left
        self.bottom_right = bottom_right

    @property
    def assembled(self) -> np.ndarray:
        return np.block([[self.top_left, self.top_right], [self.bottom_left, self.bottom_right]])

    @property
    def symmetrized(self) -> np.ndarray:
        a = self.assembled
        return 0.5 * (a + a.T)

    def quadratic_form(self, v: Sequence[float]) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ self.assembled @ v)


def block_tensor(spec: ConvolutionSpec, s: TangentSample) -> BlockTensor:
    """Block matrix at s from the factor fundamental tensors and the exact field gradients"""
    s = s.with_split(spec.n1)
    a, b = s.factor(1), s.factor(2)
    g1 = fundamental_tensor(spec.F1, a).g.entries
    g2 = fundamental_tensor(spec.F2, b).g.entries
    f1 = float(spec.f1.value(list(a.x)))
    f2 = float(spec.f2.value(list(b.x)))
    df1 = spec.f1.gradient_array(list(a.x))
    df2 = spec.f2.gradient_array(list(b.x))
    return BlockTensor(
        top_left=f2 * f2 * g1,
        top_right=2.0 * f1 * f2 * np.outer(df1, df2),
        bottom_left=np.zeros((spec.n2, spec.n1)),
        bottom_right=f1 * f1 * g2,
    )


class PositivityCheck(NamedTuple):
    condition_holds: bool
    quadratic_form: float
    lhs: float
    rhs: float


def check_positivity_condition(spec: ConvolutionSpec, s: TangentSample, v: Sequence[float],
                               block: Optional[BlockTensor] = None) -> PositivityCheck:
    """
    g1(v1, v1)/f1^2 + g2(v2, v2)/f2^2 > -(2/(f1 f2)) df1(v1) df2(v2)

    Both sides times f1^2 f2^2 give v^T Block v > 0, so the condition and the
    sign of the quadratic form agree.
    """
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (spec.n,) or not np.any(v):
        raise DomainError(f"v must be a nonzero vector of length {spec.n}")
    s = s.with_split(spec.n1)
    if block is None:
        block = block_tensor(spec, s)
    a, b = s.factor(1), s.factor(2)
    f1 = float(spec.f1.value(list(a.x)))
    f2 = float(spec.f2.value(list(b.x)))
    v1, v2 = v[:spec.n1], v[spec.n1:]
    g1 = block.top_left / (f2 * f2)
    g2 = block.bottom_right / (f1 * f1)
    lhs = float(v1 @ g1 @ v1) / (f1 * f1) + float(v2 @ g2 @ v2) / (f2 * f2)
    df1 = float(spec.f1.gradient_array(list(a.x)) @ v1)
    df2 = float(spec.f2.gradient_array(list(b.x)) @ v2)
    rhs = -2.0 / (f1 * f2) * df1 * df2
    return PositivityCheck(condition_holds=lhs > rhs, quadratic_form=block.quadratic_form(v), lhs=lhs, rhs=rhs)


class CrossTermBranch(str, Enum):
    CONSTANT_FACTOR = "constant_factor"
    GRADIENT_ORTHOGONAL = "gradient_orthogonal"
    CROSS_ACTIVE = "cross_active"


class CrossTermDiagnosis(NamedTuple):
    branch: CrossTermBranch
    evidence: Dict[str, Union[bool, int, float, str, List[float]]]
    witness: Optional[TangentSample]


def diagnose_cross_term_branch(spec: ConvolutionSpec, samples: Sequence[TangentSample],
                               tol: Tolerances = DEFAULT_TOLERANCES) -> CrossTermDiagnosis:
    """
    Which degenerate case the cross term falls into over the samples

    constant_factor: some f_k has zero gradient at every sample
    gradient_orthogonal: df1(y1) df2(y2) vanishes everywhere while both gradients do not
    cross_active: otherwise, with the sample of largest |df1(y1) df2(y2)| as witness
    """
    if not samples:
        raise DomainError("cross-term diagnosis needs at least one sample")
    zero = tol.gradient_zero
    max_grad = [0.0, 0.0]
    worst_pairing, witness = 0.0, None
    for s in samples:
        s = s.with_split(spec.n1)
        a, b = s.factor(1), s.factor(2)
        d1 = spec.f1.gradient_array(list(a.x))
        d2 = spec.f2.gradient_array(list(b.x))
        max_grad[0] = max(max_grad[0], float(np.max(np.abs(d1))))
        max_grad[1] = max(max_grad[1], float(np.max(np.abs(d2))))
        pairing = abs(float(d1 @ a.y) * float(d2 @ b.y))
        if pairing > worst_pairing:
            worst_pairing, witness = pairing, s

    evidence: Dict[str, Union[bool, int, float, str, List[float]]] = {
        "samples": len(samples),
        "max_abs_grad_f1": max_grad[0],
        "max_abs_grad_f2": max_grad[1],
        "max_abs_pairing": worst_pairing,
        "zero_tolerance": zero,
    }
    constant = [k for k in (1, 2) if max_grad[k - 1] <= zero]
    if constant:
        evidence["constant_factors"] = [float(k) for k in constant]
        for k in constant:
            field = spec.f1 if k == 1 else spec.f2
            if field.is_constant and field.constant_value != 1.0:
                evidence[f"f{k}_scale"] = float(field.constant_value)
        return CrossTermDiagnosis(CrossTermBranch.CONSTANT_FACTOR, evidence, None)
    if worst_pairing <= zero:
        return CrossTermDiagnosis(CrossTermBranch.GRADIENT_ORTHOGONAL, evidence, None)
    return CrossTermDiagnosis(CrossTermBranch.CROSS_ACTIVE, evidence, witness)
