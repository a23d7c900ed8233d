"""
Pydantic models for run configurations and reports
"""
from enum import Enum
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)


# ===== Scalar fields =====

class ConstantFieldSpec(_Spec):
    """f(x) = c"""
    family: Literal["constant"] = "constant"
    dim: int = Field(..., gt=0, description="Dimension of the factor")
    c: float = Field(..., description="Constant value")


class ExpLinearFieldSpec(_Spec):
    """f(x) = exp(a . x)"""
    family: Literal["exp_linear"] = "exp_linear"
    a: List[float] = Field(..., min_length=1, description="Coefficients of the exponent")


class MonomialFieldSpec(_Spec):
    """f(x) = coeff * (x^index)^power"""
    family: Literal["monomial"] = "monomial"
    dim: int = Field(..., gt=0)
    index: int = Field(..., ge=0, description="Zero-based coordinate index")
    power: float
    coeff: float = 1.0


class NormSquaredPlusFieldSpec(_Spec):
    """f(x) = c + |x|^2"""
    family: Literal["norm_squared_plus"] = "norm_squared_plus"
    dim: int = Field(..., gt=0)
    c: float


ScalarFieldSpec = Annotated[
    Union[ConstantFieldSpec, ExpLinearFieldSpec, MonomialFieldSpec, NormSquaredPlusFieldSpec],
    Field(discriminator="family"),
]


# ===== Metrics =====

class EuclideanSpec(_Spec):
    family: Literal["euclidean"] = "euclidean"
    n: int = Field(..., gt=0)


class ConstRiemannSpec(_Spec):
    """sqrt(y^T A y) with a constant SPD matrix A"""
    family: Literal["const_riemann"] = "const_riemann"
    matrix: List[List[float]]


class KleinSpec(_Spec):
    family: Literal["klein"] = "klein"
    n: int = Field(..., gt=0)


class QuarticMinkowskiSpec(_Spec):
    """(y1^4 + lambda y1^2 y2^2 + y2^4)^(1/4)"""
    family: Literal["quartic_minkowski"] = "quartic_minkowski"
    lambda_: float = Field(..., alias="lambda")


class KNormMinkowskiSpec(_Spec):
    """[y1^2 + y2^2 + lambda (y1^2k + y2^2k)^(1/k)]^(1/2)"""
    family: Literal["knorm_minkowski"] = "knorm_minkowski"
    lambda_: float = Field(..., alias="lambda")
    k: int


class RandersSpec(_Spec):
    """alpha + beta with alpha = sqrt(a_ij y^i y^j), beta = (b + B x) . y"""
    family: Literal["randers"] = "randers"
    n: Optional[int] = Field(None, gt=0, description="Dimension when alpha is omitted (Euclidean alpha)")
    alpha: Optional[List[List[float]]] = Field(None, description="SPD matrix a_ij")
    b: List[float] = Field(..., description="Constant part of the 1-form")
    b_linear: Optional[List[List[float]]] = Field(None, description="Matrix B of the linear part")
    check_points: List[List[float]] = Field(default_factory=list, description="Base points where ||beta||_alpha < 1 is certified")


class Example11Spec(_Spec):
    """Four-dimensional quartic / k-norm convolution on x1, x3, y1, y3 > 0"""
    family: Literal["example11"] = "example11"
    lambda_: float = Field(..., alias="lambda")
    k: int


class Example41Spec(_Spec):
    """Closed-form Klein convolution on B^3 x B^2 via exp of linear functions"""
    family: Literal["example41"] = "example41"
    a1: List[float] = Field(..., min_length=3, max_length=3)
    a2: List[float] = Field(..., min_length=2, max_length=2)


class Example42Spec(_Spec):
    """Quartic and k-norm Minkowski norms convolved via constants"""
    family: Literal["example42"] = "example42"
    lambda_: float = Field(..., alias="lambda")
    k: int
    c1: float = 1.0
    c2: float = 1.0


class Example43Spec(_Spec):
    """Randers-type convolution on R^3 x B^(n-3)"""
    family: Literal["example43"] = "example43"
    n: int = Field(..., ge=4)
    epsilon: float


class OffsetSpec(_Spec):
    """F + shift; breaks homogeneity on purpose"""
    family: Literal["offset"] = "offset"
    base: "MetricSpec"
    shift: float = 1.0


class ConvolutionNodeSpec(_Spec):
    family: Literal["convolution"] = "convolution"
    F1: "MetricSpec"
    F2: "MetricSpec"
    f1: ScalarFieldSpec
    f2: ScalarFieldSpec


ZooSpec = Union[
    EuclideanSpec, ConstRiemannSpec, KleinSpec, QuarticMinkowskiSpec, KNormMinkowskiSpec,
    RandersSpec, Example11Spec, Example41Spec, Example42Spec, Example43Spec,
]

MetricSpec = Annotated[
    Union[
        EuclideanSpec, ConstRiemannSpec, KleinSpec, QuarticMinkowskiSpec, KNormMinkowskiSpec,
        RandersSpec, Example11Spec, Example41Spec, Example42Spec, Example43Spec,
        OffsetSpec, ConvolutionNodeSpec,
    ],
    Field(discriminator="family"),
]

OffsetSpec.model_rebuild()
ConvolutionNodeSpec.model_rebuild()


def spec_depth(spec) -> int:
    """Nesting depth of convolution / offset nodes (a zoo leaf has depth 0)"""
    if isinstance(spec, ConvolutionNodeSpec):
        return 1 + max(spec_depth(spec.F1), spec_depth(spec.F2))
    if isinstance(spec, OffsetSpec):
        return 1 + spec_depth(spec.base)
    return 0


# ===== Run configuration =====

class SampleDomainSpec(_Spec):
    """Where and how many samples to draw"""
    x_intervals: Optional[List[Tuple[float, float]]] = Field(None, description="Per-coordinate [lo, hi] for x")
    y_intervals: Optional[List[Tuple[float, float]]] = Field(None, description="Per-coordinate [lo, hi] for y")
    count: int = Field(200, gt=0, description="Number of valid samples")
    seed: int = Field(0, ge=0, description="PCG64 seed")
    grid_x: int = Field(10, ge=1, description="Base points in probe grids")
    grid_y: int = Field(6, ge=1, description="Shared directions in probe grids")
    directions: int = Field(4, ge=1, description="Random vectors per sample for the positivity condition")
    max_attempts: int = Field(100, gt=0, description="Rejection attempts per requested sample")

    @field_validator("x_intervals", "y_intervals")
    @classmethod
    def check_intervals(cls, v):
        """Each interval must satisfy lo <= hi"""
        if v is not None:
            for lo, hi in v:
                if lo > hi:
                    raise ValueError(f"interval [{lo}, {hi}] is empty")
        return v


class RunConfig(_Spec):
    metric: MetricSpec
    sampling: SampleDomainSpec = Field(default_factory=SampleDomainSpec)
    tolerances: Dict[str, float] = Field(default_factory=dict)
    output_format: Literal["table", "machine"] = Field("table", alias="format")
    point: Optional[List[float]] = Field(None, description="Concatenated (x, y) for eval/tensor")
    compare_block: bool = False
    gradient: bool = False


# ===== Reports =====

class Witness(BaseModel):
    x: List[float]
    y: List[float]
    detail: str = ""


class EvalReport(BaseModel):
    family: str
    x: List[float]
    y: List[float]
    F: float
    gradient_y: Optional[List[float]] = None
    gradient_x: Optional[List[float]] = None


class BlockReport(BaseModel):
    top_left: List[List[float]]
    top_right: List[List[float]]
    bottom_left: List[List[float]]
    bottom_right: List[List[float]]
    symmetrized: List[List[float]]
    max_symmetrization_deviation: float


class TensorReport(BaseModel):
    family: str
    x: List[float]
    y: List[float]
    provenance: str
    g: List[List[float]]
    min_eigenvalue: float
    strongly_convex: bool
    block: Optional[BlockReport] = None


class PropertyResult(BaseModel):
    name: str
    passed: bool
    tolerance: Optional[float] = None
    max_deviation: Optional[float] = None
    checked: int = 0
    violations: int = 0
    witnesses: List[Witness] = Field(default_factory=list)


class CheckReport(BaseModel):
    family: str
    seed: int
    sample_count: int
    skipped: int
    passed: bool
    properties: List[PropertyResult]


class VerdictStatus(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNCLASSIFIED = "unclassified"


EvidenceValue = Union[bool, int, float, str, List[float]]


class ProbeVerdict(BaseModel):
    name: str
    status: VerdictStatus
    deviation: Optional[float] = None
    tolerance: Optional[float] = None
    samples_used: int = 0
    skipped: int = 0
    reason: Optional[str] = None
    witness: Optional[Witness] = None
    evidence: Dict[str, EvidenceValue] = Field(default_factory=dict)

    @property
    def positive(self) -> bool:
        return self.status == VerdictStatus.POSITIVE


class ConvolutionFacts(BaseModel):
    branch: str
    constant_factors: List[int]
    warped_reduction: bool
    evidence: Dict[str, EvidenceValue] = Field(default_factory=dict)
    randers_ratio: Optional[ProbeVerdict] = None


class ClassificationReport(BaseModel):
    family: str
    seed: int
    sample_count: int
    skipped: int
    tolerances: Dict[str, float]
    verdicts: Dict[str, ProbeVerdict]
    classes: List[str]
    convention: str
    convolution: Optional[ConvolutionFacts] = None
