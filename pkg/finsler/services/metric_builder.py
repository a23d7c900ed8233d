"""
Metric builder - turns declarative metric specs into metric objects
"""
import logging
from typing import Optional

from finsler.config import settings
from finsler.core.convolution import ConvolutionSpec, convolve
from finsler.core.errors import InvalidParameter
from finsler.core.metric import FinslerMetric
from finsler.core.scalar_field import (
    ConstantField, ExpLinearField, MonomialField, NormSquaredPlusField, ScalarField,
)
from finsler.core.zoo import OffsetMetric, build
from finsler.models import schemas

logger = logging.getLogger(__name__)


def build_scalar_field(spec) -> ScalarField:
    """Build a scalar field from its spec"""
    if isinstance(spec, schemas.ConstantFieldSpec):
        return ConstantField(spec.dim, spec.c)
    if isinstance(spec, schemas.ExpLinearFieldSpec):
        return ExpLinearField(spec.a)
    if isinstance(spec, schemas.MonomialFieldSpec):
        return MonomialField(spec.dim, spec.index, spec.power, spec.coeff)
    if isinstance(spec, schemas.NormSquaredPlusFieldSpec):
        return NormSquaredPlusField(spec.dim, spec.c)
    raise InvalidParameter(f"unknown scalar field spec {type(spec).__name__}")


def build_convolution_spec(spec: schemas.ConvolutionNodeSpec, max_depth: Optional[int] = None) -> ConvolutionSpec:
    """Factors and fields of a convolution node"""
    return ConvolutionSpec(
        F1=build_metric(spec.F1, max_depth),
        F2=build_metric(spec.F2, max_depth),
        f1=build_scalar_field(spec.f1),
        f2=build_scalar_field(spec.f2),
    )


def build_metric(spec, max_depth: Optional[int] = None) -> FinslerMetric:
    """
    Build a metric from a (possibly nested) metric spec

    Args:
        spec: zoo, offset or convolution spec
        max_depth: nesting limit for convolution / offset nodes (settings.max_spec_depth by default)

    Raises:
        InvalidParameter: nesting too deep or parameters out of range
    """
    if max_depth is None:
        max_depth = settings.max_spec_depth
    depth = schemas.spec_depth(spec)
    if depth > max_depth:
        raise InvalidParameter(f"metric spec nests {depth} levels, the limit is {max_depth}")

    if isinstance(spec, schemas.ConvolutionNodeSpec):
        metric = convolve(build_convolution_spec(spec, max_depth))
    elif isinstance(spec, schemas.OffsetSpec):
        metric = OffsetMetric(build_metric(spec.base, max_depth), spec.shift)
    else:
        metric = build(spec)
    logger.debug(f"Built {metric.describe()}")
    return metric
