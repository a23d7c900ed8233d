"""
Shared pytest fixtures
"""
from pathlib import Path

import numpy as np
import pytest

from finsler.config import DEFAULT_TOLERANCES
from finsler.core.convolution import ConvolutionSpec
from finsler.core.scalar_field import ConstantField, ExpLinearField
from finsler.core.zoo import KleinMetric, KNormMinkowskiMetric, QuarticMinkowskiMetric
from finsler.models.schemas import SampleDomainSpec
from finsler.services.sampling_service import DomainSampler

DATA_DIR = Path(__file__).parent / "data"


def draw(metric, count=50, seed=0, **domain):
    """Seeded valid samples from the metric's default chart box"""
    return DomainSampler(SampleDomainSpec(count=count, seed=seed, **domain), metric).samples()


def sampler(metric, count=50, seed=0, **domain):
    return DomainSampler(SampleDomainSpec(count=count, seed=seed, **domain), metric)


@pytest.fixture
def tol():
    return DEFAULT_TOLERANCES


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def klein_spec():
    """Klein(3) x Klein(2) coupled by exponentials of linear functions"""
    return ConvolutionSpec(
        F1=KleinMetric(3),
        F2=KleinMetric(2),
        f1=ExpLinearField([0.3, -0.2, 0.1]),
        f2=ExpLinearField([0.2, 0.4]),
    )


@pytest.fixture
def minkowski_spec():
    """Quartic and k-norm Minkowski norms coupled by constants"""
    return ConvolutionSpec(
        F1=QuarticMinkowskiMetric(3),
        F2=KNormMinkowskiMetric(3, 2),
        f1=ConstantField(2, 2.0),
        f2=ConstantField(2, 0.5),
    )
