"""
Tests for the FinslerMetric abstraction and the tensors derived from it
"""
import numpy as np
import pytest

from conftest import draw
from finsler.core.convolution import ConvolutionSpec, convolve
from finsler.core.errors import DomainError
from finsler.core.metric import (
    Provenance, TangentSample, cartan_tensor, check_homogeneity, check_strong_convexity,
    euler_residual, fundamental_tensor, gradient_field, gradient_identity_residual,
)
from finsler.core.scalar_field import ExpLinearField, MonomialField, ConstantField, NormSquaredPlusField
from finsler.core.zoo import (
    ConstRiemannMetric, EuclideanMetric, Example11Metric, Example41Metric, Example43Metric, KleinMetric,
    KNormMinkowskiMetric, OffsetMetric, QuarticMinkowskiMetric, RandersMetric,
)
from finsler.utils.finite_diff import fd_hessian

ZOO = [
    EuclideanMetric(3),
    ConstRiemannMetric([[2.0, 0.3], [0.3, 1.0]]),
    KleinMetric(3),
    QuarticMinkowskiMetric(3.0),
    KNormMinkowskiMetric(2.5, 2),
    RandersMetric(np.eye(2), [0.3, 0.4]),
    Example11Metric(3.0, 2),
    Example43Metric(5, 0.2),
]

HOMOGENEITY_ZOO = [m for m in ZOO if not isinstance(m, Example11Metric)] + [
    Example11Metric(lam, k) for lam in (2.0, 3.0, 4.0) for k in (1, 2, 3)
] + [
    Example41Metric([0.3, -0.2, 0.1], [0.2, 0.4]),
    convolve(ConvolutionSpec(KleinMetric(3), KleinMetric(2), ExpLinearField([0.3, -0.2, 0.1]),
                             ExpLinearField([0.2, 0.4]))),
]


def test_tangent_sample_is_read_only():
    s = TangentSample([0.1, 0.2], [1.0, 0.0])
    with pytest.raises(ValueError):
        s.x[0] = 3.0
    assert s.scaled(2.0).y.tolist() == [2.0, 0.0]
    assert s.reflected().y.tolist() == [-1.0, -0.0]


def test_tangent_sample_split():
    s = TangentSample.from_point([1, 2, 3, 4, 5, 6], split=1)
    assert s.factor(1).x.tolist() == [1.0]
    assert s.factor(2).y.tolist() == [5.0, 6.0]
    with pytest.raises(DomainError):
        TangentSample([1.0], [1.0, 2.0])


def test_klein_hand_value():
    m = KleinMetric(3)
    assert m.value(TangentSample([0.5, 0.0, 0.0], [1.0, 0.0, 0.0])) == pytest.approx(4.0 / 3.0, abs=1e-12)


def test_domain_violation_reported():
    m = KleinMetric(3)
    with pytest.raises(DomainError, match="domain violation"):
        m.value(TangentSample([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]))
    with pytest.raises(DomainError, match="slit"):
        m.value(TangentSample([0.0, 0.0, 0.0], [0.0, 0.0, 0.0]))
    assert not m.contains(TangentSample([0.6, 0.6, 0.6], [1.0, 0.0, 0.0]))


def test_euclidean_fundamental_tensor_is_identity():
    s = TangentSample([0.3, -1.0, 2.0], [1.0, 2.0, -0.5])
    t = fundamental_tensor(EuclideanMetric(3), s)
    assert t.provenance == Provenance.AUTODIFF
    np.testing.assert_allclose(t.g.entries, np.eye(3), atol=1e-14)
    assert t.strongly_convex
    assert cartan_tensor(EuclideanMetric(3), s).max_abs < 1e-9


@pytest.mark.parametrize("metric", ZOO, ids=lambda m: m.describe())
def test_autodiff_tensor_matches_finite_differences(metric):
    for s in draw(metric, count=20, seed=3):
        g = fundamental_tensor(metric, s).g.entries
        x = list(s.x)
        fd = 0.5 * fd_hessian(lambda ys: metric.norm_squared(x, ys), s.y, h=1e-3, richardson=True).entries
        np.testing.assert_allclose(g, fd, atol=1e-5 * max(1.0, np.max(np.abs(g))))


@pytest.mark.parametrize("metric", HOMOGENEITY_ZOO, ids=lambda m: m.describe())
def test_homogeneity_and_euler(metric):
    for s in draw(metric, count=1000, seed=1):
        report = check_homogeneity(metric, s)
        assert report.max_relative_error <= 1e-12
        assert euler_residual(metric, s) < 1e-9
        assert gradient_identity_residual(metric, s) < 1e-9


def test_offset_breaks_homogeneity():
    m = OffsetMetric(EuclideanMetric(2), 1.0)
    s = TangentSample([0.0, 0.0], [1.0, 0.0])
    report = check_homogeneity(m, s)
    # F(y/2) = 1.5 but F(y)/2 = 1
    assert report.max_relative_error == pytest.approx(0.5)
    assert report.worst_scale == 0.5
    assert euler_residual(m, s) > 0.1


def test_quartic_cartan_tensor():
    m = QuarticMinkowskiMetric(4.0)
    s = TangentSample([0.0, 0.0], [1.0, 0.5])
    cartan = cartan_tensor(m, s)
    assert cartan.max_abs > 1e-3
    # A(y, ., .) = 0 for every Finsler metric
    assert cartan.contraction_with_y() < 1e-6
    np.testing.assert_allclose(cartan.entries, np.transpose(cartan.entries, (1, 0, 2)), atol=1e-12)


def test_strong_convexity():
    assert check_strong_convexity(KleinMetric(2), TangentSample([0.2, 0.1], [1.0, 1.0])).is_positive
    report = check_strong_convexity(ConstRiemannMetric(np.diag([2.0, 3.0])), TangentSample([0.0, 0.0], [1.0, 0.0]))
    assert report.min_eig == pytest.approx(2.0)


def test_taylor_with_respect_to_x_and_y():
    m = KleinMetric(2)
    s = TangentSample([0.5, 0.0], [1.0, 0.0])
    res = m.taylor(s, wrt="xy")
    assert res.value == pytest.approx(4.0 / 3.0)
    # F(x, y) = 1 / (1 - x1^2) along y = e1, so dF/dx1 = 2 x1 / (1 - x1^2)^2
    assert res.gradient[0] == pytest.approx(1.0 / 0.5625, rel=1e-12)
    assert res.gradient.shape == (4,)
    with pytest.raises(ValueError):
        m.taylor(s, wrt="z")


def test_gradient_field():
    s = TangentSample([0.0, 0.0], [1.0, 2.0])
    grad = gradient_field(EuclideanMetric(2), ExpLinearField([0.5, -1.0]), s)
    np.testing.assert_allclose(grad, [0.5, -1.0], atol=1e-15)
    scaled = gradient_field(ConstRiemannMetric(np.diag([2.0, 4.0])), ExpLinearField([0.5, -1.0]), s)
    np.testing.assert_allclose(scaled, [0.25, -0.25], atol=1e-14)
    assert not np.any(gradient_field(EuclideanMetric(2), ConstantField(2, 3.0), s))


def test_scalar_fields():
    f = MonomialField(2, index=0, power=2.0, coeff=3.0)
    assert f.value([2.0, 5.0]) == pytest.approx(12.0)
    np.testing.assert_allclose(f.gradient_array([2.0, 5.0]), [12.0, 0.0])
    assert NormSquaredPlusField(2, 1.0).differential([1.0, 2.0], [1.0, 1.0]) == pytest.approx(6.0)
    assert ExpLinearField([0.0, 0.0]).constant_value == 1.0
    with pytest.raises(DomainError):
        MonomialField(1, index=0, power=1.0).value([-1.0])


def test_klein_squared_hessian_at_origin():
    m = KleinMetric(3)
    hess = fd_hessian(lambda ys: m.norm_squared([0.0, 0.0, 0.0], ys), [0.3, -0.5, 0.8], h=1e-4)
    np.testing.assert_allclose(hess.entries, 2.0 * np.eye(3), atol=1e-5)
