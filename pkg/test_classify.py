"""
Tests for the classification probes and report
"""
import numpy as np
import pytest

from conftest import draw, sampler
from finsler.core.convolution import ConvolutionSpec, convolve
from finsler.core.errors import DivisionDomain, InsufficientSamples
from finsler.core.metric import TangentSample
from finsler.core.scalar_field import ConstantField, ExpLinearField
from finsler.core.zoo import (
    ConstRiemannMetric, EuclideanMetric, Example11Metric, KleinMetric, QuarticMinkowskiMetric, RandersMetric,
)
from finsler.models.schemas import ClassificationReport, VerdictStatus
from finsler.services.classification_service import (
    ClassificationService, EUCLIDEAN_CONVENTION, check_randers_ratio, probe_euclidean, probe_minkowski,
    probe_randers, probe_riemannian, randers_ratio_residual,
)


def grid(metric, **domain):
    return sampler(metric, **domain).grid()


# ===== Riemannian =====

def test_klein_convolution_is_riemannian(klein_spec, tol):
    conv = convolve(klein_spec)
    verdict = probe_riemannian(conv, draw(conv, count=30), tol)
    assert verdict.status == VerdictStatus.POSITIVE
    assert verdict.evidence["max_abs_cartan"] < 1e-6


def test_quartic_minkowski_is_not_riemannian(tol):
    m = QuarticMinkowskiMetric(4.0)
    verdict = probe_riemannian(m, draw(m, count=30), tol)
    assert verdict.status == VerdictStatus.NEGATIVE
    assert verdict.deviation > 1e-3
    assert verdict.witness is not None


def test_quartic_with_lambda_two_is_riemannian(tol):
    m = QuarticMinkowskiMetric(2.0)
    assert probe_riemannian(m, draw(m, count=30), tol).positive


def test_riemannian_probe_needs_enough_samples(tol):
    m = EuclideanMetric(2)
    verdict = probe_riemannian(m, draw(m, count=5), tol)
    assert verdict.status == VerdictStatus.UNCLASSIFIED
    assert "30" in verdict.reason


# ===== Locally Minkowskian =====

def test_constant_field_minkowski_convolution_is_minkowskian(minkowski_spec, tol):
    conv = convolve(minkowski_spec)
    verdict = probe_minkowski(conv, grid(conv), tol)
    assert verdict.positive
    assert verdict.evidence["max_x_spread"] == 0.0
    assert verdict.evidence["directions"] == 6


def test_varying_field_breaks_minkowski(minkowski_spec, tol):
    spec = ConvolutionSpec(minkowski_spec.F1, minkowski_spec.F2, ExpLinearField([0.5, 0.0]), minkowski_spec.f2)
    conv = convolve(spec)
    assert probe_minkowski(conv, grid(conv), tol).status == VerdictStatus.NEGATIVE
    assert probe_minkowski(KleinMetric(2), grid(KleinMetric(2)), tol).status == VerdictStatus.NEGATIVE


# ===== Randers =====

def test_randers_metric_recovers_its_one_form(tol):
    m = RandersMetric(np.eye(2), [0.3, 0.4])
    verdict = probe_randers(m, grid(m), tol)
    assert verdict.positive
    np.testing.assert_allclose(verdict.evidence["b"], [0.3, 0.4], atol=1e-8)
    assert verdict.evidence["max_beta_norm"] == pytest.approx(0.5, abs=1e-8)


def test_euclidean_is_randers_with_zero_one_form(tol):
    m = EuclideanMetric(3)
    verdict = probe_randers(m, grid(m), tol)
    assert verdict.positive
    np.testing.assert_allclose(verdict.evidence["b"], [0.0, 0.0, 0.0], atol=1e-12)


def test_mismatched_randers_convolution_is_not_randers(tol):
    spec = ConvolutionSpec(
        RandersMetric(np.eye(2), [0.0, 0.0]),
        RandersMetric(np.eye(2), [0.5, 0.0]),
        ConstantField(2, 2.0),
        ConstantField(2, 3.0),
    )
    conv = convolve(spec)
    assert probe_randers(conv, grid(conv), tol).status == VerdictStatus.NEGATIVE


def test_randers_probe_needs_reflected_directions(tol):
    m = Example11Metric(3.0, 2)
    verdict = probe_randers(m, grid(m), tol)
    assert verdict.status == VerdictStatus.UNCLASSIFIED
    assert "y-reflection" in verdict.reason


def _ratio_samples(rng, count=20):
    """Samples where the second direction block is twice the first"""
    samples = []
    for _ in range(count):
        y1 = rng.uniform(-1.0, 1.0, 2)
        y1[0] = 0.5 if abs(y1[0]) < 0.1 else y1[0]
        samples.append(TangentSample(rng.uniform(-1.0, 1.0, 4), np.concatenate([y1, 2.0 * y1]), split=2))
    return samples


def test_randers_ratio_holds(rng, tol):
    factor = RandersMetric(np.eye(2), [0.5, 0.0])
    spec = ConvolutionSpec(factor, factor, ConstantField(2, 2.0), ConstantField(2, 3.0))
    verdict = check_randers_ratio(spec, _ratio_samples(rng), tol)
    assert verdict.positive
    assert verdict.evidence["max_ratio_residual"] < 1e-12
    assert verdict.evidence["combined_form_deviation"] < 1e-9


def test_randers_ratio_fails(rng, tol):
    spec = ConvolutionSpec(
        RandersMetric(np.eye(2), [0.0, 0.0]),
        RandersMetric(np.eye(2), [0.5, 0.0]),
        ConstantField(2, 2.0),
        ConstantField(2, 3.0),
    )
    verdict = check_randers_ratio(spec, _ratio_samples(rng), tol)
    assert verdict.status == VerdictStatus.NEGATIVE
    assert verdict.deviation == pytest.approx(1.0)
    assert "combined_form_deviation" not in verdict.evidence


def test_randers_ratio_needs_a_constant_field(rng, tol):
    factor = RandersMetric(np.eye(2), [0.5, 0.0])
    spec = ConvolutionSpec(factor, factor, ExpLinearField([0.1, 0.0]), ExpLinearField([0.0, 0.1]))
    assert check_randers_ratio(spec, _ratio_samples(rng), tol).status == VerdictStatus.UNCLASSIFIED


def test_ratio_residual():
    assert randers_ratio_residual(1.0, 0.5, 2.0, 1.0) == 0.0
    assert randers_ratio_residual(2.0, 1.0, 6.0, 1.5) == pytest.approx(randers_ratio_residual(1.0, 0.5, 2.0, 0.5))
    with pytest.raises(DivisionDomain):
        randers_ratio_residual(1.0, 0.0, 2.0, 0.0)


# ===== Euclidean =====

def test_euclidean_needs_a_grid_for_the_minkowski_probe(tol):
    m = EuclideanMetric(2)
    assert probe_euclidean(m, draw(m, count=30), tol).status == VerdictStatus.UNCLASSIFIED


def test_constant_matrix_is_euclidean_by_convention(tol):
    m = ConstRiemannMetric([[2.0, 0.3], [0.3, 1.0]])
    verdict = probe_euclidean(m, draw(m, count=30), tol, grid=grid(m))
    assert verdict.positive
    assert verdict.evidence["constant_matrix_spread"] < 1e-12


def test_klein_is_not_euclidean(tol):
    m = KleinMetric(2)
    verdict = probe_euclidean(m, draw(m, count=30), tol, grid=grid(m))
    assert verdict.status == VerdictStatus.NEGATIVE


# ===== Report =====

def test_euclidean_belongs_to_every_class(tol):
    m = EuclideanMetric(4)
    report = ClassificationService(tol).classify(m, sampler(m, count=40))
    assert report.classes == ["Riemannian", "LocallyMinkowskian", "Randers", "Euclidean"]
    assert report.convention == EUCLIDEAN_CONVENTION


def test_klein_convolution_report(klein_spec, tol):
    conv = convolve(klein_spec)
    report = ClassificationService(tol).classify(conv, sampler(conv, count=40))
    assert report.verdicts["riemannian"].positive
    assert report.verdicts["minkowski"].status == VerdictStatus.NEGATIVE
    assert "Riemannian" in report.classes
    assert "Euclidean" not in report.classes
    assert report.convolution.branch == "cross_active"
    assert report.convolution.constant_factors == []
    assert not report.convolution.warped_reduction


def test_minkowski_convolution_report(minkowski_spec, tol):
    conv = convolve(minkowski_spec)
    report = ClassificationService(tol).classify(conv, sampler(conv, count=40))
    assert report.classes == ["LocallyMinkowskian"]
    facts = report.convolution
    assert facts.branch == "constant_factor"
    assert facts.constant_factors == [1, 2]
    assert facts.evidence["f1_scale"] == 2.0
    assert facts.evidence["f2_scale"] == 0.5
    assert facts.randers_ratio is None


def test_example11_report(tol):
    m = Example11Metric(3.0, 2)
    report = ClassificationService(tol).classify(m, sampler(m, count=40, seed=3))
    assert report.family == "example11"
    assert report.seed == 3
    assert report.sample_count == 40
    assert report.classes == ["Unclassified"]
    assert report.verdicts["riemannian"].status == VerdictStatus.NEGATIVE
    assert report.verdicts["randers"].status == VerdictStatus.UNCLASSIFIED
    assert report.tolerances["derivative"] == tol.derivative
    assert report.convolution is None
    assert set(report.verdicts) >= {"riemannian", "minkowski", "randers", "euclidean", "homogeneity"}


def test_reports_are_deterministic(tol):
    m = QuarticMinkowskiMetric(3.0)
    first = ClassificationService(tol).classify(m, sampler(m, count=30, seed=9))
    second = ClassificationService(tol).classify(m, sampler(m, count=30, seed=9))
    assert first.model_dump_json() == second.model_dump_json()
    assert ClassificationReport.model_validate_json(first.model_dump_json()) == first


def test_tighter_tolerance_never_adds_a_class(tol):
    m = QuarticMinkowskiMetric(3.0)
    loose = ClassificationService(tol).classify(m, sampler(m, count=30))
    tight = ClassificationService(tol.updated({"derivative": 1e-12})).classify(m, sampler(m, count=30))
    for name, verdict in tight.verdicts.items():
        if verdict.positive:
            assert loose.verdicts[name].positive


def test_classify_needs_thirty_samples(tol):
    m = EuclideanMetric(2)
    with pytest.raises(InsufficientSamples):
        ClassificationService(tol).classify(m, sampler(m, count=10))


@pytest.mark.parametrize("f1, positive", [
    (ConstantField(2, 2.0), True),
    (ExpLinearField([1.0, 0.0]), False),
])
def test_euclidean_convolution(f1, positive, tol):
    conv = convolve(ConvolutionSpec(EuclideanMetric(2), EuclideanMetric(2), f1, ConstantField(2, 3.0)))
    verdict = probe_euclidean(conv, draw(conv, count=30), tol, grid=grid(conv))
    assert verdict.positive == positive


def test_klein_is_riemannian_but_not_minkowskian(tol):
    m = KleinMetric(2)
    report = ClassificationService(tol).classify(m, sampler(m, count=30))
    assert report.verdicts["riemannian"].positive
    assert report.verdicts["minkowski"].status == VerdictStatus.NEGATIVE


def test_riemannian_evidence_reports_cartan_asymmetry(tol):
    flat = EuclideanMetric(2)
    assert probe_riemannian(flat, draw(flat, count=30), tol).evidence["max_cartan_asymmetry"] == 0.0
    quartic = QuarticMinkowskiMetric(4.0)
    asymmetry = probe_riemannian(quartic, draw(quartic, count=30), tol).evidence["max_cartan_asymmetry"]
    assert 0.0 <= asymmetry < np.inf
