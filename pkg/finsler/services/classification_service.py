"""
Classification service - numerical probes for Riemannian, locally Minkowskian,
Randers and Euclidean metrics

Each probe certifies its class only at sampled resolution: it reports the
largest deviation it saw and compares it with a tolerance. A smaller tolerance
never turns a negative verdict into a positive one.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from finsler.config import DEFAULT_TOLERANCES, Tolerances
from finsler.core.convolution import (
    ConvolutionMetric, ConvolutionSpec, convolve, diagnose_cross_term_branch, warped_reduction,
)
from finsler.core.errors import DivisionDomain, DomainError, InsufficientSamples, SingularMatrix
from finsler.core.metric import (
    FinslerMetric, TangentSample, cartan_tensor, check_homogeneity, fundamental_tensor,
)
from finsler.core.zoo import RandersMetric, randers_decompose
from finsler.models.schemas import (
    ClassificationReport, ConvolutionFacts, EvidenceValue, ProbeVerdict, VerdictStatus, Witness,
)
from finsler.services.sample_runner import SampleRunner
from finsler.services.sampling_service import DomainSampler, SampleGrid
from finsler.utils.linalg import sym_inverse
from finsler.utils.taylor import power, taylor2_eval

logger = logging.getLogger(__name__)

MIN_SAMPLES = 30
MIN_BASE_POINTS = 10

EUCLIDEAN_CONVENTION = (
    "euclidean means flat with constant coefficients: any constant positive-definite "
    "matrix, Euclidean up to a linear change of coordinates"
)

CLASS_NAMES = {
    "riemannian": "Riemannian",
    "minkowski": "LocallyMinkowskian",
    "randers": "Randers",
    "euclidean": "Euclidean",
}


def _witness(s: TangentSample, detail: str = "") -> Witness:
    return Witness(x=s.x.tolist(), y=s.y.tolist(), detail=detail)


def _verdict(name: str, deviation: float, tolerance: float, used: int, skipped: int,
             worst: Optional[TangentSample] = None, evidence: Optional[Dict[str, EvidenceValue]] = None,
             passed: Optional[bool] = None) -> ProbeVerdict:
    if passed is None:
        passed = deviation < tolerance
    return ProbeVerdict(
        name=name,
        status=VerdictStatus.POSITIVE if passed else VerdictStatus.NEGATIVE,
        deviation=deviation,
        tolerance=tolerance,
        samples_used=used,
        skipped=skipped,
        witness=None if passed or worst is None else _witness(worst, f"deviation {deviation:.3e}"),
        evidence=evidence or {},
    )


def _unclassified(name: str, reason: str, tolerance: Optional[float] = None, used: int = 0,
                  skipped: int = 0) -> ProbeVerdict:
    logger.info(f"{name} probe unclassified: {reason}")
    return ProbeVerdict(name=name, status=VerdictStatus.UNCLASSIFIED, tolerance=tolerance,
                        samples_used=used, skipped=skipped, reason=reason)


def _tensor_spread(tensors: Sequence[np.ndarray]) -> float:
    stack = np.stack(tensors)
    return float(np.max(stack.max(axis=0) - stack.min(axis=0)))


# ===== Riemannian =====

def probe_riemannian(m: FinslerMetric, samples: Sequence[TangentSample], tol: Tolerances = DEFAULT_TOLERANCES,
                     runner: Optional[SampleRunner] = None) -> ProbeVerdict:
    """Positive iff max |Cartan tensor| over the samples stays below tol.derivative"""
    if len(samples) < MIN_SAMPLES:
        return _unclassified("riemannian", f"needs at least {MIN_SAMPLES} samples, got {len(samples)}",
                             tol.derivative)
    runner = runner or SampleRunner()

    def cartan_size(s: TangentSample) -> Optional[Tuple[float, float]]:
        try:
            cartan = cartan_tensor(m, s, tol)
            return cartan.max_abs, cartan.asymmetry
        except (DomainError, SingularMatrix) as e:
            logger.debug(f"cartan tensor skipped at {s!r}: {e}")
            return None

    sizes = runner.map(cartan_size, samples, desc="cartan")
    used = [(s, a) for s, a in zip(samples, sizes) if a is not None]
    skipped = len(samples) - len(used)
    if not used:
        return _unclassified("riemannian", "no sample admitted a Cartan tensor", tol.derivative, skipped=skipped)
    worst, (deviation, _) = used[0]
    for s, (a, _) in used:
        if a > deviation:
            worst, deviation = s, a
    # spread between the raw finite-difference Cartan tensor and its symmetrization
    asymmetry = max(a for _, (_, a) in used)
    if asymmetry > tol.derivative:
        logger.warning(f"cartan tensor asymmetry {asymmetry:.3e} exceeds {tol.derivative:g} ({m.describe()})")
    return _verdict("riemannian", deviation, tol.derivative, len(used), skipped, worst,
                    {"max_abs_cartan": deviation, "max_cartan_asymmetry": asymmetry})


# ===== Locally Minkowskian =====

def probe_minkowski(m: FinslerMetric, grid: SampleGrid, tol: Tolerances = DEFAULT_TOLERANCES,
                    runner: Optional[SampleRunner] = None) -> ProbeVerdict:
    """Positive iff, for every shared direction, g varies across base points by less than tol.derivative"""
    if len(grid.xs) < MIN_BASE_POINTS:
        return _unclassified("minkowski", f"needs at least {MIN_BASE_POINTS} base points, got {len(grid.xs)}",
                             tol.derivative)
    runner = runner or SampleRunner()

    def tensor(s: TangentSample) -> Optional[np.ndarray]:
        try:
            return fundamental_tensor(m, s).g.entries
        except (DomainError, SingularMatrix) as e:
            logger.debug(f"fundamental tensor skipped at {s!r}: {e}")
            return None

    flat = grid.flat()
    values = runner.map(tensor, flat, desc="minkowski")
    n_y = len(grid.ys)
    skipped = sum(v is None for v in values)
    deviation, worst, used = 0.0, None, 0
    for j in range(n_y):
        column = [(grid.samples[i][j], values[i * n_y + j]) for i in range(len(grid.xs))]
        column = [(s, g) for s, g in column if g is not None]
        if len(column) < 2:
            continue
        used += len(column)
        spread = _tensor_spread([g for _, g in column])
        if worst is None or spread > deviation:
            deviation, worst = spread, column[0][0]
    if worst is None:
        return _unclassified("minkowski", "no shared direction admitted two base points", tol.derivative,
                             skipped=skipped)
    return _verdict("minkowski", deviation, tol.derivative, used, skipped, worst,
                    {"max_x_spread": deviation, "base_points": len(grid.xs), "directions": n_y})


# ===== Randers =====

def _half_hessian_of_even_part_squared(m: FinslerMetric, s: TangentSample) -> np.ndarray:
    """1/2 Hess_y of ((F(y) + F(-y)) / 2)^2"""
    x = list(s.x)
    result = taylor2_eval(lambda ys: power(0.5 * (m.norm(x, ys) + m.norm(x, [-v for v in ys])), 2), s.y)
    return 0.5 * result.hessian


def probe_randers(m: FinslerMetric, grid: SampleGrid, tol: Tolerances = DEFAULT_TOLERANCES) -> ProbeVerdict:
    """
    Positive iff the even/odd split F = alpha + beta has
    (a) beta linear in y, (b) alpha^2 quadratic in y and (c) ||beta||_alpha < 1
    at every base point of the grid
    """
    ys = np.stack(grid.ys)
    linear_residual, hessian_spread, max_beta_norm = 0.0, 0.0, 0.0
    worst: Optional[TangentSample] = None
    worst_score = 0.0
    first_b: Optional[List[float]] = None
    used = 0
    for row in grid.samples:
        try:
            parts = [randers_decompose(m, s) for s in row]
            hessians = [_half_hessian_of_even_part_squared(m, s) for s in row]
        except DomainError as e:
            return _unclassified("randers", str(e), tol.derivative, used=used)
        alpha = np.array([p.alpha for p in parts])
        beta = np.array([p.beta for p in parts])
        b, *_ = np.linalg.lstsq(ys, beta, rcond=None)
        residual = float(np.max(np.abs(ys @ b - beta))) / float(np.max(alpha))
        spread = _tensor_spread(hessians)
        a = np.mean(hessians, axis=0)
        try:
            a_inv = sym_inverse(0.5 * (a + a.T), tol.singular_pivot).entries
        except SingularMatrix as e:
            return _unclassified("randers", f"alpha is degenerate: {e}", tol.derivative, used=used)
        beta_norm = float(np.sqrt(max(0.0, b @ a_inv @ b)))
        if first_b is None:
            first_b = b.tolist()
        score = max(residual, spread, 1.0 if beta_norm >= 1.0 else 0.0)
        if worst is None or score > worst_score:
            worst, worst_score = row[0], score
        linear_residual = max(linear_residual, residual)
        hessian_spread = max(hessian_spread, spread)
        max_beta_norm = max(max_beta_norm, beta_norm)
        used += len(row)

    deviation = max(linear_residual, hessian_spread)
    passed = deviation < tol.derivative and max_beta_norm < 1.0
    evidence: Dict[str, EvidenceValue] = {
        "linear_fit_residual": linear_residual,
        "alpha_hessian_spread": hessian_spread,
        "max_beta_norm": max_beta_norm,
        "b": first_b or [],
    }
    return _verdict("randers", deviation, tol.derivative, used, 0, worst, evidence, passed=passed)


def randers_ratio_residual(alpha1: float, beta1: float, alpha2: float, beta2: float) -> float:
    """|a1 b2 - a2 b1| / (|a1 b2| + |a2 b1|)"""
    denominator = abs(alpha1 * beta2) + abs(alpha2 * beta1)
    if denominator == 0.0:
        raise DivisionDomain("ratio undefined: both beta parts vanish")
    return abs(alpha1 * beta2 - alpha2 * beta1) / denominator


def check_randers_ratio(spec: ConvolutionSpec, samples: Sequence[TangentSample],
                        tol: Tolerances = DEFAULT_TOLERANCES) -> ProbeVerdict:
    """
    alpha1 / alpha2 = beta1 / beta2 across the samples

    When it holds, alpha = sqrt(a1*^2 + a2*^2) and beta = +-sqrt(b1*^2 + b2*^2)
    with a1* = f2 alpha1, b1* = f2 beta1, a2* = f1 alpha2, b2* = f1 beta2 must
    reproduce the convolution as alpha + beta.
    """
    if not (spec.f1.is_constant or spec.f2.is_constant):
        return _unclassified("randers_ratio", "neither field is constant", tol.algebraic)
    metric = convolve(spec)
    deviation, worst, used, skipped = 0.0, None, [], 0
    for s in samples:
        s = s.with_split(spec.n1)
        try:
            a1, b1 = randers_decompose(spec.F1, s.factor(1))
            a2, b2 = randers_decompose(spec.F2, s.factor(2))
            residual = randers_ratio_residual(a1, b1, a2, b2)
        except DomainError as e:
            skipped += 1
            logger.debug(f"ratio skipped at {s!r}: {e}")
            continue
        used.append((s, a1, b1, a2, b2))
        if worst is None or residual > deviation:
            deviation, worst = residual, s
    if not used:
        return _unclassified("randers_ratio", "no sample with a defined ratio", tol.algebraic, skipped=skipped)

    evidence: Dict[str, EvidenceValue] = {"max_ratio_residual": deviation}
    holds = deviation < tol.algebraic
    if holds:
        combined = 0.0
        for s, a1, b1, a2, b2 in used:
            f1 = float(spec.f1.value(list(s.factor(1).x)))
            f2 = float(spec.f2.value(list(s.factor(2).x)))
            a1s, b1s, a2s, b2s = f2 * a1, f2 * b1, f1 * a2, f1 * b2
            alpha = np.hypot(a1s, a2s)
            beta = np.copysign(np.hypot(b1s, b2s), a1s * b1s + a2s * b2s)
            F = metric.value(s)
            combined = max(combined, abs(alpha + beta - F) / F)
        evidence["combined_form_deviation"] = float(combined)
        holds = combined < tol.algebraic
    return _verdict("randers_ratio", deviation, tol.algebraic, len(used), skipped, worst, evidence, passed=holds)


# ===== Euclidean =====

def probe_euclidean(m: FinslerMetric, samples: Sequence[TangentSample], tol: Tolerances = DEFAULT_TOLERANCES,
                    riemannian: Optional[ProbeVerdict] = None, minkowski: Optional[ProbeVerdict] = None,
                    grid: Optional[SampleGrid] = None) -> ProbeVerdict:
    """Positive iff Riemannian, locally Minkowskian and g is one constant matrix over all samples"""
    if riemannian is None:
        riemannian = probe_riemannian(m, samples, tol)
    if minkowski is None:
        if grid is None:
            return _unclassified("euclidean", "no sample grid for the Minkowski probe", tol.derivative)
        minkowski = probe_minkowski(m, grid, tol)
    evidence: Dict[str, EvidenceValue] = {
        "riemannian": riemannian.status.value,
        "minkowski": minkowski.status.value,
    }
    if riemannian.status == VerdictStatus.UNCLASSIFIED or minkowski.status == VerdictStatus.UNCLASSIFIED:
        return _unclassified("euclidean", "a base probe is unclassified", tol.derivative)

    tensors, kept, skipped = [], [], 0
    for s in samples:
        try:
            tensors.append(fundamental_tensor(m, s).g.entries)
            kept.append(s)
        except (DomainError, SingularMatrix):
            skipped += 1
    if not tensors:
        return _unclassified("euclidean", "no sample admitted a fundamental tensor", tol.derivative,
                             skipped=skipped)
    spread = _tensor_spread(tensors)
    evidence["constant_matrix_spread"] = spread
    passed = riemannian.positive and minkowski.positive and spread < tol.derivative
    deviation = max(spread, riemannian.deviation or 0.0, minkowski.deviation or 0.0)
    return _verdict("euclidean", deviation, tol.derivative, len(kept), skipped, kept[0], evidence, passed=passed)


# ===== Sanity verdicts =====

def probe_homogeneity(m: FinslerMetric, samples: Sequence[TangentSample],
                      tol: Tolerances = DEFAULT_TOLERANCES) -> ProbeVerdict:
    deviation, worst, used, skipped = 0.0, None, 0, 0
    for s in samples:
        try:
            err = check_homogeneity(m, s).max_relative_error
        except (DomainError, SingularMatrix):
            skipped += 1
            continue
        used += 1
        if worst is None or err > deviation:
            deviation, worst = err, s
    if not used:
        return _unclassified("homogeneity", "no sample could be evaluated", tol.homogeneity, skipped=skipped)
    return _verdict("homogeneity", deviation, tol.homogeneity, used, skipped, worst)


def probe_strong_convexity(m: FinslerMetric, samples: Sequence[TangentSample],
                           tol: Tolerances = DEFAULT_TOLERANCES) -> ProbeVerdict:
    lowest, worst, used, skipped = None, None, 0, 0
    for s in samples:
        try:
            lam = fundamental_tensor(m, s).min_eigenvalue
        except (DomainError, SingularMatrix):
            skipped += 1
            continue
        used += 1
        if lowest is None or lam < lowest:
            lowest, worst = lam, s
    if lowest is None:
        return _unclassified("strong_convexity", "no sample could be evaluated", skipped=skipped)
    return _verdict("strong_convexity", max(0.0, -lowest), 0.0, used, skipped, worst,
                    {"min_eigenvalue": lowest}, passed=lowest > 0.0)


# ===== Convolution facts =====

def convolution_facts(spec: ConvolutionSpec, samples: Sequence[TangentSample],
                      tol: Tolerances = DEFAULT_TOLERANCES) -> ConvolutionFacts:
    """Facts about the fields and factors that the assembled metric alone does not show"""
    diagnosis = diagnose_cross_term_branch(spec, samples, tol)
    constant = [k for k, f in ((1, spec.f1), (2, spec.f2)) if f.is_constant]
    ratio = None
    if constant and isinstance(spec.F1, RandersMetric) and isinstance(spec.F2, RandersMetric):
        ratio = check_randers_ratio(spec, samples, tol)
    return ConvolutionFacts(
        branch=diagnosis.branch.value,
        constant_factors=constant,
        warped_reduction=warped_reduction(spec) is not None,
        evidence=dict(diagnosis.evidence),
        randers_ratio=ratio,
    )


class ClassificationService:
    """Runs every probe over one sampled domain and assembles the report"""

    def __init__(self, tolerances: Tolerances = DEFAULT_TOLERANCES, runner: Optional[SampleRunner] = None):
        self.tol = tolerances
        self.runner = runner or SampleRunner()

    def classify(self, m: FinslerMetric, sampler: DomainSampler) -> ClassificationReport:
        """
        Classify a metric

        Raises:
            InsufficientSamples: fewer than 30 valid samples
        """
        tol = self.tol
        samples = sampler.samples(minimum=MIN_SAMPLES)
        logger.info(f"Classifying {m.describe()} on {len(samples)} sample(s)")

        verdicts: Dict[str, ProbeVerdict] = {}
        verdicts["riemannian"] = probe_riemannian(m, samples, tol, self.runner)
        try:
            grid = sampler.grid()
        except InsufficientSamples as e:
            grid = None
            verdicts["minkowski"] = _unclassified("minkowski", str(e), tol.derivative)
            verdicts["randers"] = _unclassified("randers", str(e), tol.derivative)
        if grid is not None:
            verdicts["minkowski"] = probe_minkowski(m, grid, tol, self.runner)
            verdicts["randers"] = probe_randers(m, grid, tol)
        verdicts["euclidean"] = probe_euclidean(m, samples, tol, verdicts["riemannian"], verdicts["minkowski"])
        verdicts["homogeneity"] = probe_homogeneity(m, samples, tol)
        verdicts["strong_convexity"] = probe_strong_convexity(m, samples, tol)

        # probe_euclidean is only positive on top of both base verdicts
        classes = [label for key, label in CLASS_NAMES.items() if verdicts[key].positive]

        facts = None
        if isinstance(m, ConvolutionMetric):
            facts = convolution_facts(m.spec, samples, tol)

        report = ClassificationReport(
            family=m.family,
            seed=sampler.domain.seed,
            sample_count=len(samples),
            skipped=sampler.rejected,
            tolerances=tol.model_dump(),
            verdicts=verdicts,
            classes=classes or ["Unclassified"],
            convention=EUCLIDEAN_CONVENTION,
            convolution=facts,
        )
        logger.info(f"Classified {m.describe()} as {', '.join(report.classes)}")
        return report
