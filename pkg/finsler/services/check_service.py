"""
Check service - property suite over a sampled domain
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from finsler.config import DEFAULT_TOLERANCES, Tolerances
from finsler.core.convolution import ConvolutionMetric, block_tensor, check_positivity_condition
from finsler.core.errors import DomainError, NonPositive, SingularMatrix
from finsler.core.metric import (
    FinslerMetric, TangentSample, check_homogeneity, euler_residual,
    fundamental_tensor, gradient_identity_residual,
)
from finsler.models.schemas import CheckReport, PropertyResult, Witness
from finsler.services.sample_runner import SampleRunner
from finsler.services.sampling_service import DomainSampler

logger = logging.getLogger(__name__)

MAX_WITNESSES = 5


def witness(s: TangentSample, detail: str = "") -> Witness:
    return Witness(x=s.x.tolist(), y=s.y.tolist(), detail=detail)


@dataclass
class SampleOutcome:
    """Measurements taken at one sample"""
    sample: TangentSample
    measures: Dict[str, float] = field(default_factory=dict)
    disagreements: int = 0
    directions: int = 0
    non_positive: Optional[str] = None
    skipped: Optional[str] = None


@dataclass
class _Tally:
    name: str
    tolerance: Optional[float]
    worst: float = 0.0
    worst_sample: Optional[TangentSample] = None
    checked: int = 0
    violations: int = 0
    witnesses: List[Witness] = field(default_factory=list)

    def add(self, s: TangentSample, deviation: float, failed: bool, detail: str) -> None:
        self.checked += 1
        if self.worst_sample is None or deviation > self.worst:
            self.worst, self.worst_sample = deviation, s
        if failed:
            self.violations += 1
            if len(self.witnesses) < MAX_WITNESSES:
                self.witnesses.append(witness(s, detail))

    def result(self) -> PropertyResult:
        witnesses = list(self.witnesses)
        if not witnesses and self.worst_sample is not None:
            witnesses = [witness(self.worst_sample, "worst sample")]
        return PropertyResult(
            name=self.name,
            passed=self.violations == 0,
            tolerance=self.tolerance,
            max_deviation=self.worst if self.checked else None,
            checked=self.checked,
            violations=self.violations,
            witnesses=witnesses,
        )


class CheckService:
    """
    Runs homogeneity, Euler, strong convexity and, for convolution metrics,
    positivity-condition, cross-term and F^2 > 0 checks over samples
    """

    def __init__(self, tolerances: Tolerances = DEFAULT_TOLERANCES, runner: Optional[SampleRunner] = None):
        self.tol = tolerances
        self.runner = runner or SampleRunner()

    def _evaluate(self, metric: FinslerMetric, item: Tuple[TangentSample, np.ndarray]) -> SampleOutcome:
        s, directions = item
        outcome = SampleOutcome(sample=s)
        tol = self.tol

        if isinstance(metric, ConvolutionMetric):
            try:
                block = block_tensor(metric.spec, s)
                for v in directions:
                    check = check_positivity_condition(metric.spec, s, v, block)
                    # ties within rounding carry no sign information
                    if abs(check.lhs - check.rhs) <= tol.algebraic * (abs(check.lhs) + abs(check.rhs)):
                        continue
                    outcome.directions += 1
                    if check.condition_holds != (check.quadratic_form > 0.0):
                        outcome.disagreements += 1
            except (DomainError, SingularMatrix) as e:
                logger.debug(f"positivity condition unavailable at {s!r}: {e}")

        try:
            metric.validate(s)
            hom = check_homogeneity(metric, s)
            g = fundamental_tensor(metric, s)
            g_scale = max(1.0, float(np.max(np.abs(g.g.entries))))
            outcome.measures["homogeneity"] = max(hom.max_relative_error, hom.max_tensor_deviation / g_scale)
            outcome.measures["euler"] = euler_residual(metric, s)
            outcome.measures["gradient_identity"] = gradient_identity_residual(metric, s)
            outcome.measures["min_eigenvalue"] = g.min_eigenvalue
            if isinstance(metric, ConvolutionMetric):
                outcome.measures["cross_term"] = metric.verify_cross_term(s, tol)
        except NonPositive as e:
            outcome.non_positive = str(e)
        except (DomainError, SingularMatrix) as e:
            outcome.skipped = str(e)
        return outcome

    def run(self, metric: FinslerMetric, sampler: DomainSampler) -> CheckReport:
        """Sample the domain and run every applicable property"""
        tol = self.tol
        samples = sampler.samples()
        rng = np.random.Generator(np.random.PCG64(sampler.domain.seed + 2))
        is_convolution = isinstance(metric, ConvolutionMetric)
        n_dir = sampler.domain.directions if is_convolution else 0
        directions = rng.standard_normal((len(samples), n_dir, metric.dim))
        logger.info(f"Checking {metric.describe()} on {len(samples)} sample(s)")

        outcomes = self.runner.map(lambda item: self._evaluate(metric, item),
                                   list(zip(samples, directions)), desc="check")

        tallies = {
            "homogeneity": _Tally("homogeneity", tol.homogeneity),
            "euler": _Tally("euler", tol.euler),
            "gradient_identity": _Tally("gradient_identity", tol.euler),
            "strong_convexity": _Tally("strong_convexity", 0.0),
        }
        if is_convolution:
            tallies["cross_term"] = _Tally("cross_term", tol.algebraic)
            tallies["positivity_condition"] = _Tally("positivity_condition", 0.0)
            tallies["positive_square"] = _Tally("positive_square", 0.0)

        skipped = 0
        for o in outcomes:
            if is_convolution and o.directions:
                tallies["positivity_condition"].add(
                    o.sample, float(o.disagreements), o.disagreements > 0,
                    f"{o.disagreements} of {o.directions} direction(s) disagree",
                )
            if o.non_positive is not None:
                tallies["positive_square"].add(o.sample, 1.0, True, o.non_positive)
                continue
            if o.skipped is not None:
                skipped += 1
                logger.warning(f"Skipped sample: {o.skipped}")
                continue
            if is_convolution:
                tallies["positive_square"].add(o.sample, 0.0, False, "")
            for name in ("homogeneity", "euler", "gradient_identity", "cross_term"):
                if name in o.measures:
                    dev = o.measures[name]
                    tallies[name].add(o.sample, dev, not dev <= tallies[name].tolerance, f"deviation {dev:.3e}")
            lam = o.measures["min_eigenvalue"]
            tallies["strong_convexity"].add(o.sample, max(0.0, -lam), not lam > 0.0, f"min eigenvalue {lam:.6g}")

        properties = [t.result() for t in tallies.values()]
        passed = all(p.passed for p in properties)
        if not passed:
            failing = ", ".join(p.name for p in properties if not p.passed)
            logger.warning(f"{metric.describe()}: violated {failing}")
        logger.info(f"Check finished: {'pass' if passed else 'fail'} ({skipped} skipped)")
        return CheckReport(
            family=metric.family,
            seed=sampler.domain.seed,
            sample_count=len(samples),
            skipped=skipped,
            passed=passed,
            properties=properties,
        )

