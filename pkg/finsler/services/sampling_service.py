"""
Sampling service - seeded draws from a metric's chart
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from finsler.core.errors import InsufficientSamples, InvalidParameter
from finsler.core.metric import FinslerMetric, Interval, TangentSample
from finsler.models.schemas import SampleDomainSpec

logger = logging.getLogger(__name__)


@dataclass
class SampleGrid:
    """Base points crossed with a shared direction set; samples[i][j] sits at (xs[i], ys[j])"""
    xs: List[np.ndarray]
    ys: List[np.ndarray]
    samples: List[List[TangentSample]] = field(default_factory=list)

    def flat(self) -> List[TangentSample]:
        return [s for row in self.samples for s in row]


class DomainSampler:
    """
    Rejection sampler over per-coordinate boxes

    Draws use numpy's PCG64 generator, so a seed reproduces the same samples on
    every platform. Points outside the chart are rejected and counted.
    """

    def __init__(self, domain: SampleDomainSpec, metric: FinslerMetric):
        self.domain = domain
        self.metric = metric
        default_x, default_y = metric.default_intervals()
        self.x_intervals = self._intervals(domain.x_intervals, default_x, "x")
        self.y_intervals = self._intervals(domain.y_intervals, default_y, "y")
        self.rejected = 0

    def _intervals(self, given: Optional[Sequence[Interval]], default: Sequence[Interval], what: str) -> np.ndarray:
        boxes = np.asarray(given if given is not None else default, dtype=float).reshape(-1, 2)
        if boxes.shape[0] != self.metric.dim:
            raise InvalidParameter(
                f"{what}_intervals has {boxes.shape[0]} entries, {self.metric.describe()} needs {self.metric.dim}"
            )
        return boxes

    def _rng(self, offset: int = 0) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.domain.seed + offset))

    @staticmethod
    def _draw(rng: np.random.Generator, boxes: np.ndarray) -> np.ndarray:
        return rng.uniform(boxes[:, 0], boxes[:, 1])

    def samples(self, count: Optional[int] = None, minimum: int = 1) -> List[TangentSample]:
        """
        Draw up to ``count`` valid samples

        Raises:
            InsufficientSamples: fewer than ``minimum`` valid samples within the attempt budget
        """
        count = self.domain.count if count is None else count
        rng = self._rng()
        budget = count * self.domain.max_attempts
        accepted: List[TangentSample] = []
        attempts = 0
        while len(accepted) < count and attempts < budget:
            attempts += 1
            x = self._draw(rng, self.x_intervals)
            y = self._draw(rng, self.y_intervals)
            if self.metric.domain_violation(x, y) is None:
                accepted.append(self.metric.sample(x, y))
        self.rejected = attempts - len(accepted)
        if self.rejected:
            logger.info(f"Rejected {self.rejected} draw(s) outside the chart of {self.metric.describe()}")
        if len(accepted) < minimum:
            raise InsufficientSamples(
                f"only {len(accepted)} valid sample(s) of {minimum} required after {attempts} attempts"
            )
        if len(accepted) < count:
            logger.warning(f"Drew {len(accepted)} of {count} requested samples")
        return accepted

    def grid(self, n_x: Optional[int] = None, n_y: Optional[int] = None) -> SampleGrid:
        """
        Shared direction set crossed with distinct base points

        At least dim + 2 directions are used. A base point is kept only when every
        direction is admissible there.

        Raises:
            InsufficientSamples: fewer than n_x base points accepted
        """
        n_x = self.domain.grid_x if n_x is None else n_x
        n_y = max(self.domain.grid_y if n_y is None else n_y, self.metric.dim + 2)
        rng = self._rng(offset=1)
        budget_y = n_y * self.domain.max_attempts
        ys: List[np.ndarray] = []
        blocks = [slice(None)] if self.metric.split is None else [slice(0, self.metric.split), slice(self.metric.split, None)]
        for _ in range(budget_y):
            if len(ys) == n_y:
                break
            y = self._draw(rng, self.y_intervals)
            # slit condition only; base points filter the rest of the chart
            if all(np.linalg.norm(y[b]) > self.metric.margin for b in blocks):
                ys.append(y)
        if len(ys) < n_y:
            raise InsufficientSamples(f"only {len(ys)} of {n_y} shared directions are admissible")

        xs: List[np.ndarray] = []
        rows: List[List[TangentSample]] = []
        attempts = 0
        while len(xs) < n_x and attempts < n_x * self.domain.max_attempts:
            attempts += 1
            x = self._draw(rng, self.x_intervals)
            if all(self.metric.domain_violation(x, y) is None for y in ys):
                xs.append(x)
                rows.append([self.metric.sample(x, y) for y in ys])
        if len(xs) < n_x:
            raise InsufficientSamples(f"only {len(xs)} of {n_x} base points admit every shared direction")
        return SampleGrid(xs=xs, ys=ys, samples=rows)
