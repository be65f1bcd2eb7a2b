import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo (or quadrature) value with its standard error."""

    value: float
    stderr: float = 0.0
    samples: int = 0

    def __add__(self, other):
        return Estimate(self.value + other.value, math.hypot(self.stderr, other.stderr), self.samples + other.samples)

    def scaled(self, factor):
        return Estimate(self.value * factor, abs(factor) * self.stderr, self.samples)

    def agrees_with(self, other, sigmas=3.0, slack=0.0):
        return abs(self.value - other.value) <= sigmas * math.hypot(self.stderr, other.stderr) + slack

    def as_dict(self):
        return asdict(self)


def mean_estimate(values, weights=None):
    """Weighted sample mean of ``values`` with its standard error."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        return Estimate(0.0, 0.0, 0)
    if weights is None:
        mean = float(values.mean())
        stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return Estimate(mean, stderr, n)
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    mean = float(np.dot(weights, values) / total)
    # ratio estimator variance
    stderr = float(np.sqrt(np.sum((weights * (values - mean)) ** 2)) / total) if n > 1 else 0.0
    return Estimate(mean, stderr, n)
