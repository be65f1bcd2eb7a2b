"""Richardson extrapolation of a regularized quantity to zero regularization."""

import numpy as np


def richardson(steps, values, power=2):
    """Value at step 0 of the polynomial a + b1 h^power + b2 h^(2 power) + ... through the samples."""
    h = np.asarray(steps, dtype=float) ** power
    vander = np.vander(h, len(h), increasing=True)
    return np.linalg.solve(vander, np.asarray(values))[0]


def extrapolate(steps, values, power=2):
    """``(limit, residual)``; the residual compares against the rule built on the smallest steps only."""
    steps = list(steps)
    values = list(values)
    if len(steps) < 2:
        raise ValueError("need at least two steps to extrapolate")
    order = np.argsort(steps)[::-1]
    steps = [steps[i] for i in order]
    values = [values[i] for i in order]
    limit = richardson(steps, values, power)
    coarser = richardson(steps[1:], values[1:], power) if len(steps) > 2 else values[-1]
    return limit, float(abs(limit - coarser))
