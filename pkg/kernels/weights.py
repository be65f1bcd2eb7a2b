from dataclasses import dataclass

import numpy as np

from kinetics.conf import knob
from physics import derivatives
from physics.model import BRANCHES, Model


@dataclass(frozen=True)
class VertexWeight:
    """M(k, sigma) = |Q(k)|^2 (N(k) + (sigma + 1) / 2)."""

    model: Model

    def __call__(self, k, sigma):
        return self.model.vertex_weight(k, sigma)

    def split(self, k):
        """M(k, +) - M(k, -) = |Q(k)|^2."""
        return self(k, BRANCHES[0]) - self(k, BRANCHES[1])

    def envelope(self, k, max_order=None, step=None):
        """M*(k): largest |D^l M(k, sigma)| over both branches and orders l <= max_order."""
        max_order = min(knob("MAX_DERIVATIVE_ORDER", max_order), 2 * self.model.dimension)
        step = knob("FD_STEP", step)
        k = np.atleast_2d(np.asarray(k, dtype=float))
        out = np.zeros(k.shape[:-1])
        for sigma in BRANCHES:
            table = derivatives.derivative_envelope(lambda q: self(q, sigma), k, max_order, step)
            out = np.maximum(out, table.max(axis=0))
        return out
