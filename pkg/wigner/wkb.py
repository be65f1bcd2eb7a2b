"""WKB states psi^eps(x) = eps^{d/2} A(eps x) e^{i S(eps x) / eps} and their Wigner limit.

As eps -> 0, <J, W^eps> tends to int conj(J(X, grad S(X))) |A(X)|^2 dX.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from physics.derivatives import directional

from .grids import DensityMatrixGrid, MomentumGrid, rescale, wigner_transform
from .observables import pair

logger = logging.getLogger(__name__)

GRADIENT_STEP = 1e-5


def gaussian_amplitude(width=1.0, center=None):
    def A(X):
        X = np.asarray(X, dtype=float)
        c = np.zeros(X.shape[-1]) if center is None else np.asarray(center, dtype=float)
        return np.exp(-np.sum((X - c) ** 2, axis=-1) / (2.0 * width**2))

    return A


def linear_phase(momentum):
    def S(X):
        return np.asarray(X, dtype=float) @ np.asarray(momentum, dtype=float)

    return S


def flat_phase(X):
    return np.zeros(np.shape(X)[:-1])


def phase_gradient(S, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.stack([directional(S, X, axis, 1, GRADIENT_STEP) for axis in np.eye(X.shape[-1])], axis=-1)


@dataclass(frozen=True)
class WKBState:
    amplitude: object
    phase: object
    eps: float
    dimension: int = 1

    def wavefunction(self, x):
        X = self.eps * np.asarray(x, dtype=float)
        return self.eps ** (0.5 * self.dimension) * self.amplitude(X) * np.exp(1j * self.phase(X) / self.eps)

    def grid(self, box=14.0, reach=4.0):
        """Momentum grid whose box covers [-box/2, box/2]^d in X = eps x and whose momenta reach |p| <= reach."""
        L = box / (self.eps * math.sqrt(2.0 * math.pi))
        spacing = math.sqrt(2.0 * math.pi) / L
        return MomentumGrid(self.dimension, int(math.ceil(reach / spacing)), L)

    def amplitudes(self, grid):
        """psi^(p) = int psi(x) e^{-i p x} dx on the grid momenta, by FFT over the box."""
        d, n = grid.dimension, grid.side
        h = math.sqrt(2.0 * math.pi) * grid.box / n
        axes = [h * np.arange(-grid.extent, grid.extent + 1)] * d
        x = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        samples = np.fft.ifftshift(self.wavefunction(x))
        values = np.fft.fftshift(np.fft.fftn(samples)) * (h / math.sqrt(2.0 * math.pi)) ** d
        return values.reshape(-1)

    def density(self, grid):
        amplitudes = self.amplitudes(grid)
        return DensityMatrixGrid(grid, np.outer(amplitudes, amplitudes.conj()))


def _position_grid(dimension, box, points):
    axis = np.linspace(-0.5 * box, 0.5 * box, points)
    X = np.stack(np.meshgrid(*[axis] * dimension, indexing="ij"), axis=-1)
    return axis, X


def _integrate(values, axis, dimension):
    for _ in range(dimension):
        values = trapezoid(values, axis, axis=0)
    return float(np.real(values)) / (2.0 * math.pi) ** (0.5 * dimension)


def amplitude_mass(A, dimension=1, box=14.0, points=801):
    """int |A(X)|^2 dX in the normalized measure."""
    axis, X = _position_grid(dimension, box, points)
    return _integrate(np.abs(A(X)) ** 2, axis, dimension)


def wkb_limit(J, A, S, dimension=1, box=14.0, points=801):
    axis, X = _position_grid(dimension, box, points)
    flat = X.reshape(-1, dimension)
    values = np.conj(J(flat, phase_gradient(S, flat))) * np.abs(A(flat)) ** 2
    return _integrate(values.reshape(X.shape[:-1]), axis, dimension)


@dataclass(frozen=True)
class WKBReport:
    epsilons: list
    values: list
    limit: float
    norms: list

    @property
    def defects(self):
        return [abs(v - self.limit) for v in self.values]

    @property
    def increments(self):
        return [abs(b - a) for a, b in zip(self.values, self.values[1:])]

    @property
    def monotone(self):
        defects = self.defects
        return all(b < a for a, b in zip(defects, defects[1:]))

    def as_dict(self):
        return {
            "epsilons": list(self.epsilons),
            "values": list(self.values),
            "limit": self.limit,
            "norms": list(self.norms),
            "defects": self.defects,
            "increments": self.increments,
            "monotone": self.monotone,
        }


def wkb_wigner_limit_check(A, S, J, epsilons=(0.2, 0.1, 0.05), dimension=1, box=14.0, reach=4.0):
    """<J, W^eps> of the WKB states for each eps, against the eps -> 0 limit."""
    values, norms = [], []
    for eps in epsilons:
        state = WKBState(A, S, eps, dimension)
        grid = state.grid(box, reach)
        density = state.density(grid)
        norms.append(density.trace)
        values.append(float(np.real(pair(J, rescale(wigner_transform(density), eps)))))
        logger.debug("eps %g on %d momenta: <J, W> = %.10g", eps, grid.size, values[-1])
    limit = wkb_limit(J, A, S, dimension, box)
    report = WKBReport(list(epsilons), values, limit, norms)
    logger.info("WKB defects %s", ["%.3g" % defect for defect in report.defects])
    return report
