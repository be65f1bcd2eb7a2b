"""Density matrices on the dual lattice of a periodic box and their Wigner transforms.

The box has side sqrt(2 pi) L, so int dx over it is L^d in the normalized measure and
its dual lattice has spacing sqrt(2 pi) / L with int dp = L^{-d} sum_p. Pairs (p, p')
of lattice momenta correspond one to one to (xi, v) = (p - p', (p + p') / 2): v runs
over the half-spacing lattice and, at fixed v, xi over a lattice of twice the spacing.
The cell weights are (1 / 2L)^d for v and (2 / L)^d for xi.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg

from .exceptions import GridMismatch, InvalidDensityMatrix

logger = logging.getLogger(__name__)

INDEX_TOLERANCE = 1e-9
EIGENVALUE_FLOOR = -1e-10


@dataclass(frozen=True)
class MomentumGrid:
    """Lattice momenta spacing * j, j in {-extent..extent}^d, of a box of size parameter L."""

    dimension: int
    extent: int
    box: float

    def __post_init__(self):
        if self.dimension < 1 or self.extent < 1 or self.box <= 0:
            raise GridMismatch(f"invalid grid d={self.dimension}, extent={self.extent}, L={self.box}")

    @classmethod
    def from_spacing(cls, dimension, extent, spacing):
        return cls(dimension, extent, math.sqrt(2.0 * math.pi) / spacing)

    @property
    def spacing(self):
        return math.sqrt(2.0 * math.pi) / self.box

    @property
    def side(self):
        return 2 * self.extent + 1

    @property
    def size(self):
        return self.side**self.dimension

    @property
    def weight(self):
        """Measure of one lattice cell, L^{-d}."""
        return self.box ** (-self.dimension)

    @cached_property
    def indices(self):
        axes = [np.arange(-self.extent, self.extent + 1)] * self.dimension
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dimension)

    @property
    def points(self):
        return self.spacing * self.indices

    def locate(self, indices):
        """Flat positions of integer lattice ``indices`` (..., d); -1 where off the grid."""
        indices = np.asarray(indices)
        inside = np.all(np.abs(indices) <= self.extent, axis=-1)
        shifted = np.where(inside[..., None], indices + self.extent, 0)
        flat = np.ravel_multi_index(tuple(np.moveaxis(shifted, -1, 0)), (self.side,) * self.dimension)
        return np.where(inside, flat, -1)

    def lattice_index(self, momenta, scale=1.0):
        """Integer indices of ``momenta`` on the lattice of spacing ``spacing / scale``; GridMismatch if off it."""
        raw = np.asarray(momenta, dtype=float) * scale / self.spacing
        nearest = np.rint(raw)
        if np.any(np.abs(raw - nearest) > INDEX_TOLERANCE * np.maximum(1.0, np.abs(raw))):
            spacing = self.spacing / scale
            raise GridMismatch(f"momenta {np.asarray(momenta).tolist()} are off the lattice of spacing {spacing:g}")
        return nearest.astype(np.int64)

    def describe(self):
        return {"dimension": self.dimension, "extent": self.extent, "box": self.box, "spacing": self.spacing}


@dataclass
class DensityMatrixGrid:
    """Kernel gamma^(p, p') on a momentum grid; Tr gamma = L^{-d} sum_p gamma^(p, p)."""

    grid: MomentumGrid
    kernel: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.kernel = np.asarray(self.kernel, dtype=complex)
        if self.kernel.shape != (self.grid.size, self.grid.size):
            raise GridMismatch(f"kernel shape {self.kernel.shape} does not match {self.grid.size} grid momenta")

    @property
    def trace(self):
        return float(np.real(np.trace(self.kernel)) * self.grid.weight)

    def hermiticity_defect(self):
        return float(np.abs(self.kernel - self.kernel.conj().T).max())

    def smallest_eigenvalue(self):
        """Of gamma as an operator on l^2(L^{-d} counting measure)."""
        operator = self.grid.weight * 0.5 * (self.kernel + self.kernel.conj().T)
        return float(linalg.eigh(operator, eigvals_only=True, subset_by_index=[0, 0])[0])

    def validate(self, trace=True, tol=1e-10):
        scale = max(1.0, float(np.abs(self.kernel).max()))
        if self.hermiticity_defect() > tol * scale:
            raise InvalidDensityMatrix(f"kernel is not Hermitian (defect {self.hermiticity_defect():.3g})")
        lowest = self.smallest_eigenvalue()
        if lowest < EIGENVALUE_FLOOR:
            raise InvalidDensityMatrix(f"kernel has eigenvalue {lowest:.3g} < 0")
        if trace and abs(self.trace - 1.0) > 1e-9:
            raise InvalidDensityMatrix(f"trace {self.trace:.12g} != 1")
        return self

    def position_density(self, x):
        """gamma(x, x) = int int e^{i (p - p') x} gamma^(p, p') dp dp'."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        phases = np.exp(1j * x @ self.grid.points.T)
        values = np.einsum("kp,pq,kq->k", phases, self.kernel, phases.conj())
        return np.real(values) * self.grid.weight**2

    def momentum_density(self):
        return np.real(np.diag(self.kernel)).copy()


def pure_state(grid, amplitudes, trace=1.0):
    """|psi><psi| from momentum amplitudes psi^(p), scaled to the given trace."""
    amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
    norm = float(np.sum(np.abs(amplitudes) ** 2) * grid.weight)
    if norm <= 0:
        raise InvalidDensityMatrix("zero wavefunction")
    amplitudes = amplitudes * math.sqrt(trace / norm)
    return DensityMatrixGrid(grid, np.outer(amplitudes, amplitudes.conj()))


def gaussian_amplitudes(grid, width=1.0, position=None, momentum=None):
    """psi^ of psi(x) proportional to exp(-|x - x0|^2 / 2 w^2 + i p0 . x)."""
    d = grid.dimension
    x0 = np.zeros(d) if position is None else np.asarray(position, dtype=float)
    p0 = np.zeros(d) if momentum is None else np.asarray(momentum, dtype=float)
    p = grid.points
    return np.exp(-0.5 * width**2 * np.sum((p - p0) ** 2, axis=-1) - 1j * (p - p0) @ x0)


def gaussian_state(grid, width=1.0, position=None, momentum=None, trace=1.0):
    return pure_state(grid, gaussian_amplitudes(grid, width, position, momentum), trace=trace)


def random_state(grid, rng, rank=3, decay=1.0):
    """Unit-trace mixed state with Gaussian-damped random eigenvectors."""
    envelope = np.exp(-0.5 * decay * np.sum(grid.points**2, axis=-1))
    shape = (grid.size, rank)
    vectors = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * envelope[:, None]
    kernel = vectors @ vectors.conj().T
    kernel /= np.real(np.trace(kernel)) * grid.weight
    return DensityMatrixGrid(grid, kernel)


@dataclass
class WignerGrid:
    """W^eps(X, V) = eps^{-d} W(X / eps, V) of a density matrix.

    Held in Fourier form W^(xi, v) = gamma^(v + xi/2, v - xi/2).
    """

    density: DensityMatrixGrid
    scale: float = 1.0

    @property
    def grid(self):
        return self.density.grid

    @property
    def xi_weight(self):
        return (2.0 / self.grid.box) ** self.grid.dimension

    @property
    def v_weight(self):
        return (0.5 / self.grid.box) ** self.grid.dimension

    def _pair_rows(self, v_index, xi_index):
        row = self.grid.locate((v_index + xi_index) // 2)
        col = self.grid.locate((v_index - xi_index) // 2)
        if np.any((v_index + xi_index) % 2) or np.any(row < 0) or np.any(col < 0):
            raise GridMismatch("v +- xi/2 leaves the momentum grid")
        return row, col

    def fourier(self, xi, v):
        """W^(xi, v) at momenta with v +- xi/2 on the grid (unscaled: the X-transform of W)."""
        xi_index = self.grid.lattice_index(xi)
        v_index = self.grid.lattice_index(v, scale=2.0)
        row, col = self._pair_rows(v_index, xi_index)
        return self.density.kernel[row, col]

    def compatible(self, v):
        """Half-lattice index s = 2v / spacing, and the grid rows i with s - i on the grid."""
        s = self.grid.lattice_index(v, scale=2.0)
        rows = np.flatnonzero(self.grid.locate(s - self.grid.indices) >= 0)
        return s, rows

    def unscaled(self, x, v):
        """W(x, v) = (2/L)^d sum_xi e^{i xi x} gamma^(v + xi/2, v - xi/2) at points ``x`` (k, d)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s, rows = self.compatible(v)
        if not len(rows):
            return np.zeros(len(x))
        i = self.grid.indices[rows]
        cols = self.grid.locate(s - i)
        xi = self.grid.spacing * (2 * i - s)
        values = np.exp(1j * x @ xi.T) @ self.density.kernel[rows, cols]
        return np.real(values) * self.xi_weight

    def values(self, X, V):
        """W^eps(X, V) at positions ``X`` (k, d) and one half-lattice momentum ``V``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.scale ** (-self.grid.dimension) * self.unscaled(X / self.scale, V)

    def half_lattice(self):
        """All momenta v of the half-spacing lattice that carry pairs."""
        axes = [np.arange(-2 * self.grid.extent, 2 * self.grid.extent + 1)] * self.grid.dimension
        s = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.grid.dimension)
        return 0.5 * self.grid.spacing * s

    def momentum_marginal(self, v):
        """int W^eps(X, v) dX: 2^d gamma^(v, v) at lattice v, zero between."""
        s = self.grid.lattice_index(v, scale=2.0)
        if np.any(s % 2):
            return 0.0
        flat = self.grid.locate(s // 2)
        return 0.0 if flat < 0 else float(2**self.grid.dimension * np.real(self.density.kernel[flat, flat]))

    def position_marginal(self, X):
        """int W^eps(X, V) dV, summed over the half lattice."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        total = np.zeros(len(X))
        for v in self.half_lattice():
            total += self.values(X, v)
        return total * self.v_weight

    def mass(self):
        return sum(self.momentum_marginal(v) for v in self.grid.points) * self.v_weight

    def slice_rows(self, X, V):
        """CSV rows of W^eps on positions ``X`` at momentum ``V``."""
        values = self.values(X, V)
        rows = []
        for x, w in zip(np.atleast_2d(X), values):
            rows.append({**{f"X{i + 1}": float(c) for i, c in enumerate(x)}, "W": float(w)})
        return rows


def wigner_transform(density, check=True):
    if check:
        density.validate(trace=False)
    return WignerGrid(density, 1.0)


def rescale(wigner, eps):
    """W^eps from W (or W^{eps1} to W^{eps1 eps})."""
    if not 0 < eps <= 1:
        raise ValueError(f"scale must lie in (0, 1], got {eps}")
    return WignerGrid(wigner.density, wigner.scale * eps)
