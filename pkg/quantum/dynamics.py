"""Coupled density operators, their unitary evolution and the partial trace over the bath."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import expm_multiply

from kinetics.conf import knob
from wigner.exceptions import GridMismatch
from wigner.grids import DensityMatrixGrid

from .exceptions import QuantumError, StepRejected

logger = logging.getLogger(__name__)

EIGENVALUE_FLOOR = -1e-10
MAX_HALVINGS = 8


@dataclass
class CoupledState:
    """Density operator Gamma on H_e (x) H_ph in the electron-major Fock basis."""

    basis: object
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        size = self.basis.dimension
        if self.matrix.shape != (size, size):
            raise QuantumError(f"state of shape {self.matrix.shape} on a Fock space of dimension {size}")

    @classmethod
    def from_vector(cls, basis, vector):
        vector = np.asarray(vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise QuantumError("zero state vector")
        vector = vector / norm
        return cls(basis, np.outer(vector, vector.conj()))

    @property
    def trace(self):
        return complex(np.trace(self.matrix))

    def hermiticity_defect(self):
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def eigenvalues(self):
        return linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def validate(self, tol=1e-10):
        if abs(self.trace - 1.0) > tol:
            raise QuantumError(f"trace {self.trace:.12g} != 1")
        if self.hermiticity_defect() > tol:
            raise QuantumError(f"state is not Hermitian (defect {self.hermiticity_defect():.3g})")
        lowest = float(self.eigenvalues()[0])
        if lowest < EIGENVALUE_FLOOR:
            raise QuantumError(f"state has eigenvalue {lowest:.3g} < 0")
        return self

    def expectation(self, operator):
        """Tr(Gamma A) for a dense or sparse A."""
        return complex(np.trace(operator @ self.matrix))

    def energy(self, H):
        return float(np.real(self.expectation(H)))


def product_state(basis, electron, phonon):
    """gamma (x) gamma_ph from an electron operator matrix (trace one) and a PhononState."""
    electron = np.asarray(electron, dtype=complex)
    if electron.shape != (basis.lattice.electron_size,) * 2:
        raise QuantumError(f"electron matrix of shape {electron.shape} for {basis.lattice.electron_size} momenta")
    return CoupledState(basis, np.kron(electron, phonon.matrix()))


def electron_pure_state(lattice, amplitudes):
    """|psi><psi| on the electron basis, normalized to trace one."""
    amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if len(amplitudes) != lattice.electron_size:
        raise QuantumError(f"{len(amplitudes)} amplitudes for {lattice.electron_size} electron momenta")
    amplitudes = amplitudes / np.linalg.norm(amplitudes)
    return np.outer(amplitudes, amplitudes.conj())


def gaussian_electron(lattice, width=1.0, momentum=None):
    """Pure state with amplitudes exp(-|p - p0|^2 / 2 w^2)."""
    p = lattice.electron_momenta
    p0 = np.zeros(lattice.dimension) if momentum is None else np.asarray(momentum, dtype=float)
    return electron_pure_state(lattice, np.exp(-np.sum((p - p0) ** 2, axis=-1) / (2.0 * width**2)))


@dataclass
class ReducedDensity:
    """gamma_e = Tr_ph Gamma as an operator matrix on the electron basis."""

    lattice: object
    matrix: np.ndarray = field(repr=False)

    @property
    def trace(self):
        return complex(np.trace(self.matrix))

    @property
    def kernel(self):
        """gamma^(p, p'), the matrix divided by the cell weight L^{-d}."""
        return self.matrix / self.lattice.weight

    def to_grid(self):
        grid = self.lattice.electron_grid()
        if grid is None:
            raise GridMismatch("the electron basis is not a full momentum grid")
        return DensityMatrixGrid(grid, self.kernel)


def partial_trace_phonons(state):
    """gamma_e(p, p') = sum_n Gamma((p, n), (p', n))."""
    basis = state.basis
    blocks = state.matrix.reshape(basis.lattice.electron_size, basis.phonon_size, basis.lattice.electron_size, -1)
    return ReducedDensity(basis.lattice, np.einsum("iaja->ij", blocks))


def partial_trace_electron(state):
    basis = state.basis
    blocks = state.matrix.reshape(basis.lattice.electron_size, basis.phonon_size, basis.lattice.electron_size, -1)
    return np.einsum("iaib->ab", blocks)


class Propagator:
    """e^{-itH}: dense eigendecomposition up to ``dense_dimension``, Krylov stepping above."""

    def __init__(self, H, dense_dimension=None, budget=None):
        self.H = H.tocsr()
        self.dimension = self.H.shape[0]
        self.budget = knob("KRYLOV_BUDGET", budget)
        self.dense = self.dimension <= knob("DENSE_DIMENSION", dense_dimension)
        if self.dense:
            self.energies, self.vectors = linalg.eigh(self.H.toarray())
        logger.debug("%s propagator of dimension %d", "dense" if self.dense else "Krylov", self.dimension)

    def apply(self, block, t):
        """e^{-itH} applied to the columns of ``block``."""
        block = np.asarray(block, dtype=complex)
        if self.dense:
            phases = np.exp(-1j * t * self.energies)
            return self.vectors @ (phases[:, None] * (self.vectors.conj().T @ block))
        return self._krylov(block, t)

    def _stepped(self, block, t, steps):
        A = -1j * (t / steps) * self.H
        for _ in range(steps):
            block = expm_multiply(A, block)
        return block

    def _krylov(self, block, t):
        """Halve the step until two successive refinements agree within the budget."""
        if t == 0:
            return block.copy()
        steps = 1
        coarse = self._stepped(block, t, steps)
        for _ in range(MAX_HALVINGS):
            steps *= 2
            fine = self._stepped(block, t, steps)
            error = float(np.abs(fine - coarse).max())
            if error <= self.budget:
                return fine
            coarse = fine
        raise StepRejected(f"Krylov error {error:.3g} above budget {self.budget:g} after {steps} steps")

    def evolve(self, state, t):
        """Gamma_t = e^{-itH} Gamma_0 e^{itH}."""
        left = self.apply(state.matrix, t)
        matrix = self.apply(left.conj().T, t).conj().T
        return CoupledState(state.basis, 0.5 * (matrix + matrix.conj().T))

    def trajectory(self, state, times):
        return [self.evolve(state, t) for t in times]


def evolve(H, state, t, dense_dimension=None, budget=None):
    return Propagator(H, dense_dimension, budget).evolve(state, t)


def run_trajectories(propagator, states, times, threads=1):
    """Independent trajectories, one per worker; results in input order."""
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        return list(pool.map(lambda state: propagator.trajectory(state, times), states))


@dataclass(frozen=True)
class ConservationReport:
    times: list
    trace_drift: float
    energy_drift: float
    spectrum_drift: float

    def passed(self, tol=1e-10, spectrum_tol=1e-9):
        return self.trace_drift <= tol and self.energy_drift <= tol and self.spectrum_drift <= spectrum_tol

    def as_dict(self):
        return {
            "times": list(self.times),
            "trace_drift": self.trace_drift,
            "energy_drift": self.energy_drift,
            "spectrum_drift": self.spectrum_drift,
        }


def conservation_report(propagator, state, times):
    """Largest deviation of Tr Gamma_t, Tr(Gamma_t H) and the spectrum of Gamma_t from t = 0."""
    start_energy = state.energy(propagator.H)
    start_spectrum = state.eigenvalues()
    trace, energy, spectrum = 0.0, 0.0, 0.0
    for evolved in propagator.trajectory(state, times):
        trace = max(trace, abs(evolved.trace - 1.0))
        energy = max(energy, abs(evolved.energy(propagator.H) - start_energy))
        spectrum = max(spectrum, float(np.abs(evolved.eigenvalues() - start_spectrum).max()))
    report = ConservationReport(list(times), trace, energy, spectrum)
    logger.info("conservation over %d times: trace %.2g, energy %.2g", len(times), trace, energy)
    return report
