"""Ladder operators, the coupled Hamiltonian and the Gibbs state of the truncated bath.

Modes carry canonical ladder operators a_k with [a_k, a_k^+] = 1; the continuum
c_k = L^{d/2} a_k, so H_ph = sum_k omega(k) a_k^+ a_k and

    H_e-p = i lambda L^{-d/2} sum_k Q(k) [e^{-ikx} a_k^+ - e^{ikx} a_k].

Creation on a mode at its cap maps to zero.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from physics.exceptions import BathUnstable

from .exceptions import QuantumError

logger = logging.getLogger(__name__)


def creation(basis, mode):
    """a_k^+ on the phonon space."""
    source, target, n = basis.raised(mode)
    size = basis.phonon_size
    return sparse.csr_matrix((np.sqrt(n + 1.0), (target, source)), shape=(size, size))


def annihilation(basis, mode):
    return creation(basis, mode).conj().T.tocsr()


def number(basis, mode):
    return sparse.diags(basis.configurations[:, mode].astype(float)).tocsr()


def b_operator(basis, mode):
    """b_k = a_k^+ - a_{-k}; the second term is absent when -k is not retained."""
    b = creation(basis, mode)
    partner = basis.lattice.partner(mode)
    if partner is not None:
        b = b - annihilation(basis, partner)
    return b.tocsr()


def commutator_defect(A, B, expected=None, states=None):
    """max |([A, B] - expected) e_a| over basis vectors e_a in ``states`` (all by default)."""
    C = (A @ B - B @ A).tocsc()
    if expected is not None:
        C = C - sparse.csc_matrix(expected)
    if states is not None:
        C = C[:, states]
    return float(abs(C).max()) if C.nnz else 0.0


def phonon_energies(model, basis):
    """sum_k n_k omega(k) for every phonon configuration."""
    return basis.configurations @ np.asarray(model.omega(basis.lattice.modes), dtype=float)


def free_energies(model, basis):
    """Diagonal of H_e + H_ph in the electron-major basis."""
    electron = np.asarray(model.e(basis.lattice.electron_momenta), dtype=float)
    return (electron[:, None] + phonon_energies(model, basis)[None, :]).reshape(-1)


def _emission_block(model, basis, mode):
    lattice = basis.lattice
    coefficient = 1j * model.lam * lattice.weight**0.5 * float(model.Q(lattice.modes[mode : mode + 1])[0])
    if coefficient == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=complex)
    # e^{-ikx} moves p to p - k
    shifted = lattice.locate_electron(lattice.electron_indices - lattice.mode_indices[mode])
    electrons = np.flatnonzero(shifted >= 0)
    source, target, n = basis.raised(mode)
    size = basis.phonon_size
    rows = (shifted[electrons][:, None] * size + target[None, :]).reshape(-1)
    cols = (electrons[:, None] * size + source[None, :]).reshape(-1)
    values = np.broadcast_to(coefficient * np.sqrt(n + 1.0), (len(electrons), len(n))).reshape(-1)
    return rows, cols, values


def interaction(model, basis, threads=1):
    """H_e-p assembled as E + E^+ from the emission part E, mode blocks in parallel."""
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        blocks = list(pool.map(lambda mode: _emission_block(model, basis, mode), range(basis.lattice.mode_count)))
    rows = np.concatenate([b[0] for b in blocks]) if blocks else np.zeros(0, dtype=np.int64)
    cols = np.concatenate([b[1] for b in blocks]) if blocks else np.zeros(0, dtype=np.int64)
    values = np.concatenate([b[2] for b in blocks]) if blocks else np.zeros(0, dtype=complex)
    emission = sparse.csr_matrix((values, (rows, cols)), shape=(basis.dimension, basis.dimension))
    return (emission + emission.conj().T).tocsr()


def build_hamiltonian(model, basis, threads=1):
    """H = H_e + H_ph + H_e-p as a sparse Hermitian matrix."""
    H = sparse.diags(free_energies(model, basis).astype(complex)) + interaction(model, basis, threads)
    logger.debug("Hamiltonian of dimension %d with %d entries", basis.dimension, H.nnz)
    return H.tocsr()


def hermiticity_defect(H):
    D = H - H.conj().T
    return float(abs(D).max()) if D.nnz else 0.0


def truncated_occupation(x, n_max):
    """sum_{n <= n_max} n x^n / sum_{n <= n_max} x^n."""
    n = np.arange(n_max + 1)
    weights = x**n
    return float(np.dot(n, weights) / weights.sum())


@dataclass
class PhononState:
    """Diagonal Gibbs state of the truncated bath: probabilities of the phonon configurations."""

    basis: object
    probabilities: np.ndarray

    def matrix(self):
        return np.diag(self.probabilities).astype(complex)

    def occupation(self, mode):
        """<n_k>: weight of the annihilation channel."""
        return float(np.dot(self.probabilities, self.basis.configurations[:, mode]))

    def creation_moment(self, mode):
        """<a_k a_k^+>, which the hard cap makes smaller than <n_k> + 1."""
        source, _, n = self.basis.raised(mode)
        return float(np.dot(self.probabilities[source], n + 1.0))

    def capped_weight(self, mode):
        """Probability that ``mode`` sits at its cap."""
        at_cap = self.basis.configurations[:, mode] == self.basis.truncation.n_max
        return float(self.probabilities[at_cap].sum())


def gibbs_phonon_state(model, basis):
    """Product of geometric states x^n, x = e^{-beta omega(k) + mu}, renormalized on the truncation."""
    gaps = model.beta * np.asarray(model.omega(basis.lattice.modes), dtype=float) - model.mu
    if np.any(gaps <= 0):
        raise BathUnstable(f"beta*omega - mu = {np.min(gaps):.6g} <= 0 on a retained mode")
    log_weights = -basis.configurations @ gaps
    probabilities = np.exp(log_weights - log_weights.max())
    return PhononState(basis, probabilities / probabilities.sum())


def G_sharp(model, k, tau, state=None, mode=None):
    """G^#(k, tau) = e^{-i tau omega} N(k) + e^{i tau omega} (N(k) + 1).

    With a truncated ``state`` the occupation moments of ``mode`` replace N and N + 1.
    """
    omega = np.asarray(model.omega(np.asarray(k, dtype=float)), dtype=float)
    tau = np.asarray(tau, dtype=float)
    if state is None:
        N = model.occupation(np.asarray(k, dtype=float))
        lower, upper = N, N + 1.0
    else:
        if mode is None:
            raise QuantumError("a truncated covariance needs the mode index")
        partner = state.basis.lattice.partner(mode)
        lower = state.occupation(mode)
        upper = state.creation_moment(partner) if partner is not None else 0.0
    return np.exp(-1j * tau * omega) * lower + np.exp(1j * tau * omega) * upper


def random_potential_covariance(model, p, t, s):
    """E conj(V^(p, t)) V^(p, s) = |Q(p)|^2 [(N + 1) e^{i(t - s) omega} + N e^{-i(t - s) omega}]."""
    p = np.asarray(p, dtype=float)
    return model.Q(p) ** 2 * G_sharp(model, p, np.asarray(t, dtype=float) - np.asarray(s, dtype=float))


def phonon_two_point(model, state, u, v, tau, s):
    """Tr gamma_ph b_u(tau) b_v^*(s) with b_k(s) = e^{-is H_ph} b_k e^{is H_ph}, modes by index."""
    basis = state.basis
    energies = phonon_energies(model, basis)

    def evolved(operator, time):
        phases = np.exp(-1j * time * (energies[:, None] - energies[None, :]))
        return operator.toarray() * phases

    left = evolved(b_operator(basis, u), tau)
    right = evolved(b_operator(basis, v), s).conj().T
    return complex(np.sum(state.probabilities * np.einsum("ab,ba->a", left, right)))


def branch_weights(model, state, mode):
    """Truncated M(k, +), M(k, -) of a retained mode: |Q|^2 <a a^+> and |Q|^2 <n>."""
    q2 = float(model.Q(state.basis.lattice.modes[mode : mode + 1])[0]) ** 2
    return q2 * state.creation_moment(mode), q2 * state.occupation(mode)


def untruncated_branch_weights(model, k):
    k = np.asarray(k, dtype=float).reshape(1, -1)
    q2 = float(model.Q(k)[0]) ** 2
    N = float(model.occupation(k)[0])
    return q2 * (N + 1.0), q2 * N


def free_spectrum_defect(model, basis, H):
    """Largest distance between the spectrum of H and {e(p) + sum n_k omega(k)}."""
    expected = np.sort(free_energies(model, basis))
    return float(np.abs(np.linalg.eigvalsh(H.toarray()) - expected).max())
