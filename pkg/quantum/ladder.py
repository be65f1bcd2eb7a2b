"""Second-order ladder term Tr E_1(t) Gamma_0 E_1(t)^* computed two ways.

E_1(t) = -i int_0^t e^{-i(t - s) H_0} H_e-p e^{-is H_0} ds is the one-collision Duhamel
term, H_0 = H_e + H_ph. The perturbative route assembles E_1 on the truncated Fock
space. The formula route sums

    lambda^2 L^{-d} sum_k sum_sigma M(k, sigma) sum_p gamma(p, p) |int_0^t e^{is Delta} ds|^2,
    Delta = e(p - sigma k) + sigma omega(k) - e(p),

where the G^# covariance has been split into its branches, with the occupation moments
of the truncated bath. Replacing those moments by N and N + 1 measures the cap leakage.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from physics.model import BRANCHES

from .dynamics import gaussian_electron, product_state
from .exceptions import QuantumError
from .lattice import FockBasis, FockTruncation
from .operators import (
    branch_weights,
    free_energies,
    gibbs_phonon_state,
    interaction,
    untruncated_branch_weights,
)

logger = logging.getLogger(__name__)

MAX_MODES = 3
LEAKAGE_WARNING = 1e-10


def time_integral(delta, t):
    """int_0^t e^{is delta} ds = e^{it delta / 2} t sinc(t delta / 2)."""
    delta = np.asarray(delta, dtype=float)
    return np.exp(0.5j * t * delta) * t * np.sinc(t * delta / (2.0 * np.pi))


def first_order_duhamel(model, basis, t):
    """E_1(t) as a sparse matrix, (E_1)_ab = -i V_ab e^{-it E_a} int_0^t e^{is(E_a - E_b)} ds."""
    energies = free_energies(model, basis)
    V = interaction(model, basis).tocoo()
    delta = energies[V.row] - energies[V.col]
    values = -1j * V.data * np.exp(-1j * t * energies[V.row]) * time_integral(delta, t)
    return sparse.csr_matrix((values, (V.row, V.col)), shape=V.shape)


def perturbative_route(model, basis, state, t):
    E1 = first_order_duhamel(model, basis, t)
    return float(np.real(np.trace(E1 @ (E1 @ state.matrix).conj().T)))


def formula_route(model, lattice, electron, t, weights):
    """Finite-sum evaluation with per-mode branch weights ``weights[m] = (M(k, +), M(k, -))``."""
    p = lattice.electron_momenta
    occupation = np.real(np.diag(electron))
    total = 0.0
    for mode in range(lattice.mode_count):
        k = lattice.modes[mode]
        for sigma, M in zip(BRANCHES, weights[mode]):
            if M == 0:
                continue
            targets = lattice.locate_electron(lattice.electron_indices - sigma * lattice.mode_indices[mode])
            inside = targets >= 0
            delta = model.e(p[inside] - sigma * k) + sigma * model.omega(k) - model.e(p[inside])
            total += M * float(np.sum(occupation[inside] * np.abs(time_integral(delta, t)) ** 2))
    return model.lam**2 * lattice.weight * total


@dataclass(frozen=True)
class LadderReport:
    perturbative: float
    formula: float
    cap_leakage: float
    capped_weight: float
    oracle_only: bool

    @property
    def discrepancy(self):
        return abs(self.perturbative - self.formula)

    def agreed(self, tol=1e-8):
        return self.discrepancy <= tol

    def as_dict(self):
        return {
            "perturbative": self.perturbative,
            "formula": self.formula,
            "discrepancy": self.discrepancy,
            "cap_leakage": self.cap_leakage,
            "capped_weight": self.capped_weight,
            "oracle_only": self.oracle_only,
        }


def ladder_term_check(lattice, model, lam, t, electron=None, truncation=None):
    """Compare the perturbative and formula routes for the one-collision ladder term at time ``t``."""
    if lattice.mode_count > MAX_MODES:
        raise QuantumError(f"the ladder check keeps at most {MAX_MODES} modes, got {lattice.mode_count}")
    model = model.with_params(lam=lam, weak_coupling=False)
    basis = FockBasis(lattice, truncation or FockTruncation(n_max=1))
    bath = gibbs_phonon_state(model, basis)
    electron = gaussian_electron(lattice) if electron is None else np.asarray(electron, dtype=complex)
    state = product_state(basis, electron, bath)

    perturbative = perturbative_route(model, basis, state, t)
    truncated = [branch_weights(model, bath, mode) for mode in range(lattice.mode_count)]
    formula = formula_route(model, lattice, electron, t, truncated)
    exact = [untruncated_branch_weights(model, k) for k in lattice.modes]
    leakage = abs(formula_route(model, lattice, electron, t, exact) - formula)
    capped = max((bath.capped_weight(mode) for mode in range(lattice.mode_count)), default=0.0)

    report = LadderReport(perturbative, formula, leakage, capped, lattice.oracle_only)
    logger.info("ladder term at t=%g, lambda=%g: %.12g vs %.12g", t, lam, perturbative, formula)
    if leakage > LEAKAGE_WARNING:
        logger.warning("cap leakage %.3g against the untruncated bath (cap weight %.3g)", leakage, capped)
    return report
