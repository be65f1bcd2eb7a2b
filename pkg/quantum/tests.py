import math

import numpy as np
from django.test import SimpleTestCase
from scipy import sparse

from physics.dispersions import annulus
from physics.exceptions import BathUnstable
from physics.model import default_model

from .dynamics import (
    CoupledState,
    Propagator,
    conservation_report,
    gaussian_electron,
    partial_trace_electron,
    partial_trace_phonons,
    product_state,
    run_trajectories,
)
from .exceptions import DimensionCap, QuantumError, StepRejected
from .ladder import ladder_term_check
from .lattice import FockBasis, FockTruncation, LatticeSpec
from .operators import (
    G_sharp,
    annihilation,
    b_operator,
    build_hamiltonian,
    commutator_defect,
    creation,
    free_spectrum_defect,
    gibbs_phonon_state,
    hermiticity_defect,
    phonon_two_point,
    random_potential_covariance,
    truncated_occupation,
)


def small_lattice(extent=2):
    """d = 1, spacing 0.5, modes +-0.5."""
    return LatticeSpec.cube(1, math.sqrt(2.0 * math.pi) / 0.5, extent, mode_extent=1)


class TestFockBasis(SimpleTestCase):
    def test_success_dimension(self):
        basis = FockBasis(small_lattice(), FockTruncation(n_max=2))
        self.assertEqual(basis.phonon_size, 9)
        self.assertEqual(basis.dimension, 45)

    def test_success_total_cap(self):
        basis = FockBasis(small_lattice(), FockTruncation(n_max=2, total=2))
        self.assertEqual(basis.phonon_size, 6)
        self.assertTrue(np.all(basis.configurations.sum(axis=-1) <= 2))

    def test_failure_dimension_cap(self):
        lattice = LatticeSpec.cube(1, 5.0, 3, mode_extent=4)
        with self.assertRaises(DimensionCap):
            FockBasis(lattice, FockTruncation(n_max=3), cap=1000)

    def test_failure_zero_mode(self):
        with self.assertRaises(QuantumError):
            LatticeSpec(1, 5.0, [[0], [1]], [[0]])

    def test_success_electron_grid(self):
        self.assertEqual(small_lattice().electron_grid().size, 5)
        self.assertIsNone(LatticeSpec(1, 5.0, [[0], [-1]], [[1]]).electron_grid())


class TestHamiltonian(SimpleTestCase):
    def setUp(self):
        self.model = default_model(dimension=1, lam=0.3)

    def test_success_single_mode_hand_assembly(self):
        lattice = LatticeSpec.from_spacing(1, 0.5, [[0], [-1]], [[1]])
        basis = FockBasis(lattice, FockTruncation(n_max=1))
        H = build_hamiltonian(self.model, basis).toarray()
        g = 1j * 0.3 * lattice.box**-0.5 * math.exp(-0.125)
        expected = np.diag([0.0, 1.0, 0.125, 1.125]).astype(complex)
        expected[3, 0] = g
        expected[0, 3] = np.conj(g)
        np.testing.assert_allclose(H, expected, atol=1e-15)

    def test_success_hermitian_by_assembly(self):
        basis = FockBasis(small_lattice(), FockTruncation(n_max=2))
        self.assertEqual(hermiticity_defect(build_hamiltonian(self.model, basis)), 0.0)

    def test_success_decoupled_spectrum(self):
        basis = FockBasis(small_lattice(), FockTruncation(n_max=2))
        model = self.model.with_params(lam=0.0)
        self.assertLess(free_spectrum_defect(model, basis, build_hamiltonian(model, basis)), 1e-12)

    def test_success_parallel_assembly(self):
        basis = FockBasis(small_lattice(), FockTruncation(n_max=2))
        serial = build_hamiltonian(self.model, basis)
        parallel = build_hamiltonian(self.model, basis, threads=2)
        self.assertEqual(abs(serial - parallel).max(), 0.0)


class TestGibbsPhononState(SimpleTestCase):
    def test_success_vacuum(self):
        basis = FockBasis(small_lattice(), FockTruncation(n_max=0))
        state = gibbs_phonon_state(default_model(dimension=1), basis)
        np.testing.assert_array_equal(state.probabilities, [1.0])

    def test_success_truncated_occupation(self):
        self.assertAlmostEqual(truncated_occupation(math.exp(-1.0), 4), 0.548058, delta=1e-6)
        self.assertLess(abs(truncated_occupation(math.exp(-1.0), 9) - 1.0 / (math.e - 1.0)), 1e-3)
        self.assertGreater(abs(truncated_occupation(math.exp(-1.0), 8) - 1.0 / (math.e - 1.0)), 1e-3)

    def test_success_mode_occupation(self):
        basis = FockBasis(small_lattice(), FockTruncation(n_max=4))
        state = gibbs_phonon_state(default_model(dimension=1), basis)
        self.assertAlmostEqual(state.occupation(0), truncated_occupation(math.exp(-1.0), 4), places=12)
        self.assertAlmostEqual(state.probabilities.sum(), 1.0, places=12)

    def test_failure_unstable_bath(self):
        basis = FockBasis(small_lattice(), FockTruncation(n_max=1))
        with self.assertRaises(BathUnstable):
            gibbs_phonon_state(default_model(dimension=1, mu=1.5), basis)


class TestCommutators(SimpleTestCase):
    def setUp(self):
        self.basis = FockBasis(small_lattice(), FockTruncation(n_max=3))
        self.identity = sparse.identity(self.basis.phonon_size, format="csr")

    def test_success_canonical_below_cap(self):
        a, c = annihilation(self.basis, 0), creation(self.basis, 0)
        self.assertLess(commutator_defect(a, c, self.identity, self.basis.interior()), 1e-12)

    def test_success_cap_breaks_canonical(self):
        a, c = annihilation(self.basis, 0), creation(self.basis, 0)
        self.assertAlmostEqual(commutator_defect(a, c, self.identity), 4.0, places=12)

    def test_success_b_operators_commute(self):
        partner = self.basis.lattice.partner(0)
        b, minus = b_operator(self.basis, 0), b_operator(self.basis, partner)
        self.assertLess(commutator_defect(b, minus, states=self.basis.interior()), 1e-12)
        self.assertLess(commutator_defect(b, b), 1e-12)


class TestEvolution(SimpleTestCase):
    def setUp(self):
        self.model = default_model(dimension=1, lam=0.5)
        self.basis = FockBasis(small_lattice(), FockTruncation(n_max=2))
        self.H = build_hamiltonian(self.model, self.basis)
        electron = gaussian_electron(self.basis.lattice, momentum=[0.5])
        self.state = product_state(self.basis, electron, gibbs_phonon_state(self.model, self.basis))

    def test_success_initial_state_valid(self):
        self.state.validate()

    def test_success_zero_time(self):
        evolved = Propagator(self.H).evolve(self.state, 0.0)
        np.testing.assert_allclose(evolved.matrix, self.state.matrix, atol=1e-12)

    def test_success_conservation(self):
        report = conservation_report(Propagator(self.H), self.state, np.linspace(0.0, 10.0, 6))
        self.assertTrue(report.passed(), report.as_dict())

    def test_success_free_evolution(self):
        model = self.model.with_params(lam=0.0)
        H = build_hamiltonian(model, self.basis)
        t = 1.7
        evolved = Propagator(H).evolve(self.state, t)
        e = model.e(self.basis.lattice.electron_momenta)
        start = partial_trace_phonons(self.state).matrix
        expected = start * np.exp(-1j * t * (e[:, None] - e[None, :]))
        np.testing.assert_allclose(partial_trace_phonons(evolved).matrix, expected, atol=1e-12)
        np.testing.assert_allclose(partial_trace_electron(evolved), partial_trace_electron(self.state), atol=1e-12)

    def test_success_krylov_matches_dense(self):
        dense = Propagator(self.H).evolve(self.state, 1.5)
        krylov = Propagator(self.H, dense_dimension=0).evolve(self.state, 1.5)
        np.testing.assert_allclose(krylov.matrix, dense.matrix, atol=1e-8)

    def test_failure_krylov_budget(self):
        with self.assertRaises(StepRejected):
            Propagator(self.H, dense_dimension=0, budget=1e-300).evolve(self.state, 1.0)

    def test_success_trajectories_independent_of_threads(self):
        propagator = Propagator(self.H)
        states = [self.state, CoupledState(self.basis, np.eye(self.basis.dimension) / self.basis.dimension)]
        serial = run_trajectories(propagator, states, [0.5, 1.0])
        parallel = run_trajectories(propagator, states, [0.5, 1.0], threads=2)
        for one, other in zip(serial, parallel):
            for a, b in zip(one, other):
                np.testing.assert_array_equal(a.matrix, b.matrix)


class TestPartialTrace(SimpleTestCase):
    def test_success_product_state(self):
        basis = FockBasis(small_lattice(), FockTruncation(n_max=1))
        electron = gaussian_electron(basis.lattice, width=0.7)
        state = product_state(basis, electron, gibbs_phonon_state(default_model(dimension=1), basis))
        reduced = partial_trace_phonons(state)
        np.testing.assert_allclose(reduced.matrix, electron, atol=1e-15)
        self.assertAlmostEqual(reduced.trace.real, state.trace.real, places=14)
        self.assertAlmostEqual(reduced.to_grid().trace, 1.0, places=12)

    def test_success_entangled_pair(self):
        lattice = LatticeSpec.from_spacing(1, 0.5, [[0], [-1]], [[1]])
        basis = FockBasis(lattice, FockTruncation(n_max=1))
        vector = np.zeros(basis.dimension)
        vector[basis.index(0, (0,))] = 1.0
        vector[basis.index(1, (1,))] = 1.0
        reduced = partial_trace_phonons(CoupledState.from_vector(basis, vector))
        np.testing.assert_allclose(reduced.matrix, 0.5 * np.eye(2), atol=1e-15)


class TestCovariance(SimpleTestCase):
    def setUp(self):
        self.model = default_model(dimension=1, beta=2.0)
        self.basis = FockBasis(small_lattice(1), FockTruncation(n_max=8))
        self.bath = gibbs_phonon_state(self.model, self.basis)
        self.k = self.basis.lattice.modes[0]

    def test_success_two_point_matches_truncated_covariance(self):
        for tau, s in ((0.0, 0.0), (1.3, 0.2), (-0.7, 2.5)):
            value = phonon_two_point(self.model, self.bath, 0, 0, tau, s)
            expected = G_sharp(self.model, self.k, tau - s, state=self.bath, mode=0)
            self.assertLess(abs(value - expected), 1e-12)

    def test_success_two_point_within_truncation_error(self):
        for tau in np.linspace(0.0, 4.0, 9):
            value = phonon_two_point(self.model, self.bath, 0, 0, tau, 0.0)
            self.assertLess(abs(value - G_sharp(self.model, self.k, tau)), 1e-3)

    def test_success_distinct_modes_uncorrelated(self):
        self.assertLess(abs(phonon_two_point(self.model, self.bath, 0, 1, 0.4, 0.1)), 1e-14)

    def test_success_random_potential_picture(self):
        q2 = float(self.model.Q(self.k)) ** 2
        for t in (0.0, 0.8, 2.0):
            value = q2 * phonon_two_point(self.model, self.bath, 0, 0, t, 0.3)
            self.assertLess(abs(value - random_potential_covariance(self.model, self.k, t, 0.3)), 1e-6)


class TestLadderTermCheck(SimpleTestCase):
    def setUp(self):
        self.model = default_model(dimension=1)
        self.lattice = LatticeSpec.from_spacing(1, 0.5, [[-1], [0], [1], [2]], [[1], [-1]])

    def test_success_routes_agree(self):
        report = ladder_term_check(self.lattice, self.model, 0.1, 2.0)
        self.assertTrue(report.agreed(1e-8), report.as_dict())
        self.assertGreater(report.perturbative, 0.0)
        self.assertTrue(report.oracle_only)

    def test_success_quadratic_in_coupling(self):
        weak = ladder_term_check(self.lattice, self.model, 0.1, 2.0)
        strong = ladder_term_check(self.lattice, self.model, 0.2, 2.0)
        self.assertAlmostEqual(strong.perturbative / weak.perturbative, 4.0, places=10)

    def test_success_no_coupling(self):
        report = ladder_term_check(self.lattice, self.model, 0.0, 2.0)
        self.assertEqual(report.perturbative, 0.0)
        self.assertEqual(report.formula, 0.0)

    def test_success_coupling_off_grid(self):
        model = self.model.with_params(coupling=annulus(inner=2.0, outer=3.0))
        report = ladder_term_check(self.lattice, model, 0.1, 2.0)
        self.assertEqual(report.perturbative, 0.0)
        self.assertEqual(report.formula, 0.0)

    def test_success_cap_leakage_reported(self):
        report = ladder_term_check(self.lattice, self.model, 0.1, 2.0)
        self.assertGreater(report.cap_leakage, 0.0)
        self.assertGreater(report.capped_weight, 0.0)

    def test_failure_too_many_modes(self):
        lattice = LatticeSpec.from_spacing(1, 0.5, [[0], [1]], [[1], [-1], [2], [-2]])
        with self.assertRaises(QuantumError):
            ladder_term_check(lattice, self.model, 0.1, 1.0)
