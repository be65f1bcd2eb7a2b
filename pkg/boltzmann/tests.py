import math

import numpy as np
from django.test import SimpleTestCase
from scipy.integrate import quad

from kernels.collision import CollisionKernel
from physics.dispersions import zero
from physics.model import default_model

from .dyson import CollisionChain, dyson_series, dyson_term, sample_chains
from .ensemble import (
    GaussianPacket,
    ParticleEnsemble,
    energy_histogram_test,
    free_flight,
    gibbs_packet,
    observable_estimate,
    pair_observable,
)
from .exceptions import BoltzmannError, ShellViolation
from .kmc import evolve, jump_rate_check


def position_gaussian(X, V):
    return np.exp(-0.5 * np.sum(X * X, axis=-1))


def phase_space_gaussian(X, V):
    return np.exp(-np.sum(X * X, axis=-1) / 8.0 - 0.5 * np.sum(V * V, axis=-1))


class TestParticleEnsemble(SimpleTestCase):
    def setUp(self):
        self.model = default_model()
        self.packet = GaussianPacket((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), spread_x=0.5, spread_v=0.3)
        self.ensemble = ParticleEnsemble.from_packet(self.packet, 1000, seed=3, block_size=256)

    def test_success_equal_weights(self):
        self.assertEqual(len(self.ensemble), 1000)
        self.assertAlmostEqual(self.ensemble.mass, 1.0, places=12)

    def test_success_reproducible(self):
        again = ParticleEnsemble.from_packet(self.packet, 1000, seed=3, block_size=256)
        np.testing.assert_array_equal(again.V, self.ensemble.V)

    def test_success_zero_flight(self):
        moved = free_flight(self.ensemble, 0.0, self.model)
        np.testing.assert_array_equal(moved.X, self.ensemble.X)

    def test_success_flight_is_velocity_shift(self):
        moved = free_flight(self.ensemble, 0.7, self.model)
        np.testing.assert_allclose(moved.X, self.ensemble.X + 0.7 * self.ensemble.V, rtol=1e-14)
        np.testing.assert_array_equal(moved.V, self.ensemble.V)
        self.assertEqual(moved.T, 0.7)

    def test_success_flight_semigroup(self):
        twice = free_flight(free_flight(self.ensemble, 0.3, self.model), 0.45, self.model)
        once = free_flight(self.ensemble, 0.75, self.model)
        np.testing.assert_allclose(twice.X, once.X, rtol=1e-13, atol=1e-14)

    def test_failure_negative_flight(self):
        with self.assertRaises(BoltzmannError):
            free_flight(self.ensemble, -1.0, self.model)

    def test_failure_nonpositive_weight(self):
        with self.assertRaises(BoltzmannError):
            ParticleEnsemble(np.zeros((2, 3)), np.zeros((2, 3)), [1.0, 0.0])

    def test_success_pair_with_constant(self):
        self.assertAlmostEqual(pair_observable(lambda X, V: np.ones(len(X)), self.ensemble), 1.0, places=12)

    def test_success_pair_reflection(self):
        def J(X, V):
            return np.exp(-np.sum((X - 0.2) ** 2, axis=-1)) * np.cos(V[:, 0])

        def reflected_J(X, V):
            return J(-X, -V)

        self.assertAlmostEqual(
            pair_observable(J, self.ensemble), pair_observable(reflected_J, self.ensemble.reflected()), places=12
        )

    def test_success_pair_point_evaluation(self):
        target = self.ensemble.X[17]

        def J(X, V):
            return (np.linalg.norm(X - target, axis=-1) < 1e-12).astype(float)

        self.assertAlmostEqual(pair_observable(J, self.ensemble), 1.0 / 1000, places=12)

    def test_success_packet_density_normalized(self):
        packet = GaussianPacket((0.0,), (0.5,), spread_x=0.8, spread_v=0.4, mass=2.0)
        x = np.linspace(-8.0, 8.0, 801)
        X, V = np.meshgrid(x, x, indexing="ij")
        values = packet.density(X[..., None], V[..., None])
        self.assertAlmostEqual(values.sum() * (x[1] - x[0]) ** 2, 2.0, places=6)


class TestEvolve(SimpleTestCase):
    def setUp(self):
        self.model = default_model()
        self.kernel = CollisionKernel(self.model, resolution=16)
        self.packet = GaussianPacket((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), spread_x=1.0, spread_v=0.5)

    def test_success_free_transport_without_coupling(self):
        model = default_model(coupling=zero())
        ensemble = ParticleEnsemble.from_packet(self.packet, 500, seed=5)
        result = evolve(CollisionKernel(model), ensemble, 1.3)
        np.testing.assert_array_equal(result.X, free_flight(ensemble, 1.3, model).X)
        np.testing.assert_array_equal(result.V, ensemble.V)
        self.assertEqual(int(result.jumps.sum()), 0)

    def test_success_mass_conserved(self):
        ensemble = ParticleEnsemble.from_packet(self.packet, 800, seed=6)
        result = evolve(self.kernel, ensemble, 2.0)
        self.assertEqual(len(result), 800)
        self.assertEqual(result.mass, ensemble.mass)
        self.assertGreater(int(result.jumps.sum()), 0)

    def test_success_independent_of_threads(self):
        ensemble = ParticleEnsemble.from_packet(self.packet, 1500, seed=7)
        serial = evolve(self.kernel, ensemble, 1.0, threads=1, block_size=500)
        parallel = evolve(self.kernel, ensemble, 1.0, threads=3, block_size=500)
        np.testing.assert_array_equal(serial.X, parallel.X)
        np.testing.assert_array_equal(serial.V, parallel.V)

    def test_success_jump_rate_law(self):
        ensemble = ParticleEnsemble.from_packet(self.packet, 4000, seed=8)
        check = jump_rate_check(evolve(self.kernel, ensemble, 1.5))
        self.assertTrue(check.agreed, check.as_dict())
        self.assertGreater(check.exposure.value, 0.5)

    def test_success_gibbs_state_stationary(self):
        ensemble = ParticleEnsemble.from_packet(gibbs_packet(self.model), 6000, seed=9)
        self.assertTrue(energy_histogram_test(self.model, ensemble).passed())
        result = evolve(self.kernel, ensemble, 5.0)
        test = energy_histogram_test(self.model, result)
        self.assertTrue(test.passed(0.01), test)
        self.assertGreater(result.jumps.mean(), 2.0)

    def test_failure_histogram_needs_zero_mu(self):
        ensemble = ParticleEnsemble.from_packet(self.packet, 10, seed=1)
        with self.assertRaises(BoltzmannError):
            energy_histogram_test(default_model(mu=-0.5), ensemble)


class TestCollisionChain(SimpleTestCase):
    def setUp(self):
        self.model = default_model()
        self.kernel = CollisionKernel(self.model, resolution=16)
        self.packet = GaussianPacket((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), spread_v=1.0)

    def test_success_sampled_chains_on_shell(self):
        batch = sample_chains(self.kernel, 3, 1.0, self.packet, 200, np.random.default_rng(4))
        self.assertTrue(batch.alive.all())
        np.testing.assert_allclose(batch.times.sum(axis=-1), 1.0, rtol=1e-12)
        for row in range(200):
            batch.chain(row).check_shell(self.model)

    def test_failure_off_shell(self):
        chain = CollisionChain(np.array([0.5, 0.5]), np.array([[0.0, 0.0, 0.0], [0.3, 0.0, 0.0]]), np.array([1]))
        with self.assertRaises(ShellViolation):
            chain.check_shell(self.model)

    def test_failure_inconsistent_lengths(self):
        with self.assertRaises(ShellViolation):
            CollisionChain(np.array([1.0]), np.zeros((2, 3)), np.array([1]))


class TestDysonTerm(SimpleTestCase):
    def setUp(self):
        self.model = default_model()
        self.kernel = CollisionKernel(self.model, resolution=16)
        self.packet = GaussianPacket((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))

    def zeroth_order(self, kernel, T):
        """E_V[e^{-T sigma_0(V)} 2^{-3/2} e^{-T^2 |V|^2 / 4}] for V ~ N(0, I_3) by radial quadrature."""

        def integrand(r):
            rate = kernel.total_cross_section(np.array([[r, 0.0, 0.0]]))[0]
            chi = math.sqrt(2.0 / math.pi) * r * r * math.exp(-0.5 * r * r)
            return chi * math.exp(-T * rate - 0.25 * (T * r) ** 2)

        return 2.0**-1.5 * quad(integrand, 0.0, 9.0, limit=200)[0]

    def test_success_zeroth_order_closed_form(self):
        estimate = dyson_term(self.kernel, 0, 0.5, self.packet, position_gaussian, samples=40_000, seed=11)
        expected = self.zeroth_order(self.kernel, 0.5)
        self.assertLess(abs(estimate.value - expected), 3.0 * estimate.stderr + 1e-4)

    def test_success_free_zeroth_order(self):
        kernel = CollisionKernel(default_model(coupling=zero()))
        estimate = dyson_term(kernel, 0, 0.8, self.packet, position_gaussian, samples=40_000, seed=12)
        expected = 2.0**-1.5 * (1.0 + 0.5 * 0.8**2) ** -1.5
        self.assertLess(abs(estimate.value - expected), 3.0 * estimate.stderr + 1e-4)

    def test_success_vanishing_coupling(self):
        kernel = CollisionKernel(default_model(coupling=zero()))
        for n in (1, 2, 3):
            self.assertEqual(dyson_term(kernel, n, 1.0, self.packet, position_gaussian, samples=100).value, 0.0)

    def test_success_reproducible(self):
        first = dyson_term(self.kernel, 2, 0.4, self.packet, position_gaussian, samples=2000, seed=13, threads=1)
        second = dyson_term(self.kernel, 2, 0.4, self.packet, position_gaussian, samples=2000, seed=13, threads=2)
        self.assertEqual(first, second)

    def test_failure_negative_order(self):
        with self.assertRaises(ValueError):
            dyson_term(self.kernel, -1, 1.0, self.packet, position_gaussian, samples=10)

    def test_success_matches_kinetic_monte_carlo(self):
        packet = GaussianPacket((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), spread_x=1.0, spread_v=0.5)
        T = 0.4
        series = dyson_series(self.kernel, T, packet, phase_space_gaussian, orders=4, samples=20_000, seed=14)
        ensemble = evolve(self.kernel, ParticleEnsemble.from_packet(packet, 20_000, seed=15), T)
        kmc = observable_estimate(phase_space_gaussian, ensemble)
        self.assertTrue(series.total.agrees_with(kmc, sigmas=3.0, slack=series.tail), (series.as_dict(), kmc))
        self.assertLess(series.terms[4].value, series.terms[1].value)
