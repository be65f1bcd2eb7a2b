import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase, override_settings

from kinetics import streams
from physics.dispersions import annulus, make_dispersion, zero
from physics.model import ABSORPTION, BRANCHES, EMISSION, default_model

from .collision import CollisionKernel, kernel_table
from .exceptions import NoOpenChannel, QuadratureFail, RouteMismatch
from .resolvent import (
    ResolventFunction,
    branch_spectra,
    branch_theta,
    compare_routes,
    psi_function,
    resummed_propagator,
    theta_decay_slope,
    theta_fn,
    upsilon,
    upsilon_boundary,
    upsilon_direct,
)
from .shells import BranchSpectrum, branch_integral
from .weights import VertexWeight

OCCUPATION = 1.0 / (math.e - 1.0)


def closed_form_theta(s):
    """Theta(s, 0, 0) of the default model in d = 3."""
    return sum(
        np.exp(-1j * s * sigma) * (OCCUPATION + 0.5 * (sigma + 1)) * (2.0 + 1j * s) ** -1.5 for sigma in BRANCHES
    )


class TestVertexWeight(SimpleTestCase):
    def setUp(self):
        self.weight = VertexWeight(default_model())
        self.k = np.random.default_rng(1).normal(size=(50, 3))

    def test_success_branch_split(self):
        np.testing.assert_allclose(self.weight.split(self.k), self.weight.model.Q(self.k) ** 2, rtol=1e-12)

    def test_success_even(self):
        for sigma in BRANCHES:
            np.testing.assert_allclose(self.weight(self.k, sigma), self.weight(-self.k, sigma), rtol=1e-12)

    def test_success_envelope_dominates(self):
        envelope = self.weight.envelope(self.k[:5])
        for sigma in BRANCHES:
            self.assertTrue(np.all(envelope >= self.weight(self.k[:5], sigma)))


class TestCrossSections(SimpleTestCase):
    def setUp(self):
        self.model = default_model()
        self.kernel = CollisionKernel(self.model, resolution=16)

    def test_success_rest_momentum_absorption_only(self):
        emission, absorption = self.kernel.exact_branch_cross_sections(np.zeros(3))[0]
        self.assertEqual(emission, 0.0)
        expected = 2.0 * math.pi * OCCUPATION * math.exp(-2.0) * 4.0 * math.pi * math.sqrt(2.0)
        expected /= (2.0 * math.pi) ** 1.5
        self.assertAlmostEqual(absorption, expected, places=8)
        self.assertAlmostEqual(absorption, 0.55841, places=5)

    def test_success_vanishing_coupling(self):
        kernel = CollisionKernel(default_model(coupling=zero()))
        np.testing.assert_array_equal(kernel.total_cross_section(np.eye(3)), np.zeros(3))

    def test_success_table_matches_exact(self):
        V = np.array([[0.3, 0.0, 0.0], [0.0, 1.7, 0.0], [1.0, 1.0, 1.0], [0.0, 0.0, -3.2]])
        np.testing.assert_allclose(
            self.kernel.branch_cross_sections(V), self.kernel.exact_branch_cross_sections(V), rtol=2e-3, atol=1e-6
        )

    def test_success_even_in_momentum(self):
        model = default_model().with_params(electron=make_dispersion("quadratic_plus_eps_cos", eps=0.05))
        kernel = CollisionKernel(model, resolution=8)
        self.assertIsNone(kernel.table)
        V = np.random.default_rng(2).normal(size=(20, 3))
        np.testing.assert_allclose(kernel.total_cross_section(V), kernel.total_cross_section(-V), rtol=1e-9)

    def test_success_detailed_balance_weights(self):
        rng = np.random.default_rng(3)
        V, U = rng.normal(size=(30, 3)), rng.normal(size=(30, 3))
        ratio = self.kernel.branch_weight(V, U, EMISSION) / self.kernel.branch_weight(V, U, ABSORPTION)
        expected = np.exp(self.model.beta * self.model.omega(U - V) - self.model.mu)
        np.testing.assert_allclose(ratio, expected, rtol=1e-10)

    def test_success_kernel_table_rows(self):
        rows = kernel_table(self.kernel, [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        self.assertEqual(set(rows[0]), {"V1", "V2", "V3", "sigma0", "emission", "absorption"})
        self.assertAlmostEqual(rows[1]["sigma0"], rows[1]["emission"] + rows[1]["absorption"])


class TestSamplePostCollision(SimpleTestCase):
    def setUp(self):
        self.model = default_model()
        self.kernel = CollisionKernel(self.model, resolution=16)

    def test_success_closed_emission_channel(self):
        V = np.zeros((2000, 3))
        U, branch = self.kernel.sample_post_collision(V, streams.stream(1, streams.KERNELS, 0))
        self.assertTrue(np.all(branch == ABSORPTION))
        mismatch = self.kernel.energy_mismatch(V, U, ABSORPTION)
        self.assertLessEqual(np.abs(mismatch).max(), 1e-3)

    def test_success_branch_ratio(self):
        V = np.tile([2.5, 0.0, 0.0], (100_000, 1))
        rates = self.kernel.exact_branch_cross_sections(V[:1])[0]
        U, branch = self.kernel.sample_post_collision(V, streams.stream(2, streams.KERNELS, 0))
        share = rates[0] / rates.sum()
        observed = float(np.mean(branch == EMISSION))
        self.assertLessEqual(abs(observed - share), 3.0 * math.sqrt(share * (1.0 - share) / len(V)))
        for sigma in BRANCHES:
            mismatch = self.kernel.energy_mismatch(V[branch == sigma], U[branch == sigma], sigma)
            self.assertLessEqual(np.abs(mismatch).max(), 1e-3)

    def test_success_shell_distribution(self):
        V = np.tile([0.5, 0.0, 0.0], (40_000, 1))
        U, _ = self.kernel.sample_post_collision(V, streams.stream(3, streams.KERNELS, 0))
        transfer = (U - V)[:, 0]
        weight = VertexWeight(self.model)
        numerator = branch_integral(
            self.model,
            ABSORPTION,
            V[:1],
            self.model.e(V[:1]),
            F=lambda k: weight(k, ABSORPTION) * k[..., 0],
            resolution=16,
        )[0]
        denominator = branch_integral(self.model, ABSORPTION, V[:1], self.model.e(V[:1]), resolution=16)[0]
        stderr = transfer.std() / math.sqrt(len(transfer))
        self.assertLessEqual(abs(transfer.mean() - numerator / denominator), 3.5 * stderr)

    def test_success_narrow_annulus_distribution(self):
        model = default_model(coupling=annulus(0.9, 1.1))
        kernel = CollisionKernel(model)
        V = np.tile([1.5, 0.0, 0.0], (4000, 1))
        rates = np.tile([0.0, 1.0], (len(V), 1))
        U, branch = kernel.sample_post_collision(V, streams.stream(5, streams.KERNELS, 0), rates=rates)
        self.assertTrue(np.all(branch == ABSORPTION))
        # offset inside the band, in units of its half-width
        offset = (np.linalg.norm(U - V, axis=-1) - 1.0) / 0.1
        self.assertLess(np.abs(offset).max(), 1.0)

        weight = VertexWeight(model)

        def second_moment(k):
            return weight(k, ABSORPTION) * ((np.linalg.norm(k, axis=-1) - 1.0) / 0.1) ** 2

        levels = model.e(V[:1])
        expected = (
            branch_integral(model, ABSORPTION, V[:1], levels, F=second_moment, resolution=256)[0]
            / branch_integral(model, ABSORPTION, V[:1], levels, resolution=256)[0]
        )
        squares = offset**2
        stderr = squares.std() / math.sqrt(len(squares))
        self.assertLessEqual(abs(squares.mean() - expected), 4.0 * stderr + 1e-2)

    def test_failure_no_open_channel(self):
        kernel = CollisionKernel(default_model(coupling=zero()))
        with self.assertRaises(NoOpenChannel):
            kernel.sample_post_collision(np.zeros((1, 3)), streams.stream(4, streams.KERNELS, 0))


class TestTheta(SimpleTestCase):
    def setUp(self):
        self.model = default_model()
        self.p = np.zeros(3)

    def test_success_unit_phase_at_zero(self):
        value = theta_fn(self.model, 0.0, self.p)
        self.assertAlmostEqual(value.real, 0.765076, places=5)
        self.assertEqual(value.imag, 0.0)

    def test_success_closed_form(self):
        for s in (0.5, 1.0, 5.0):
            value = theta_fn(self.model, s, self.p)
            self.assertAlmostEqual(abs(value - closed_form_theta(s)), 0.0, places=5)

    def test_success_modulus_independent_of_shift(self):
        first = theta_fn(self.model, 3.0, self.p, omega=0.0)
        second = theta_fn(self.model, 3.0, self.p, omega=2.7)
        self.assertAlmostEqual(abs(first), abs(second), places=12)

    def test_success_decay_slope(self):
        fit = theta_decay_slope(self.model)
        self.assertLessEqual(fit.slope, -1.45)
        self.assertGreater(fit.slope, -1.55)
        self.assertLess(fit.full_slope, -1.35)

    def test_success_spectrum_mass(self):
        masses = [BranchSpectrum(self.model, self.p, sigma, resolution=8).mass for sigma in BRANCHES]
        self.assertAlmostEqual(sum(masses), (2.0 * OCCUPATION + 1.0) * 2.0**-1.5, places=6)

    def test_failure_quadrature_limit(self):
        spectrum = branch_spectra(self.model, self.p, resolution=8)[0]
        with self.assertRaises(QuadratureFail):
            branch_theta(spectrum, 40.0, limit=1)


class TestUpsilon(SimpleTestCase):
    def setUp(self):
        self.model = default_model()

    def test_success_vanishing_coupling(self):
        self.assertEqual(upsilon(default_model(coupling=zero()), 0.1, 1.0, np.zeros(3)), 0j)

    def test_success_negative_imaginary_part(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            alpha, p = rng.uniform(-3.0, 6.0), rng.normal(scale=0.7, size=3)
            self.assertLess(upsilon(self.model, 0.1, alpha, p, check=False, resolution=8).imag, 0.0)

    def test_success_routes_agree(self):
        routes = compare_routes(self.model, 0.1, 2.0, np.zeros(3), resolution=16)
        self.assertTrue(routes.agreed, routes)
        self.assertLess(abs(routes.direct - routes.time), 1e-2 * abs(routes.direct))

    def test_success_decay_in_energy(self):
        near = upsilon(self.model, 0.1, 2.0, np.zeros(3), check=False, resolution=16)
        far = upsilon(self.model, 0.1, 10.0, np.zeros(3), check=False, resolution=16)
        self.assertLessEqual(abs(far), abs(near) / 5.0)

    def test_failure_nonpositive_eta(self):
        with self.assertRaises(ValueError):
            upsilon(self.model, 0.0, 1.0, np.zeros(3))

    def test_failure_coarse_time_route(self):
        coarse = {**settings.KINETICS, "SPECTRUM_NODES": 4}
        with override_settings(KINETICS=coarse):
            with self.assertRaises(RouteMismatch):
                upsilon(self.model, 0.1, 2.0, np.zeros(3), resolution=16)


class TestUpsilonBoundary(SimpleTestCase):
    def setUp(self):
        self.model = default_model()
        self.p = np.zeros(3)

    def test_success_empty_shell(self):
        result = upsilon_boundary(self.model, -2.5, self.p, resolution=8)
        self.assertEqual(result.imag_surface, 0.0)
        self.assertEqual(result.value.imag, 0.0)

    def test_success_vanishing_coupling(self):
        self.assertEqual(upsilon_boundary(default_model(coupling=zero()), 2.0, self.p).value, 0j)

    def test_success_surface_matches_extrapolation(self):
        result = upsilon_boundary(self.model, 2.0, self.p, resolution=16)
        self.assertLess(result.imag_surface, 0.0)
        self.assertLessEqual(abs(result.imag_extrapolated - result.imag_surface), 1e-2 * abs(result.imag_surface))

    def test_success_mollified_surface(self):
        direct = upsilon_boundary(self.model, 2.0, self.p, resolution=8, etas=(0.1, 0.05))
        mollified = upsilon_boundary(self.model, 2.0, self.p, resolution=8, etas=(0.1, 0.05), method="mollified")
        self.assertAlmostEqual(direct.imag_surface, mollified.imag_surface, places=4)

    def test_success_total_cross_section_identity(self):
        kernel = CollisionKernel(self.model, resolution=16)
        rng = np.random.default_rng(5)
        for _ in range(10):
            direction = rng.normal(size=3)
            V = direction / np.linalg.norm(direction) * rng.uniform(0.0, 0.9)
            psi = psi_function(self.model, V, resolution=16)
            sigma0 = kernel.exact_branch_cross_sections(V)[0].sum()
            self.assertAlmostEqual(-2.0 * psi.imag_surface, sigma0, places=10)
            self.assertLessEqual(abs(-2.0 * psi.imag_extrapolated - sigma0), 1e-2 * sigma0)


class TestResolventFunction(SimpleTestCase):
    def setUp(self):
        self.function = ResolventFunction(default_model(), t=10.0, step=0.5, resolution=8)

    def test_success_node_values(self):
        value = self.function(1.0, [0.5, 0.0, -0.5])
        expected, _ = upsilon_direct(default_model(), 0.1, 1.0, np.array([0.5, 0.0, -0.5]), resolution=8)
        self.assertAlmostEqual(abs(value - expected), 0.0, places=12)
        self.assertEqual(len(self.function), 1)

    def test_success_interpolates_between_nodes(self):
        low = self.function(1.0, [0.0, 0.0, 0.0])
        high = self.function(1.5, [0.0, 0.0, 0.0])
        middle = self.function(1.25, [0.0, 0.0, 0.0])
        self.assertAlmostEqual(abs(middle - 0.5 * (low + high)), 0.0, places=12)
        self.assertEqual(len(self.function), 2)

    def test_failure_needs_regularization(self):
        with self.assertRaises(ValueError):
            ResolventFunction(default_model())


class TestResummation(SimpleTestCase):
    def test_success_partial_sums_converge(self):
        model = default_model()
        rng = np.random.default_rng(8)
        for _ in range(10):
            alpha, p = rng.uniform(-2.0, 4.0), rng.normal(scale=0.5, size=3)
            result = resummed_propagator(model, alpha, p, eta=0.1, lam=0.2, terms=60, resolution=8)
            self.assertTrue(result.converged)
            self.assertLess(result.error(), 1e-8 * max(1.0, abs(result.limit)))
            self.assertGreater(result.error(terms=1), result.error())
