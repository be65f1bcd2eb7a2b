import math

import numpy as np
from django.test import SimpleTestCase

from .exceptions import GridMismatch, InvalidDensityMatrix, NormUnbounded, PairingMismatch
from .grids import (
    DensityMatrixGrid,
    MomentumGrid,
    gaussian_state,
    random_state,
    rescale,
    wigner_transform,
)
from .observables import (
    GaussianObservable,
    MomentumObservable,
    constant_observable,
    jeps_norm,
    momentum_pairing,
    observable_kernel,
    operator_norm_squared,
    pair,
    trace_pairing,
)
from .wkb import WKBState, amplitude_mass, flat_phase, gaussian_amplitude, linear_phase, wkb_wigner_limit_check


def gaussian_overlap(A, m1, B, m2):
    """int exp(-A (x - m1)^2 - B (x - m2)^2) dx / sqrt(2 pi)."""
    return math.sqrt(math.pi / (A + B)) * math.exp(-A * B * (m1 - m2) ** 2 / (A + B)) / math.sqrt(2.0 * math.pi)


class TestMomentumGrid(SimpleTestCase):
    def setUp(self):
        self.grid = MomentumGrid.from_spacing(2, 3, 0.5)

    def test_success_spacing_and_weight(self):
        self.assertAlmostEqual(self.grid.spacing, 0.5, places=14)
        self.assertAlmostEqual(self.grid.weight, (0.5 / math.sqrt(2.0 * math.pi)) ** 2, places=14)
        self.assertEqual(self.grid.size, 49)

    def test_success_locate(self):
        flat = self.grid.locate(np.array([[0, 0], [3, -3], [4, 0]]))
        np.testing.assert_array_equal(self.grid.indices[flat[:2]], [[0, 0], [3, -3]])
        self.assertEqual(flat[2], -1)

    def test_failure_off_lattice(self):
        with self.assertRaises(GridMismatch):
            self.grid.lattice_index([0.25, 0.0])


class TestWignerTransform(SimpleTestCase):
    def setUp(self):
        self.grid = MomentumGrid.from_spacing(2, 16, 0.5)

    def test_success_gaussian_origin_value(self):
        grid = MomentumGrid.from_spacing(3, 5, 0.8)
        W = wigner_transform(gaussian_state(grid, trace=(2.0 * math.pi) ** -1.5))
        self.assertAlmostEqual(W.values([[0.0, 0.0, 0.0]], [0.0, 0.0, 0.0])[0], (2.0 / math.pi) ** 1.5, places=9)
        self.assertAlmostEqual(W.values([[0.0, 0.0, 0.0]], [0.0, 0.0, 0.0])[0], 0.50795, places=5)

    def test_success_unit_trace_gaussian(self):
        W = wigner_transform(gaussian_state(self.grid))
        x, v = np.array([[0.3, -0.2]]), np.array([0.5, 0.25])
        expected = 4.0 * math.exp(-np.sum(x**2) - np.sum(v**2))
        self.assertAlmostEqual(W.values(x, v)[0], expected, places=9)

    def test_success_shifted_packet(self):
        width, x0, p0 = 1.3, np.array([0.4, 0.0]), np.array([0.5, -0.5])
        W = wigner_transform(gaussian_state(self.grid, width=width, position=x0, momentum=p0))
        x, v = np.array([[0.1, 0.6], [1.0, -0.3]]), np.array([0.75, -0.25])
        expected = 4.0 * np.exp(-np.sum((x - x0) ** 2, axis=-1) / width**2 - width**2 * np.sum((v - p0) ** 2))
        np.testing.assert_allclose(W.values(x, v), expected, rtol=1e-7, atol=1e-12)

    def test_success_marginals(self):
        grid = MomentumGrid.from_spacing(1, 8, 0.6)
        density = random_state(grid, np.random.default_rng(3))
        W = wigner_transform(density)
        x = np.array([[-1.0], [0.0], [0.7]])
        np.testing.assert_allclose(W.position_marginal(x), density.position_density(x), rtol=1e-10, atol=1e-12)
        self.assertAlmostEqual(W.mass(), 1.0, places=10)
        self.assertEqual(W.momentum_marginal([0.3]), 0.0)
        self.assertAlmostEqual(W.momentum_marginal([0.6]), 2.0 * density.momentum_density()[9], places=12)

    def test_failure_not_hermitian(self):
        grid = MomentumGrid.from_spacing(1, 2, 1.0)
        kernel = np.eye(grid.size, dtype=complex)
        kernel[0, 1] = 0.5j
        with self.assertRaises(InvalidDensityMatrix):
            wigner_transform(DensityMatrixGrid(grid, kernel))

    def test_failure_pair_leaves_grid(self):
        W = wigner_transform(gaussian_state(MomentumGrid.from_spacing(1, 3, 1.0)))
        with self.assertRaises(GridMismatch):
            W.fourier([1.0], [1.0])
        with self.assertRaises(GridMismatch):
            W.fourier([2.0], [3.0])


class TestRescale(SimpleTestCase):
    def setUp(self):
        grid = MomentumGrid.from_spacing(1, 10, 0.5)
        self.W = wigner_transform(gaussian_state(grid, width=0.8, position=[0.3]))
        self.X = np.array([[-0.4], [0.0], [0.2], [0.9]])

    def test_success_unit_scale(self):
        np.testing.assert_array_equal(rescale(self.W, 1.0).values(self.X, [0.5]), self.W.values(self.X, [0.5]))

    def test_success_mass_invariant(self):
        self.assertAlmostEqual(rescale(self.W, 0.1).mass(), self.W.mass(), places=12)

    def test_success_group_law(self):
        twice = rescale(rescale(self.W, 0.5), 0.4)
        once = rescale(self.W, 0.2)
        np.testing.assert_allclose(twice.values(self.X, [0.25]), once.values(self.X, [0.25]), rtol=1e-12)


class TestPairing(SimpleTestCase):
    def setUp(self):
        self.grid = MomentumGrid.from_spacing(1, 10, 0.6)
        self.density = random_state(self.grid, np.random.default_rng(5))
        self.W = wigner_transform(self.density)

    def test_success_constant_observable(self):
        self.assertAlmostEqual(pair(constant_observable(), self.W), 1.0, places=10)

    def test_failure_inconsistent_observable(self):
        def lopsided(V):
            # one value in the Wigner sum, another in the operator kernel
            return np.full(np.shape(V)[:-1], 1.0 if np.ndim(V) == 2 else 2.0)

        with self.assertRaises(PairingMismatch):
            pair(MomentumObservable(lopsided, bound=2.0), self.W)

    def test_success_momentum_observable(self):
        def g(V):
            return np.exp(-np.sum(V * V, axis=-1))

        J = MomentumObservable(g, bound=1.0)
        self.assertAlmostEqual(pair(J, rescale(self.W, 0.3)), momentum_pairing(g, self.density), places=10)

    def test_success_gaussian_closed_form(self):
        grid = MomentumGrid.from_spacing(2, 20, 0.35)
        x0, p0 = (0.3, 0.0), (0.2, -0.1)
        W = rescale(wigner_transform(gaussian_state(grid, position=x0, momentum=p0)), 0.5)
        J = GaussianObservable((0.5, 0.2), 1.2, v_center=(0.0, 0.3), v_width=0.8)
        expected = 4.0
        for i in range(2):
            expected *= gaussian_overlap(0.25 / (2.0 * 1.2**2), J.x_center[i] / 0.5, 1.0, x0[i])
            expected *= gaussian_overlap(1.0 / (2.0 * 0.8**2), J.v_center[i], 1.0, p0[i])
        self.assertLess(abs(pair(J, W) - expected), 1e-6)

    def test_success_trace_identity_random_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            density = random_state(self.grid, rng, rank=2)
            J = GaussianObservable(
                (rng.normal(),), rng.uniform(0.5, 2.0), v_center=(rng.normal(),), v_width=rng.uniform(0.5, 2.0)
            )
            eps = rng.uniform(0.3, 1.0)
            value = pair(J, rescale(wigner_transform(density), eps))
            trace = trace_pairing(density, observable_kernel(J, self.grid, eps))
            self.assertAlmostEqual(value, trace.real, places=9)

    def test_success_continuum_norm(self):
        self.assertEqual(jeps_norm(GaussianObservable((0.0,), 1.0, v_center=(0.0,), v_width=1.0)), 1.0)
        J = GaussianObservable((0.0,), 1.0, v_width=1.0, powers=(1,))
        self.assertAlmostEqual(jeps_norm(J), math.exp(-0.5), places=12)

    def test_failure_unbounded_norm(self):
        with self.assertRaises(NormUnbounded):
            jeps_norm(GaussianObservable((0.0,), 1.0, powers=(2,)))

    def test_success_operator_bound(self):
        J = GaussianObservable((0.4,), 0.7, v_center=(0.5,), v_width=1.0, powers=(1,))
        for eps in (1.0, 0.5):
            bound = jeps_norm(J, self.grid, eps)
            norm = operator_norm_squared(observable_kernel(J, self.grid, eps), self.grid)
            self.assertLessEqual(norm, bound**2 * (1.0 + 1e-9))
            self.assertGreater(norm, 0.0)


class TestWKB(SimpleTestCase):
    def setUp(self):
        self.A = gaussian_amplitude(1.0)

    def test_success_norm_preserved(self):
        state = WKBState(self.A, linear_phase([0.5]), 0.1)
        density = state.density(state.grid())
        self.assertAlmostEqual(density.trace, amplitude_mass(self.A), places=8)
        self.assertAlmostEqual(amplitude_mass(self.A), 1.0 / math.sqrt(2.0), places=8)

    def test_success_flat_phase_exact(self):
        J = GaussianObservable((0.3,), 1.5)
        report = wkb_wigner_limit_check(self.A, flat_phase, J)
        for defect in report.defects:
            self.assertLess(defect, 1e-8)

    def test_success_plane_wave_limit(self):
        J = GaussianObservable((0.0,), 1.0, v_center=(1.0,), v_width=0.5)
        report = wkb_wigner_limit_check(self.A, linear_phase([1.0]), J)
        self.assertTrue(report.monotone, report.as_dict())
        self.assertLess(report.defects[-1], 1e-2)
        self.assertLess(report.increments[-1], report.increments[0])
