import math

import numpy as np
from django.test import SimpleTestCase

from physics.dispersions import quadratic
from physics.model import ABSORPTION, EMISSION, default_model

from .exceptions import DegenerateGradient, InvalidProbe, NonConvergent
from .slabs import (
    LevelSetSlab,
    ball_volume,
    critical_points,
    intersection_volume,
    layer_constant,
    slab_volume,
    transversality_probe,
)
from .sphere import sphere_area, sphere_quadrature
from .surfaces import level_set_integral, surface_delta_integral

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def unit_sphere(p):
    return np.sum(p * p, axis=-1) - 1.0


def ones(p):
    return np.ones(p.shape[:-1])


class TestSphereQuadrature(SimpleTestCase):
    def test_success_total_area(self):
        for d in range(1, 6):
            _, weights = sphere_quadrature(d, 6)
            self.assertAlmostEqual(weights.sum(), sphere_area(d), places=10)

    def test_success_unit_directions(self):
        directions, _ = sphere_quadrature(4, 5)
        np.testing.assert_allclose(np.linalg.norm(directions, axis=-1), 1.0, atol=1e-12)

    def test_success_second_moment(self):
        directions, weights = sphere_quadrature(3, 8)
        self.assertAlmostEqual(np.dot(weights, directions[:, 2] ** 2), 4.0 * math.pi / 3.0, places=10)

    def test_failure_bad_resolution(self):
        with self.assertRaises(ValueError):
            sphere_quadrature(3, 0)


class TestSurfaceDeltaIntegral(SimpleTestCase):
    def setUp(self):
        self.box = (np.full(3, -2.0), np.full(3, 2.0))

    def test_success_unit_sphere(self):
        result = surface_delta_integral(ones, unit_sphere, self.box, resolution=12)
        self.assertAlmostEqual(result.value, INV_SQRT_2PI, places=5)
        self.assertAlmostEqual(result.direct, INV_SQRT_2PI, places=8)
        self.assertAlmostEqual(result.value, 0.398942, places=5)

    def test_success_zero_integrand(self):
        result = surface_delta_integral(lambda p: np.zeros(p.shape[:-1]), unit_sphere, self.box, resolution=8)
        self.assertEqual(result.value, 0.0)

    def test_success_half_domain_symmetry(self):
        def weight(p):
            return 1.0 + p[..., 0] ** 2

        full = surface_delta_integral(weight, unit_sphere, self.box, resolution=12)
        half = surface_delta_integral(weight, unit_sphere, (np.array([0.0, -2.0, -2.0]), self.box[1]), resolution=12)
        self.assertAlmostEqual(2.0 * half.value, full.value, places=5)

    def test_success_radius_scaling(self):
        box = (np.full(3, -3.0), np.full(3, 3.0))
        for r in (0.5, 1.0, 2.0):
            result = surface_delta_integral(ones, lambda p: np.sum(p * p, axis=-1) - r * r, box, resolution=8)
            expected = sphere_area(3) * r**2 / (2.0 * r) / (2.0 * math.pi) ** 1.5
            self.assertAlmostEqual(result.value, expected, places=5)

    def test_success_linear_in_integrand(self):
        def first(p):
            return p[..., 0] ** 2

        def second(p):
            return np.cos(p[..., 1])

        a = surface_delta_integral(first, unit_sphere, self.box, resolution=8).value
        b = surface_delta_integral(second, unit_sphere, self.box, resolution=8).value
        both = surface_delta_integral(lambda p: 2.0 * first(p) - second(p), unit_sphere, self.box, resolution=8).value
        self.assertAlmostEqual(both, 2.0 * a - b, places=6)

    def test_failure_degenerate_gradient(self):
        with self.assertRaises(DegenerateGradient):
            surface_delta_integral(ones, lambda p: unit_sphere(p) ** 3, self.box, resolution=6)

    def test_failure_extrapolation_residual(self):
        with self.assertRaises(NonConvergent):
            surface_delta_integral(ones, unit_sphere, self.box, resolution=6, widths=(1.0, 0.5, 0.25), rtol=1e-6)

    def test_success_direct_route_without_domain(self):
        result = level_set_integral(ones, unit_sphere, 3, resolution=10)
        self.assertAlmostEqual(result.value, INV_SQRT_2PI, places=10)


class TestSlabVolume(SimpleTestCase):
    def setUp(self):
        self.model = default_model()
        self.center = np.array([1.0, 0.0, 0.0])

    def test_success_slab_covers_ball(self):
        slab = LevelSetSlab((0.0, 0.0, 0.0), EMISSION, 1.5, 100.0)
        estimate = slab_volume(self.model, slab, self.center, 0.1, samples=10_000, seed=3)
        self.assertAlmostEqual(estimate.value, ball_volume(3, 0.1), places=14)
        self.assertEqual(estimate.stderr, 0.0)

    def test_success_empty_slab(self):
        slab = LevelSetSlab((0.0, 0.0, 0.0), EMISSION, -100.0, 0.01)
        estimate = slab_volume(self.model, slab, self.center, 0.1, samples=10_000, seed=3)
        self.assertEqual(estimate.value, 0.0)
        self.assertEqual(estimate.stderr, 0.0)

    def test_success_layer_constant(self):
        slab = LevelSetSlab((0.0, 0.0, 0.0), EMISSION, 1.5, 0.01)
        estimate = slab_volume(self.model, slab, self.center, 0.1, samples=200_000, seed=5)
        constant = layer_constant(estimate, slab, 0.1, 3)
        # flat slab of thickness 2 delta through the center of the ball
        self.assertAlmostEqual(constant.value, INV_SQRT_2PI, delta=0.03)

    def test_success_reproducible(self):
        slab = LevelSetSlab((0.0, 0.0, 0.0), EMISSION, 1.5, 0.01)
        first = slab_volume(self.model, slab, self.center, 0.1, samples=50_000, seed=9)
        second = slab_volume(self.model, slab, self.center, 0.1, samples=50_000, seed=9)
        self.assertEqual(first, second)

    def test_failure_nonpositive_width(self):
        with self.assertRaises(InvalidProbe):
            LevelSetSlab((0.0, 0.0, 0.0), EMISSION, 1.5, 0.0)


class TestTransversalityProbe(SimpleTestCase):
    def setUp(self):
        self.model = default_model()
        self.p1 = np.array([1.0, 0.0, 0.0])
        self.p2 = np.array([-1.0, 0.0, 0.0])
        # both absorption shells have radius sqrt(5) and meet on the circle k1 = 0, |k| = 2
        self.meeting = np.array([[0.0, 2.0, 0.0]])

    def test_failure_equal_momenta(self):
        with self.assertRaises(InvalidProbe):
            transversality_probe(self.model, self.p1, self.p1, 1.5, 1.5, 0.01, 0.01, 0.1)

    def test_failure_radius_above_small_scale(self):
        with self.assertRaises(InvalidProbe):
            transversality_probe(self.model, self.p1, self.p2, 1.5, 1.5, 0.01, 0.01, 0.5)

    def test_success_finite_and_stable_ratio(self):
        kwargs = {"sigma1": ABSORPTION, "sigma2": ABSORPTION, "candidates": 2, "samples": 400_000, "seed": 17}
        coarse = transversality_probe(self.model, self.p1, self.p2, 1.5, 1.5, 0.01, 0.01, 0.1, **kwargs)
        fine = transversality_probe(self.model, self.p1, self.p2, 1.5, 1.5, 0.005, 0.005, 0.1, **kwargs)
        self.assertTrue(math.isfinite(coarse.ratio.value))
        self.assertGreater(coarse.ratio.value, 0.0)
        spread = 4.0 * math.hypot(coarse.ratio.stderr, fine.ratio.stderr) + 0.05
        self.assertLess(abs(coarse.ratio.value - fine.ratio.value), spread)

    def test_success_linear_in_first_width(self):
        first = LevelSetSlab(tuple(self.p1), ABSORPTION, 1.5, 0.005)
        second = LevelSetSlab(tuple(self.p2), ABSORPTION, 1.5, 0.01)
        center = self.meeting[0]
        single = intersection_volume(self.model, first, second, center, 0.1, samples=400_000, seed=23)
        double = intersection_volume(self.model, first.widened(2.0), second, center, 0.1, samples=400_000, seed=23)
        self.assertGreater(single.value, 0.0)
        spread = 3.0 * math.hypot(double.stderr, 2.0 * single.stderr)
        self.assertLessEqual(abs(double.value - 2.0 * single.value), spread)


class TestCriticalPoints(SimpleTestCase):
    def test_success_quadratic_band(self):
        model = default_model()
        p = np.array([[0.5, -1.0, 2.0], [0.0, 0.0, 0.0]])
        np.testing.assert_allclose(critical_points(model, p, EMISSION), -p, atol=1e-12)

    def test_success_dispersive_phonon(self):
        model = default_model(mu=-1.0).with_params(phonon=quadratic(curvature=0.5))
        p = np.array([[1.0, 0.0, 0.0]])
        # grad of |k + p|^2 / 2 + |k|^2 / 4 vanishes at k = -2p/3
        np.testing.assert_allclose(critical_points(model, p, EMISSION), -2.0 * p / 3.0, atol=1e-12)
