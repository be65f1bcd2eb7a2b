import math

import numpy as np
from django.test import SimpleTestCase

from .assumptions import AssumptionCheck, AssumptionReport, GridSpec, count_critical_points, validate_assumptions
from .dispersions import constant, constant_omega, make_dispersion, quadratic
from .exceptions import BathUnstable, GridTooCoarse, ModelError
from .model import EMISSION, ABSORPTION, build_model, default_model, detailed_balance_ratio, phi, phonon_occupation


class TestPhononOccupation(SimpleTestCase):
    def setUp(self):
        self.k = np.zeros(3)

    def test_success_bose_einstein_value(self):
        model = default_model(beta=1.0, omega=1.0, mu=0.0)
        self.assertAlmostEqual(float(phonon_occupation(model, self.k)), 1.0 / (math.e - 1.0), places=12)
        self.assertAlmostEqual(float(phonon_occupation(model, self.k)), 0.581977, places=6)

    def test_success_zero_temperature_limit(self):
        model = default_model(beta=1e6)
        self.assertEqual(float(phonon_occupation(model, self.k)), 0.0)

    def test_success_monotone_in_beta_and_omega(self):
        values = [float(phonon_occupation(default_model(beta=b, mu=-0.3), self.k)) for b in (0.5, 1.0, 2.0, 4.0)]
        self.assertEqual(values, sorted(values, reverse=True))
        values = [float(phonon_occupation(default_model(omega=w, mu=-0.3), self.k)) for w in (0.5, 1.0, 2.0, 4.0)]
        self.assertEqual(values, sorted(values, reverse=True))

    def test_failure_unstable_bath(self):
        model = default_model(beta=1.0, omega=1.0, mu=2.0)
        with self.assertRaises(BathUnstable):
            phonon_occupation(model, self.k)

    def test_success_detailed_balance_ratio(self):
        model = default_model(beta=1.3, omega=0.7, mu=-0.2)
        ratio = detailed_balance_ratio(model, self.k)
        self.assertAlmostEqual(float(ratio), math.exp(1.3 * 0.7 + 0.2), places=10)


class TestPhi(SimpleTestCase):
    def test_success_quadratic_without_phonon_energy(self):
        model = default_model(omega=1.0).with_params(phonon=constant_omega(0.0), mu=-1.0)
        self.assertAlmostEqual(float(phi(model, np.zeros(3), np.array([1.0, 0.0, 0.0]), EMISSION)), 0.5)

    def test_success_hand_evaluation(self):
        model = default_model(omega=1.0)
        value = phi(model, np.array([1.0, 0.0, 0.0]), np.array([-1.0, 0.0, 0.0]), ABSORPTION)
        self.assertAlmostEqual(float(value), -1.0)

    def test_success_symmetry(self):
        model = default_model().with_params(electron=make_dispersion("quadratic_plus_eps_cos", eps=0.1))
        rng = np.random.default_rng(7)
        p, k = rng.normal(size=(100, 3)), rng.normal(size=(100, 3))
        for sigma in (EMISSION, ABSORPTION):
            np.testing.assert_allclose(phi(model, p, k, sigma), phi(model, -p, -k, sigma), rtol=0, atol=1e-12)


class TestModel(SimpleTestCase):
    def test_failure_weak_coupling_linkage(self):
        with self.assertRaises(ModelError):
            default_model(lam=0.5, epsilon=0.1, weak_coupling=True)

    def test_success_weak_coupling_linkage(self):
        model = default_model(lam=math.sqrt(0.01), epsilon=0.01, weak_coupling=True)
        self.assertTrue(model.weak_coupling)

    def test_success_low_dimension_is_flagged(self):
        with self.assertLogs("physics.model", level="WARNING"):
            model = default_model(dimension=1)
        self.assertTrue(model.oracle_only)

    def test_success_build_from_section(self):
        section = {
            "dimension": 3,
            "electron": "quadratic",
            "phonon": "acoustic_soft",
            "phonon.gap": 1.5,
            "phonon.velocity": 0.1,
            "coupling": "gaussian",
            "coupling.width": 0.8,
            "beta": 2.0,
        }
        model = build_model(section)
        self.assertEqual(model.phonon.name, "acoustic_soft")
        self.assertEqual(model.phonon.params["gap"], 1.5)
        self.assertAlmostEqual(float(model.omega(np.zeros(3))), 1.5)
        self.assertEqual(model.beta, 2.0)

    def test_failure_unknown_dispersion(self):
        with self.assertRaises(ModelError):
            build_model({"electron": "graphene"})

    def test_success_vertex_weight_split(self):
        model = default_model()
        k = np.array([[0.3, -0.2, 0.1], [1.0, 0.0, 0.5]])
        gap = model.vertex_weight(k, EMISSION) - model.vertex_weight(k, ABSORPTION)
        np.testing.assert_allclose(gap, model.Q(k) ** 2, rtol=1e-12)


class TestCountCriticalPoints(SimpleTestCase):
    def test_success_single_minimum(self):
        x = np.linspace(-3.0, 3.0, 13)
        X, Y = np.meshgrid(x, x, indexing="ij")
        self.assertEqual(count_critical_points((X**2 + Y**2).ravel(), 13, 0.5, 2), 1)

    def test_success_maximum_counted(self):
        x = np.linspace(-3.0, 3.0, 12)
        self.assertEqual(count_critical_points(x**3 - 3.0 * x, 12, x[1] - x[0], 1), 2)

    def test_success_saddle_counted(self):
        x = np.linspace(-2.0, 2.0, 16)
        X, Y = np.meshgrid(x, x, indexing="ij")
        values = (X**2 - 1.0) ** 2 + Y**2
        self.assertEqual(count_critical_points(values.ravel(), 16, x[1] - x[0], 2), 3)


class TestValidateAssumptions(SimpleTestCase):
    def setUp(self):
        self.grid = GridSpec(k_max=6.0, points=13, step=1e-2)

    def test_success_default_model(self):
        report = validate_assumptions(default_model(), self.grid)
        self.assertTrue(report.passed, report.failures())
        self.assertAlmostEqual(report["hessian"].measured, 1.0, places=5)
        self.assertEqual(report.max_order, 4)
        self.assertEqual(
            set(report.checks),
            {
                "symmetry",
                "electron_growth",
                "phonon_growth",
                "coercivity",
                "hessian",
                "decay",
                "bath_gap",
                "critical_point",
            },
        )

    def test_failure_soft_hessian(self):
        model = default_model(mu=-1.0).with_params(phonon=quadratic(curvature=0.9))
        report = validate_assumptions(model, self.grid)
        self.assertFalse(report["hessian"].passed)
        self.assertAlmostEqual(report["hessian"].measured, 0.1, places=5)

    def test_failure_constant_coupling_does_not_decay(self):
        model = default_model(coupling=constant(1.0))
        report = validate_assumptions(model, self.grid)
        self.assertFalse(report["decay"].passed)
        self.assertTrue(report["hessian"].passed)

    def test_failure_grid_too_coarse(self):
        with self.assertRaises(GridTooCoarse):
            validate_assumptions(default_model(), GridSpec(k_max=6.0, points=13, step=0.6))
        with self.assertRaises(GridTooCoarse):
            validate_assumptions(default_model(), GridSpec(k_max=6.0, points=2, step=1e-2))

    def test_success_one_dimensional_orders(self):
        report = validate_assumptions(default_model(dimension=1), GridSpec(k_max=6.0, points=25, step=1e-2))
        self.assertEqual(report.max_order, 2)
        self.assertTrue(report["critical_point"].passed)

    def test_failure_duplicate_check(self):
        report = AssumptionReport()
        report.add(AssumptionCheck("symmetry", True, 0.0))
        with self.assertRaises(ValueError):
            report.add(AssumptionCheck("symmetry", True, 0.0))
